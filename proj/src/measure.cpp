#include "guitar/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "guitar/rng.hpp"
#include "io_util.hpp"

namespace guitar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct LayerOffsets {
    size_t act;    // input activations of this layer in ws.acts
    size_t pre;    // pre-activations of this layer's output in ws.preact
    size_t weight; // W block start; biases follow the dout*din weights
};

// A ReLU-hidden, linear-scalar-output chain described by `dims` over the
// weight block starting at `w`.
struct MlpView {
    std::span<const uint32_t> dims;
    const float* w;
};

size_t chain_weight_count(std::span<const uint32_t> dims) {
    size_t total = 0;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        total += static_cast<size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
    }
    return total;
}

size_t chain_act_count(std::span<const uint32_t> dims) {
    size_t total = 0;
    for (uint32_t d : dims) total += d;
    return total;
}

size_t chain_pre_count(std::span<const uint32_t> dims) {
    size_t total = 0;
    for (size_t l = 1; l < dims.size(); ++l) total += dims[l];
    return total;
}

LayerOffsets layer_offsets(std::span<const uint32_t> dims, size_t layer) {
    LayerOffsets o{0, 0, 0};
    for (size_t l = 0; l < layer; ++l) {
        o.act += dims[l];
        o.pre += dims[l + 1];
        o.weight += static_cast<size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
    }
    return o;
}

// Forward pass; ws.acts[0..dims[0]) must already hold the input. Returns the
// final linear scalar (dims.back() == 1).
double mlp_forward(const MlpView& m, MeasureWorkspace& ws) {
    const size_t layers = m.dims.size() - 1;
    size_t aoff = 0, poff = 0, woff = 0;
    for (size_t l = 0; l < layers; ++l) {
        const uint32_t din = m.dims[l];
        const uint32_t dout = m.dims[l + 1];
        const double* in = ws.acts.data() + aoff;
        double* z = ws.preact.data() + poff;
        double* out = ws.acts.data() + aoff + din;
        const float* W = m.w + woff;
        const float* b = W + static_cast<size_t>(dout) * din;
        const bool last = (l + 1 == layers);
        for (uint32_t j = 0; j < dout; ++j) {
            double acc = static_cast<double>(b[j]);
            const float* wrow = W + static_cast<size_t>(j) * din;
            for (uint32_t i = 0; i < din; ++i) {
                acc += static_cast<double>(wrow[i]) * in[i];
            }
            z[j] = acc;
            out[j] = last ? acc : (acc > 0.0 ? acc : 0.0);
        }
        aoff += din;
        poff += dout;
        woff += static_cast<size_t>(dout) * din + dout;
    }
    return ws.acts[aoff];
}

// Backward from d(out)/d(z_last) = out_delta into d(out)/d(input).
void mlp_backward(const MlpView& m, MeasureWorkspace& ws, double out_delta,
                  std::span<double> input_grad) {
    const size_t layers = m.dims.size() - 1;
    ws.delta[layer_offsets(m.dims, layers - 1).pre] = out_delta;
    for (size_t l = layers; l-- > 0;) {
        const LayerOffsets o = layer_offsets(m.dims, l);
        const uint32_t din = m.dims[l];
        const uint32_t dout = m.dims[l + 1];
        const float* W = m.w + o.weight;
        const double* dl = ws.delta.data() + o.pre;
        if (l == 0) {
            for (uint32_t i = 0; i < din; ++i) {
                double acc = 0.0;
                for (uint32_t j = 0; j < dout; ++j) {
                    acc += static_cast<double>(W[static_cast<size_t>(j) * din + i]) * dl[j];
                }
                input_grad[i] = acc;
            }
        } else {
            const LayerOffsets prev = layer_offsets(m.dims, l - 1);
            const double* zprev = ws.preact.data() + prev.pre;
            double* dprev = ws.delta.data() + prev.pre;
            for (uint32_t i = 0; i < din; ++i) {
                double acc = 0.0;
                for (uint32_t j = 0; j < dout; ++j) {
                    acc += static_cast<double>(W[static_cast<size_t>(j) * din + i]) * dl[j];
                }
                dprev[i] = zprev[i] > 0.0 ? acc : 0.0;
            }
        }
    }
}

void ensure_workspace(const MeasureSpec& spec, MeasureWorkspace& ws) {
    if (spec.layer_dims.empty()) return;
    const size_t acts = chain_act_count(spec.layer_dims);
    const size_t pres = chain_pre_count(spec.layer_dims);
    if (ws.acts.size() < acts) ws.acts.resize(acts);
    if (ws.preact.size() < pres) ws.preact.resize(pres);
    if (ws.delta.size() < pres) ws.delta.resize(pres);
}

void check_dims(const MeasureSpec& spec, std::span<const float> x,
                std::span<const float> q) {
    const uint32_t want = spec.x_dim();
    if (x.size() != want || q.size() != want) {
        throw std::invalid_argument("measure " + measure_kind_name(spec.kind) +
                                    " expects dim " + std::to_string(want) + ", got x=" +
                                    std::to_string(x.size()) + " q=" +
                                    std::to_string(q.size()));
    }
}

struct ForwardState {
    double value = 0.0;
    double sigma_prime = 0.0; // f*(1-f) for capped kinds
};

// The one forward path shared by evaluate and evaluate_with_grad so both
// produce bitwise-identical values.
ForwardState forward(const MeasureSpec& spec, std::span<const float> x,
                     std::span<const float> q, MeasureWorkspace& ws) {
    check_dims(spec, x, q);
    ForwardState st;
    switch (spec.kind) {
    case MeasureKind::InnerProduct: {
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            s += static_cast<double>(x[i]) * static_cast<double>(q[i]);
        }
        st.value = s;
        return st;
    }
    case MeasureKind::Cosine: {
        double s = 0.0, nx = 0.0, nq = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            const double xi = x[i], qi = q[i];
            s += xi * qi;
            nx += xi * xi;
            nq += qi * qi;
        }
        nx = std::sqrt(nx);
        nq = std::sqrt(nq);
        st.value = (nx <= 0.0 || nq <= 0.0) ? 0.0 : s / (nx * nq);
        return st;
    }
    case MeasureKind::NegL2: {
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            const double d = static_cast<double>(x[i]) - static_cast<double>(q[i]);
            s += d * d;
        }
        st.value = -s;
        return st;
    }
    case MeasureKind::MlpSigmoid: {
        ensure_workspace(spec, ws);
        const uint32_t d = spec.x_dim();
        for (uint32_t i = 0; i < d; ++i) ws.acts[i] = x[i];
        for (uint32_t i = 0; i < d; ++i) ws.acts[d + i] = q[i];
        const double z = mlp_forward({spec.layer_dims, spec.weights.data()}, ws);
        st.value = sigmoid(z);
        st.sigma_prime = st.value * (1.0 - st.value);
        return st;
    }
    case MeasureKind::DeepFm: {
        ensure_workspace(spec, ws);
        double fm = 0.0;
        for (uint32_t i = 0; i < spec.fm_dim; ++i) {
            fm += static_cast<double>(x[i]) * static_cast<double>(q[i]);
        }
        for (uint32_t i = 0; i < spec.deep_dim; ++i) {
            ws.acts[i] = x[spec.fm_dim + i];
        }
        for (uint32_t i = 0; i < spec.deep_dim; ++i) {
            ws.acts[spec.deep_dim + i] = q[spec.fm_dim + i];
        }
        const double z = mlp_forward({spec.layer_dims, spec.weights.data()}, ws);
        st.value = sigmoid(fm + z);
        st.sigma_prime = st.value * (1.0 - st.value);
        return st;
    }
    }
    throw std::logic_error("unreachable measure kind");
}

} // namespace

MeasureKind parse_measure_kind(const std::string& name) {
    if (name == "inner-product") return MeasureKind::InnerProduct;
    if (name == "cosine") return MeasureKind::Cosine;
    if (name == "neg-l2") return MeasureKind::NegL2;
    if (name == "mlp-sigmoid") return MeasureKind::MlpSigmoid;
    if (name == "deepfm") return MeasureKind::DeepFm;
    throw std::runtime_error("unknown measure kind: " + name);
}

std::string measure_kind_name(MeasureKind kind) {
    switch (kind) {
    case MeasureKind::InnerProduct: return "inner-product";
    case MeasureKind::Cosine: return "cosine";
    case MeasureKind::NegL2: return "neg-l2";
    case MeasureKind::MlpSigmoid: return "mlp-sigmoid";
    case MeasureKind::DeepFm: return "deepfm";
    }
    throw std::logic_error("unreachable measure kind");
}

uint32_t MeasureSpec::x_dim() const {
    switch (kind) {
    case MeasureKind::InnerProduct:
    case MeasureKind::Cosine:
    case MeasureKind::NegL2:
        return dim;
    case MeasureKind::MlpSigmoid:
        return layer_dims.empty() ? 0 : layer_dims.front() / 2;
    case MeasureKind::DeepFm:
        return fm_dim + deep_dim;
    }
    throw std::logic_error("unreachable measure kind");
}

size_t MeasureSpec::expected_weight_count() const {
    return chain_weight_count(layer_dims);
}

void MeasureSpec::validate() const {
    switch (kind) {
    case MeasureKind::InnerProduct:
    case MeasureKind::Cosine:
    case MeasureKind::NegL2:
        if (dim == 0) throw std::runtime_error("measure: dim must be positive");
        if (!weights.empty() || !layer_dims.empty()) {
            throw std::runtime_error("measure: closed-form kind carries no weights");
        }
        if (capped) throw std::runtime_error("measure: closed-form kinds are uncapped");
        return;
    case MeasureKind::MlpSigmoid:
        if (layer_dims.size() < 2 || layer_dims.back() != 1) {
            throw std::runtime_error("mlp-sigmoid: layers must end in a single output");
        }
        if (layer_dims.front() == 0 || layer_dims.front() % 2 != 0) {
            throw std::runtime_error("mlp-sigmoid: input layer must be even (holds [x ; q])");
        }
        break;
    case MeasureKind::DeepFm:
        if (fm_dim == 0 || deep_dim == 0) {
            throw std::runtime_error("deepfm: fm_dim and deep_dim must be positive");
        }
        if (layer_dims.size() < 2 || layer_dims.front() != 2 * deep_dim ||
            layer_dims.back() != 1) {
            throw std::runtime_error("deepfm: deep layers must run from 2*deep_dim to 1");
        }
        break;
    }
    for (uint32_t d : layer_dims) {
        if (d == 0) throw std::runtime_error("measure: zero layer dimension");
    }
    if (!capped) throw std::runtime_error("measure: neural kinds are capped");
    if (weights.size() != expected_weight_count()) {
        throw std::runtime_error("measure: weight count " + std::to_string(weights.size()) +
                                 " does not match architecture (" +
                                 std::to_string(expected_weight_count()) + " expected)");
    }
    for (float w : weights) {
        if (!std::isfinite(w)) throw std::runtime_error("measure: non-finite weight");
    }
}

double evaluate(const MeasureSpec& spec, std::span<const float> x,
                std::span<const float> q, MeasureWorkspace& ws) {
    return forward(spec, x, q, ws).value;
}

double evaluate(const MeasureSpec& spec, std::span<const float> x,
                std::span<const float> q) {
    MeasureWorkspace ws;
    return evaluate(spec, x, q, ws);
}

void evaluate_with_grad(const MeasureSpec& spec, std::span<const float> x,
                        std::span<const float> q, MeasureWorkspace& ws,
                        GradResult& out) {
    const ForwardState st = forward(spec, x, q, ws);
    out.value = st.value;
    out.grad.assign(x.size(), 0.0);
    switch (spec.kind) {
    case MeasureKind::InnerProduct:
        for (size_t i = 0; i < x.size(); ++i) out.grad[i] = q[i];
        return;
    case MeasureKind::Cosine: {
        double s = 0.0, nx2 = 0.0, nq2 = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            const double xi = x[i], qi = q[i];
            s += xi * qi;
            nx2 += xi * xi;
            nq2 += qi * qi;
        }
        const double nx = std::sqrt(nx2), nq = std::sqrt(nq2);
        if (nx <= 0.0 || nq <= 0.0) return; // value 0, gradient 0
        for (size_t i = 0; i < x.size(); ++i) {
            out.grad[i] = static_cast<double>(q[i]) / (nx * nq) -
                          s * static_cast<double>(x[i]) / (nx2 * nx * nq);
        }
        return;
    }
    case MeasureKind::NegL2:
        for (size_t i = 0; i < x.size(); ++i) {
            out.grad[i] = -2.0 * (static_cast<double>(x[i]) - static_cast<double>(q[i]));
        }
        return;
    case MeasureKind::MlpSigmoid: {
        std::vector<double> igrad(spec.layer_dims.front());
        mlp_backward({spec.layer_dims, spec.weights.data()}, ws, st.sigma_prime, igrad);
        const uint32_t d = spec.x_dim();
        for (uint32_t i = 0; i < d; ++i) out.grad[i] = igrad[i];
        return;
    }
    case MeasureKind::DeepFm: {
        for (uint32_t i = 0; i < spec.fm_dim; ++i) {
            out.grad[i] = st.sigma_prime * static_cast<double>(q[i]);
        }
        std::vector<double> igrad(spec.layer_dims.front());
        mlp_backward({spec.layer_dims, spec.weights.data()}, ws, st.sigma_prime, igrad);
        for (uint32_t i = 0; i < spec.deep_dim; ++i) {
            out.grad[spec.fm_dim + i] = igrad[i];
        }
        return;
    }
    }
    throw std::logic_error("unreachable measure kind");
}

GradResult evaluate_with_grad(const MeasureSpec& spec, std::span<const float> x,
                              std::span<const float> q) {
    MeasureWorkspace ws;
    GradResult out;
    evaluate_with_grad(spec, x, q, ws, out);
    return out;
}

double relu_boundary_margin(const MeasureSpec& spec, std::span<const float> x,
                            std::span<const float> q) {
    if (spec.layer_dims.empty()) return kInf;
    MeasureWorkspace ws;
    (void)forward(spec, x, q, ws);
    // hidden layers only; the final layer is linear
    double margin = kInf;
    for (size_t l = 1; l + 1 < spec.layer_dims.size(); ++l) {
        const LayerOffsets o = layer_offsets(spec.layer_dims, l - 1);
        for (uint32_t j = 0; j < spec.layer_dims[l]; ++j) {
            margin = std::min(margin, std::abs(ws.preact[o.pre + j]));
        }
    }
    return margin;
}

MeasureSpec load_measure(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open measure file: " + path);
    }
    MeasureSpec spec;
    std::string line;
    bool saw_magic = false, saw_payload = false;
    size_t declared = 0;
    bool saw_count = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (!saw_magic) {
            int version = 0;
            if (key != "guitar-measure" || !(ss >> version) || version != 1) {
                throw std::runtime_error(path + ": not a measure file (bad magic line)");
            }
            saw_magic = true;
            continue;
        }
        if (key == "payload") {
            saw_payload = true;
            break;
        } else if (key == "kind") {
            std::string name;
            if (!(ss >> name)) throw std::runtime_error(path + ": malformed kind line");
            spec.kind = parse_measure_kind(name);
        } else if (key == "dim") {
            if (!(ss >> spec.dim)) throw std::runtime_error(path + ": malformed dim line");
        } else if (key == "layers") {
            uint32_t d;
            while (ss >> d) spec.layer_dims.push_back(d);
            if (spec.layer_dims.empty()) {
                throw std::runtime_error(path + ": malformed layers line");
            }
        } else if (key == "fm_dim") {
            if (!(ss >> spec.fm_dim)) throw std::runtime_error(path + ": malformed fm_dim line");
        } else if (key == "deep_dim") {
            if (!(ss >> spec.deep_dim)) throw std::runtime_error(path + ": malformed deep_dim line");
        } else if (key == "capped") {
            int c = 0;
            if (!(ss >> c)) throw std::runtime_error(path + ": malformed capped line");
            spec.capped = (c != 0);
        } else if (key == "weights") {
            if (!(ss >> declared)) throw std::runtime_error(path + ": malformed weights line");
            saw_count = true;
        } else {
            throw std::runtime_error(path + ": unknown header key '" + key + "'");
        }
    }
    if (!saw_payload || !saw_count) {
        throw std::runtime_error(path + ": truncated header (missing payload marker)");
    }
    if (declared != spec.expected_weight_count()) {
        throw std::runtime_error(path + ": weight count " + std::to_string(declared) +
                                 " does not match architecture (" +
                                 std::to_string(spec.expected_weight_count()) + " expected)");
    }
    if (declared > (1u << 30)) {
        throw std::runtime_error(path + ": implausible weight count");
    }
    spec.weights.resize(declared);
    for (size_t i = 0; i < declared; ++i) {
        spec.weights[i] = detail::read_f32(in, path + " weights");
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw std::runtime_error(path + ": trailing bytes after weight payload");
    }
    spec.validate();
    return spec;
}

void save_measure(const MeasureSpec& spec, const std::string& path) {
    spec.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    out << "guitar-measure 1\n";
    out << "kind " << measure_kind_name(spec.kind) << "\n";
    if (spec.layer_dims.empty()) {
        out << "dim " << spec.dim << "\n";
    } else {
        out << "layers";
        for (uint32_t d : spec.layer_dims) out << ' ' << d;
        out << "\n";
    }
    if (spec.kind == MeasureKind::DeepFm) {
        out << "fm_dim " << spec.fm_dim << "\n";
        out << "deep_dim " << spec.deep_dim << "\n";
    }
    out << "capped " << (spec.capped ? 1 : 0) << "\n";
    out << "weights " << spec.weights.size() << "\n";
    out << "payload\n";
    for (float w : spec.weights) {
        detail::write_f32(out, w);
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

namespace {

void fill_chain_weights(std::vector<float>& weights, std::span<const uint32_t> dims,
                        Rng& rng) {
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const double sigma = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        const size_t block = static_cast<size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
        for (size_t i = 0; i < block; ++i) {
            weights.push_back(static_cast<float>(rng.gaussian() * sigma));
        }
    }
}

} // namespace

MeasureSpec make_random_mlp(const std::vector<uint32_t>& layer_dims, uint64_t seed) {
    MeasureSpec spec;
    spec.kind = MeasureKind::MlpSigmoid;
    spec.layer_dims = layer_dims;
    spec.capped = true;
    Rng rng(seed);
    spec.weights.reserve(spec.expected_weight_count());
    fill_chain_weights(spec.weights, spec.layer_dims, rng);
    spec.validate();
    return spec;
}

MeasureSpec make_random_deepfm(uint32_t fm_dim, uint32_t deep_dim,
                               const std::vector<uint32_t>& hidden_dims, uint64_t seed) {
    MeasureSpec spec;
    spec.kind = MeasureKind::DeepFm;
    spec.fm_dim = fm_dim;
    spec.deep_dim = deep_dim;
    spec.layer_dims.push_back(2 * deep_dim);
    for (uint32_t h : hidden_dims) spec.layer_dims.push_back(h);
    spec.layer_dims.push_back(1);
    spec.capped = true;
    Rng rng(seed);
    spec.weights.reserve(spec.expected_weight_count());
    fill_chain_weights(spec.weights, spec.layer_dims, rng);
    spec.validate();
    return spec;
}

MeasureSpec make_random_measure(MeasureKind kind, uint32_t dim, uint64_t seed) {
    switch (kind) {
    case MeasureKind::InnerProduct:
    case MeasureKind::Cosine:
    case MeasureKind::NegL2: {
        MeasureSpec spec;
        spec.kind = kind;
        spec.dim = dim;
        spec.validate();
        return spec;
    }
    case MeasureKind::MlpSigmoid:
        return make_random_mlp({2 * dim, 32, 1}, seed);
    case MeasureKind::DeepFm: {
        if (dim <= 8) {
            throw std::runtime_error("deepfm default split needs dim > 8");
        }
        return make_random_deepfm(8, dim - 8, {32, 32}, seed);
    }
    }
    throw std::logic_error("unreachable measure kind");
}

} // namespace guitar
