#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace guitar {

enum class MeasureKind { InnerProduct, Cosine, NegL2, MlpSigmoid, DeepFm };

MeasureKind parse_measure_kind(const std::string& name);
std::string measure_kind_name(MeasureKind kind);

// A binary scoring function f(x, q) with an analytic gradient d f / d x.
//
// Kinds:
//   inner-product  f = x.q                               (uncapped)
//   cosine         f = x.q / (|x||q|)                    (uncapped)
//   neg-l2         f = -|x - q|^2                        (uncapped)
//   mlp-sigmoid    MLP over [x ; q], ReLU hidden layers, sigmoid output
//   deepfm         sigmoid( x[0:F].q[0:F] + MLP([x[F:] ; q[F:]]) ),
//                  F = fm_dim, MLP has ReLU hidden layers and a linear
//                  scalar output
//
// Weight layout for a layer d_in -> d_out: d_out*d_in weights row-major
// (output-major) followed by d_out biases; layers concatenated in order.
// layer_dims holds the full dim chain including input and the final 1.
// All arithmetic runs in double; weights are stored as float32.
struct MeasureSpec {
    MeasureKind kind = MeasureKind::InnerProduct;
    std::vector<uint32_t> layer_dims; // mlp-sigmoid and the deepfm deep part
    uint32_t fm_dim = 0;              // deepfm only
    uint32_t deep_dim = 0;            // deepfm only
    uint32_t dim = 0;                 // closed-form kinds: dim of x and q
    std::vector<float> weights;
    bool capped = false;

    // expected dim of both x and q
    uint32_t x_dim() const;
    size_t expected_weight_count() const;
    void validate() const;
};

struct GradResult {
    double value = 0.0;
    std::vector<double> grad; // d f / d x, same dim as x
};

// Reusable forward/backward scratch. One per thread or per search call.
struct MeasureWorkspace {
    std::vector<double> acts;   // activations, all layers concatenated
    std::vector<double> preact; // pre-activation values, hidden + output
    std::vector<double> delta;
};

double evaluate(const MeasureSpec& spec, std::span<const float> x,
                std::span<const float> q, MeasureWorkspace& ws);
double evaluate(const MeasureSpec& spec, std::span<const float> x,
                std::span<const float> q);

// value is bitwise-identical to evaluate() on the same inputs.
void evaluate_with_grad(const MeasureSpec& spec, std::span<const float> x,
                        std::span<const float> q, MeasureWorkspace& ws,
                        GradResult& out);
GradResult evaluate_with_grad(const MeasureSpec& spec, std::span<const float> x,
                              std::span<const float> q);

// Smallest |pre-activation| over all ReLU units for this input, +inf when
// the measure has none. Gradient checks skip inputs close to a kink.
double relu_boundary_margin(const MeasureSpec& spec, std::span<const float> x,
                            std::span<const float> q);

// Text header (kind, dims, weight count), a "payload" line, then the raw
// little-endian float32 weights.
MeasureSpec load_measure(const std::string& path);
void save_measure(const MeasureSpec& spec, const std::string& path);

// Weights drawn gaussian with sigma = 1/sqrt(fan_in) per layer.
MeasureSpec make_random_mlp(const std::vector<uint32_t>& layer_dims, uint64_t seed);
MeasureSpec make_random_deepfm(uint32_t fm_dim, uint32_t deep_dim,
                               const std::vector<uint32_t>& hidden_dims,
                               uint64_t seed);
// Convenience: default architectures keyed by kind and vector dim.
MeasureSpec make_random_measure(MeasureKind kind, uint32_t dim, uint64_t seed);

} // namespace guitar
