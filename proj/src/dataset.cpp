#include "guitar/dataset.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "guitar/rng.hpp"
#include "io_util.hpp"

namespace guitar {

namespace {

void check_finite(float v, const std::string& where) {
    if (!std::isfinite(v)) {
        throw std::runtime_error("non-finite value in " + where);
    }
}

size_t stream_size(std::ifstream& in) {
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    return size < 0 ? 0 : static_cast<size_t>(size);
}

VectorDataset load_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open dataset file: " + path);
    }
    const size_t file_size = stream_size(in);
    VectorDataset ds;
    const uint32_t count = detail::read_u32(in, path + " header");
    ds.dim = detail::read_u32(in, path + " header");
    if (count > 0 && ds.dim == 0) {
        throw std::runtime_error(path + ": zero dimension with nonzero count");
    }
    const size_t total = static_cast<size_t>(count) * ds.dim;
    if (file_size != 8 + total * 4) {
        throw std::runtime_error(path + ": file size does not match header (" +
                                 std::to_string(count) + " x " + std::to_string(ds.dim) +
                                 " vectors declared)");
    }
    ds.values.resize(total);
    for (size_t i = 0; i < total; ++i) {
        ds.values[i] = detail::read_f32(in, path + " payload");
        check_finite(ds.values[i], path);
    }
    return ds;
}

VectorDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open dataset file: " + path);
    }
    VectorDataset ds;
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == EOF) break; // trailing newline
        std::vector<float> vals;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            size_t pos = 0;
            float v;
            try {
                v = std::stof(field, &pos);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ": unparsable value '" + field +
                                         "' in row " + std::to_string(row));
            }
            while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) pos++;
            if (pos != field.size()) {
                throw std::runtime_error(path + ": unparsable value '" + field +
                                         "' in row " + std::to_string(row));
            }
            check_finite(v, path + " row " + std::to_string(row));
            vals.push_back(v);
        }
        if (row == 0) {
            ds.dim = static_cast<uint32_t>(vals.size());
            if (ds.dim == 0) {
                throw std::runtime_error(path + ": first row is empty");
            }
        } else if (vals.size() != ds.dim) {
            throw std::runtime_error(path + ": file declares " + std::to_string(ds.dim) +
                                     ", row has " + std::to_string(vals.size()) +
                                     " (row " + std::to_string(row) + ")");
        }
        ds.values.insert(ds.values.end(), vals.begin(), vals.end());
        ++row;
    }
    if (row == 0) {
        throw std::runtime_error(path + ": empty csv file, cannot infer dimension");
    }
    return ds;
}

} // namespace

FileFormat parse_file_format(const std::string& name) {
    if (name == "raw-f32") return FileFormat::RawF32;
    if (name == "csv" || name == "text-csv") return FileFormat::TextCsv;
    throw std::runtime_error("unknown dataset format: " + name);
}

Distribution parse_distribution(const std::string& name) {
    if (name == "uniform") return Distribution::Uniform;
    if (name == "gaussian") return Distribution::Gaussian;
    throw std::runtime_error("unknown distribution: " + name);
}

VectorDataset load_dataset(const std::string& path, FileFormat format) {
    return format == FileFormat::RawF32 ? load_raw(path) : load_csv(path);
}

void save_dataset(const VectorDataset& ds, const std::string& path, FileFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    if (format == FileFormat::RawF32) {
        detail::write_u32(out, ds.count());
        detail::write_u32(out, ds.dim);
        for (float v : ds.values) {
            detail::write_f32(out, v);
        }
    } else {
        char buf[64];
        for (uint32_t i = 0; i < ds.count(); ++i) {
            auto r = ds.row(i);
            for (uint32_t j = 0; j < ds.dim; ++j) {
                // %.9g round-trips any float32 exactly
                std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(r[j]));
                out << buf;
                if (j + 1 < ds.dim) out << ',';
            }
            out << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

VectorDataset generate_synthetic(uint32_t n, uint32_t dim, uint64_t seed,
                                 Distribution dist) {
    if (dim == 0) {
        throw std::runtime_error("generate_synthetic: dim must be positive");
    }
    VectorDataset ds;
    ds.dim = dim;
    ds.values.resize(static_cast<size_t>(n) * dim);
    Rng rng(seed);
    for (auto& v : ds.values) {
        v = static_cast<float>(dist == Distribution::Uniform ? rng.uniform(-1.0, 1.0)
                                                              : rng.gaussian());
    }
    return ds;
}

uint64_t dataset_fingerprint(const VectorDataset& ds) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](uint32_t word) {
        for (int s = 0; s < 32; s += 8) {
            h ^= (word >> s) & 0xffu;
            h *= 0x100000001b3ull;
        }
    };
    mix(ds.count());
    mix(ds.dim);
    for (float v : ds.values) {
        mix(std::bit_cast<uint32_t>(v));
    }
    return h;
}

GroundTruth load_groundtruth(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open ground-truth file: " + path);
    }
    const size_t file_size = stream_size(in);
    GroundTruth gt;
    const uint32_t queries = detail::read_u32(in, path + " header");
    gt.k = detail::read_u32(in, path + " header");
    if (queries > 0 && gt.k == 0) {
        throw std::runtime_error(path + ": zero k with nonzero query count");
    }
    const size_t total = static_cast<size_t>(queries) * gt.k;
    if (file_size != 8 + total * 8) {
        throw std::runtime_error(path + ": file size does not match header (" +
                                 std::to_string(queries) + " queries x k=" +
                                 std::to_string(gt.k) + " declared)");
    }
    gt.indices.resize(total);
    gt.scores.resize(total);
    for (size_t i = 0; i < total; ++i) {
        gt.indices[i] = detail::read_u32(in, path + " payload");
        gt.scores[i] = static_cast<double>(detail::read_f32(in, path + " payload"));
    }
    return gt;
}

void save_groundtruth(const GroundTruth& gt, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    detail::write_u32(out, gt.query_count());
    detail::write_u32(out, gt.k);
    for (size_t i = 0; i < gt.indices.size(); ++i) {
        detail::write_u32(out, gt.indices[i]);
        detail::write_f32(out, static_cast<float>(gt.scores[i]));
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

} // namespace guitar
