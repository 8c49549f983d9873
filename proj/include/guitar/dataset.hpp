#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace guitar {

struct DenseVector {
    std::vector<float> values;

    uint32_t dim() const { return static_cast<uint32_t>(values.size()); }
    std::span<const float> view() const { return values; }
};

enum class FileFormat { RawF32, TextCsv };

FileFormat parse_file_format(const std::string& name);

// Fixed-dimension row-major float32 vectors. Index == identity.
struct VectorDataset {
    uint32_t dim = 0;
    std::vector<float> values; // count()*dim, row-major

    uint32_t count() const {
        return dim == 0 ? 0 : static_cast<uint32_t>(values.size() / dim);
    }
    std::span<const float> row(uint32_t i) const {
        return std::span<const float>(values.data() + static_cast<size_t>(i) * dim, dim);
    }
};

enum class Distribution { Uniform, Gaussian };

Distribution parse_distribution(const std::string& name);

// Binary layout: uint32 count, uint32 dim (little-endian), then count*dim
// float32 row-major. CSV: one comma-separated row per vector, no header.
VectorDataset load_dataset(const std::string& path, FileFormat format);
void save_dataset(const VectorDataset& ds, const std::string& path,
                  FileFormat format = FileFormat::RawF32);

VectorDataset generate_synthetic(uint32_t n, uint32_t dim, uint64_t seed,
                                 Distribution dist);

// FNV-1a over the header and raw float payload; identifies the data a graph
// or ground-truth file was produced from.
uint64_t dataset_fingerprint(const VectorDataset& ds);

// Exact top-k per query, k entries each, sorted by score descending.
struct GroundTruth {
    uint32_t k = 0;
    std::vector<uint32_t> indices; // query_count()*k
    std::vector<double> scores;    // query_count()*k

    uint32_t query_count() const {
        return k == 0 ? 0 : static_cast<uint32_t>(indices.size() / k);
    }
    std::span<const uint32_t> row_indices(uint32_t q) const {
        return std::span<const uint32_t>(indices.data() + static_cast<size_t>(q) * k, k);
    }
    std::span<const double> row_scores(uint32_t q) const {
        return std::span<const double>(scores.data() + static_cast<size_t>(q) * k, k);
    }
};

// Binary layout: uint32 query count, uint32 k, then per query k pairs of
// (uint32 index, float32 score). Scores are narrowed to float32 on disk.
GroundTruth load_groundtruth(const std::string& path);
void save_groundtruth(const GroundTruth& gt, const std::string& path);

} // namespace guitar
