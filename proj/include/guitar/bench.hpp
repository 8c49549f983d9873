#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "guitar/dataset.hpp"
#include "guitar/measure.hpp"
#include "guitar/search.hpp"

namespace guitar {

struct RecallBreakdown {
    uint32_t exact_hits = 0;
    uint32_t near_tie_hits = 0; // score within 1e-9 of the k-th true score
    double value = 0.0;         // (exact + near-tie) / k
};

RecallBreakdown recall_detail(const TopKResult& result,
                              std::span<const uint32_t> truth_indices,
                              std::span<const double> truth_scores, uint32_t k);
double recall(const TopKResult& result, std::span<const uint32_t> truth_indices,
              std::span<const double> truth_scores, uint32_t k);

struct SweepGrid {
    std::vector<uint32_t> m_values;
    std::vector<uint32_t> k_construction_values;
    std::vector<uint32_t> k_search_values;
    std::vector<double> alpha_values;        // guitar-angle / guitar-projection
    std::vector<uint32_t> fixed_count_values; // guitar-fixed-count
    std::vector<Strategy> strategies;
    std::string queries_path;
    uint32_t k = 10;
    uint64_t graph_seed = 0;

    void validate() const;
};

SweepGrid load_grid(const std::string& path);

struct RunRecord {
    Strategy strategy = Strategy::Baseline;
    double alpha = 1.0;       // meaningful for guitar-angle / guitar-projection
    uint32_t fixed_count = 0; // meaningful for guitar-fixed-count
    uint32_t m = 0;
    uint32_t k_construction = 0;
    uint32_t k_search = 0;
    uint32_t k = 0;
    uint64_t dataset_fingerprint = 0;
    double recall = 0.0; // mean over queries
    double qps = 0.0;    // queries / summed search wall time
    double mean_nn_evals = 0.0;
    double mean_grad_evals = 0.0;
    double mean_total_cost = 0.0; // mean_nn_evals + 2 * mean_grad_evals
    double mean_hops = 0.0;
    uint64_t near_tie_hits = 0; // summed over queries

    // baseline / guitar-angle-1.01 / guitar-fixed-4 style label
    std::string variant_label() const;
};

// One record per (graph params, strategy variant, k_search). Graphs are
// built once per (M, k_construction) and reused. The query loop is
// single-threaded unless threads > 1; counters and recall do not depend on
// the thread count, only the timing does.
std::vector<RunRecord> run_sweep(const SweepGrid& grid, const VectorDataset& data,
                                 const VectorDataset& queries, const MeasureSpec& spec,
                                 const GroundTruth& truth, unsigned threads = 1,
                                 const std::function<void(const RunRecord&)>& on_record = {});

enum class Metric { Qps, TotalCost };

Metric parse_metric(const std::string& name);

struct ParetoPoint {
    double recall_bucket_upper = 0.0;
    double value = 0.0;
};

// 100 even buckets over [0, max-recall]; per bucket the best metric value
// (max qps or min total cost); empty buckets omitted.
struct ParetoCurve {
    Metric metric = Metric::Qps;
    double max_recall = 0.0;
    std::vector<ParetoPoint> points;
};

ParetoCurve pareto_curve(std::span<const RunRecord> records, Metric metric);

struct BreakdownRow {
    std::string variant;
    double level = 0.0;
    bool reachable = false; // some record met the recall level
    double nn_evals = 0.0;
    double grad_evals = 0.0;
    double total_cost = 0.0;
    double qps = 0.0;
};

// Per (variant, level): the cheapest record (min total cost) whose recall
// meets the level; unreachable levels yield a row with reachable == false.
std::vector<BreakdownRow> breakdown_table(std::span<const RunRecord> records,
                                          std::span<const double> levels);

void write_records_csv(std::span<const RunRecord> records, const std::string& path);
std::vector<RunRecord> read_records_csv(const std::string& path);
void write_curve_json(const ParetoCurve& curve, const std::string& path);
void write_breakdown_csv(std::span<const BreakdownRow> rows, const std::string& path);
void write_breakdown_json(std::span<const BreakdownRow> rows, const std::string& path);
std::string format_breakdown(std::span<const BreakdownRow> rows);

} // namespace guitar
