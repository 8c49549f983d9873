#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "guitar/dataset.hpp"
#include "guitar/graph.hpp"
#include "guitar/measure.hpp"

namespace guitar {

enum class Strategy { Baseline, GuitarAngle, GuitarProjection, GuitarFixedCount };

Strategy parse_strategy(const std::string& name);
std::string strategy_name(Strategy s);

enum class RankVariant { Angle, Projection };

struct SearchParams {
    uint32_t k = 10;        // results requested
    uint32_t k_search = 64; // result-pool width
    Strategy strategy = Strategy::Baseline;
    double alpha = 1.0;     // >= 1; +infinity disables pruning entirely
    uint32_t fixed_count = 1; // guitar-fixed-count only

    void validate() const;
};

struct SearchStats {
    uint64_t nn_evals = 0;         // measure evaluations (#NN)
    uint64_t grad_evals = 0;       // gradient computations (#Grad)
    uint64_t hops = 0;             // frontier expansions
    uint64_t pruned_neighbors = 0; // ranked candidates dropped by pruning

    // one gradient costs two forward passes
    double total_cost() const {
        return static_cast<double>(nn_evals) + 2.0 * static_cast<double>(grad_evals);
    }
};

struct TopKEntry {
    uint32_t vertex = 0;
    double score = 0.0;
};

struct TopKResult {
    std::vector<TopKEntry> entries; // score descending, ties by lower index
};

struct RankedNeighbor {
    uint32_t vertex = 0;
    double key = 0.0;
};

// Neighbors of one frontier ordered best-first by their ranking key:
// angle variant ascending (radians), projection variant descending.
struct CandidateSet {
    RankVariant variant = RankVariant::Angle;
    std::vector<RankedNeighbor> items;

    double theta() const { return items.front().key; }
};

struct RankOutcome {
    CandidateSet set;
    bool degenerate_gradient = false; // |grad| <= 1e-12; ranking undefined
};

// Per-expansion log for diagnostics and property checks.
struct ExpansionRecord {
    uint32_t frontier = 0;
    std::vector<uint32_t> neighbor_list;
    CandidateSet ranked;
    CandidateSet pruned;
    bool degenerate_gradient = false;
};

struct SearchResult {
    TopKResult topk;
    SearchStats stats;
    std::vector<uint32_t> visited; // in marking order
};

// Ranks the frontier's neighbors against the gradient direction
// g = df/dx at (x_frontier, q), computing the gradient once:
//   angle:      key(x') = arccos( g.(x'-x) / (|g| |x'-x|) ), clamped to [-1,1]
//   projection: key(x') = g.(x'-x) / |g|
// A duplicate point (x' == x) gets the worst possible key (pi / -inf).
// Ties order by lower vertex index.
RankOutcome rank_neighbors(const MeasureSpec& spec, const VectorDataset& dataset,
                           uint32_t frontier, std::span<const float> q,
                           std::span<const uint32_t> neighbor_list,
                           RankVariant variant, MeasureWorkspace& ws);

// Adaptive pruning around the best key theta:
//   angle:      keep key <= alpha * theta
//   projection: keep key >= theta / alpha; theta <= 0 keeps only the best
// alpha = +infinity keeps everything. Order preserved; the best candidate
// always survives.
CandidateSet prune_neighbors(const CandidateSet& candidates, double alpha);

// Strawman: keep the top fixed_count ranked neighbors.
CandidateSet prune_neighbors_fixed(const CandidateSet& candidates, uint32_t fixed_count);

// Greedy best-first search scoring every probed neighbor with f. The result
// pool is capped at k_search; the search stops when the extracted frontier
// scores below the pool's worst while at least k results are held, or when
// the queue drains. Never computes gradients.
SearchResult search_baseline(const ProximityGraph& graph, const VectorDataset& dataset,
                             const MeasureSpec& spec, std::span<const float> q,
                             const SearchParams& params);

// Bi-level search: per expansion, one gradient at the frontier ranks the
// unvisited neighbors, pruning selects the probable candidate set, and f is
// evaluated only on its members. Expansions with zero or one unvisited
// neighbor skip the gradient (ranking there is a no-op: the best candidate
// always survives pruning). Queue and termination semantics match
// search_baseline. A degenerate gradient falls back to probing every
// neighbor for that expansion.
SearchResult search_guitar(const ProximityGraph& graph, const VectorDataset& dataset,
                           const MeasureSpec& spec, std::span<const float> q,
                           const SearchParams& params,
                           std::vector<ExpansionRecord>* trace = nullptr);

// Same loop as search_guitar with fixed-count pruning.
SearchResult search_guitar_fixed(const ProximityGraph& graph, const VectorDataset& dataset,
                                 const MeasureSpec& spec, std::span<const float> q,
                                 const SearchParams& params,
                                 std::vector<ExpansionRecord>* trace = nullptr);

// Dispatch on params.strategy.
SearchResult search(const ProximityGraph& graph, const VectorDataset& dataset,
                    const MeasureSpec& spec, std::span<const float> q,
                    const SearchParams& params,
                    std::vector<ExpansionRecord>* trace = nullptr);

} // namespace guitar
