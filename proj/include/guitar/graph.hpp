#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "guitar/dataset.hpp"

namespace guitar {

struct GraphParams {
    uint32_t M = 16;              // max out-degree
    uint32_t k_construction = 100; // candidate pool width during build
    uint64_t seed = 0;

    void validate() const;
};

// Flat navigable-small-world style proximity graph under l2 distance.
// Construction never touches the ranking measure; search-time scoring is
// the caller's business.
struct ProximityGraph {
    GraphParams params;
    uint32_t entry_point = 0;
    uint64_t dataset_fingerprint = 0;
    uint32_t unreachable_count = 0; // vertices repair could not attach
    std::vector<std::vector<uint32_t>> adjacency;

    uint32_t size() const { return static_cast<uint32_t>(adjacency.size()); }
    std::span<const uint32_t> neighbors(uint32_t v) const;
};

// Incremental insertion: greedy l2 search over the partial graph with queue
// width k_construction, link to the M closest, add reverse edges, prune any
// vertex over the degree cap back to its M closest. Deterministic; ties on
// equal distance go to the lower index. Unreachable vertices are attached to
// their nearest reachable vertex with spare degree when one exists, otherwise
// counted in unreachable_count.
ProximityGraph build_graph(const VectorDataset& dataset, const GraphParams& params);

// Best-first l2 search over the graph; returns up to k (index, distance)
// pairs, ascending distance. queue_width bounds the result pool.
std::vector<std::pair<uint32_t, double>> l2_search(const ProximityGraph& graph,
                                                   const VectorDataset& dataset,
                                                   std::span<const float> query,
                                                   uint32_t k, uint32_t queue_width);

void save_graph(const ProximityGraph& graph, const std::string& path);
// Verifies the stored fingerprint against `dataset`.
ProximityGraph load_graph(const std::string& path, const VectorDataset& dataset);

} // namespace guitar
