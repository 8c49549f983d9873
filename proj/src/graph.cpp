#include "guitar/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <utility>

#include "io_util.hpp"

namespace guitar {

namespace {

constexpr uint32_t kMagic = 0x47324C53; // "SL2G"
constexpr uint32_t kVersion = 1;

double l2_sq(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

struct DistEntry {
    double dist;
    uint32_t vertex;
};

// lower distance wins, ties to the lower index
bool dist_better(const DistEntry& a, const DistEntry& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.vertex < b.vertex);
}

// Bounded pool of the best entries seen; heap front is the worst kept.
class DistPool {
public:
    explicit DistPool(size_t cap) : cap_(cap) {}

    bool try_insert(DistEntry e) {
        if (heap_.size() < cap_) {
            heap_.push_back(e);
            std::push_heap(heap_.begin(), heap_.end(), dist_better);
            return true;
        }
        if (dist_better(e, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), dist_better);
            heap_.back() = e;
            std::push_heap(heap_.begin(), heap_.end(), dist_better);
            return true;
        }
        return false;
    }

    bool full() const { return heap_.size() >= cap_; }
    double worst_dist() const { return heap_.front().dist; }

    std::vector<DistEntry> sorted_ascending() const {
        std::vector<DistEntry> out = heap_;
        std::sort(out.begin(), out.end(), dist_better);
        return out;
    }

private:
    std::vector<DistEntry> heap_;
    size_t cap_;
};

struct CandWorse {
    bool operator()(const DistEntry& a, const DistEntry& b) const {
        return dist_better(b, a); // priority_queue top = best
    }
};

// Best-first l2 search over the (possibly partial) adjacency. Returns the
// pool sorted by ascending distance.
std::vector<DistEntry> best_first_l2(const std::vector<std::vector<uint32_t>>& adjacency,
                                     const VectorDataset& data,
                                     std::span<const float> query, uint32_t entry,
                                     uint32_t width, std::vector<char>& visited) {
    std::fill(visited.begin(), visited.end(), 0);
    DistPool pool(width);
    std::priority_queue<DistEntry, std::vector<DistEntry>, CandWorse> cand;

    visited[entry] = 1;
    const DistEntry seed{l2_sq(query, data.row(entry)), entry};
    pool.try_insert(seed);
    cand.push(seed);

    while (!cand.empty()) {
        const DistEntry cur = cand.top();
        cand.pop();
        if (pool.full() && cur.dist > pool.worst_dist()) break;
        for (uint32_t u : adjacency[cur.vertex]) {
            if (visited[u]) continue;
            visited[u] = 1;
            const DistEntry e{l2_sq(query, data.row(u)), u};
            if (pool.try_insert(e)) cand.push(e);
        }
    }
    return pool.sorted_ascending();
}

} // namespace

void GraphParams::validate() const {
    if (M == 0) throw std::runtime_error("graph params: M must be >= 1");
    if (k_construction < M) {
        throw std::runtime_error("graph params: k_construction must be >= M");
    }
}

std::span<const uint32_t> ProximityGraph::neighbors(uint32_t v) const {
    if (v >= adjacency.size()) {
        throw std::out_of_range("vertex index " + std::to_string(v) + " out of range (n=" +
                                std::to_string(adjacency.size()) + ")");
    }
    return adjacency[v];
}

ProximityGraph build_graph(const VectorDataset& dataset, const GraphParams& params) {
    params.validate();
    const uint32_t n = dataset.count();
    if (n == 0) throw std::runtime_error("build_graph: empty dataset");

    ProximityGraph g;
    g.params = params;
    g.entry_point = 0;
    g.adjacency.assign(n, {});
    g.dataset_fingerprint = dataset_fingerprint(dataset);

    std::vector<char> visited(n, 0);
    std::vector<DistEntry> scratch;

    auto prune_to_closest = [&](uint32_t v) {
        scratch.clear();
        for (uint32_t u : g.adjacency[v]) {
            scratch.push_back({l2_sq(dataset.row(v), dataset.row(u)), u});
        }
        std::sort(scratch.begin(), scratch.end(), dist_better);
        scratch.resize(params.M);
        g.adjacency[v].clear();
        for (const DistEntry& e : scratch) g.adjacency[v].push_back(e.vertex);
    };

    for (uint32_t i = 1; i < n; ++i) {
        const auto cands = best_first_l2(g.adjacency, dataset, dataset.row(i),
                                         g.entry_point, params.k_construction, visited);
        const size_t links = std::min<size_t>(params.M, cands.size());
        for (size_t j = 0; j < links; ++j) {
            const uint32_t c = cands[j].vertex;
            g.adjacency[i].push_back(c);
            g.adjacency[c].push_back(i);
            if (g.adjacency[c].size() > params.M) prune_to_closest(c);
        }
    }

    // Connectivity repair. Keep-closest pruning saturates every vertex to
    // degree M and can strip all in-edges from some vertices, so an orphan is
    // attached to its nearest reachable vertex: one with spare degree when
    // available, otherwise (M >= 2) the nearest reachable vertex swaps its
    // farthest construction edge for the orphan. Edges added here are never
    // swapped out again. Repeats until the reachable set stops growing;
    // anything left is counted, not silently dropped.
    std::vector<char> reach(n, 0);
    std::set<std::pair<uint32_t, uint32_t>> repair_edges;
    auto bfs_mark = [&](uint32_t start) {
        std::queue<uint32_t> q;
        if (!reach[start]) {
            reach[start] = 1;
            q.push(start);
        }
        while (!q.empty()) {
            const uint32_t v = q.front();
            q.pop();
            for (uint32_t u : g.adjacency[v]) {
                if (!reach[u]) {
                    reach[u] = 1;
                    q.push(u);
                }
            }
        }
    };

    for (int round = 0; round < 30; ++round) {
        std::fill(reach.begin(), reach.end(), 0);
        bfs_mark(g.entry_point);
        bool all_reachable = true;
        for (uint32_t u = 0; u < n && all_reachable; ++u) {
            if (!reach[u]) all_reachable = false;
        }
        if (all_reachable) break;

        bool attached_any = false;
        for (uint32_t u = 0; u < n; ++u) {
            if (reach[u]) continue;
            uint32_t best_spare = n, best_swap = n;
            double spare_dist = std::numeric_limits<double>::infinity();
            double swap_dist = std::numeric_limits<double>::infinity();
            for (uint32_t v = 0; v < n; ++v) {
                if (!reach[v]) continue;
                const double d = l2_sq(dataset.row(u), dataset.row(v));
                if (g.adjacency[v].size() < params.M) {
                    if (d < spare_dist) {
                        spare_dist = d;
                        best_spare = v;
                    }
                } else if (params.M >= 2) {
                    bool has_construction_edge = false;
                    for (uint32_t w : g.adjacency[v]) {
                        if (!repair_edges.count({v, w})) {
                            has_construction_edge = true;
                            break;
                        }
                    }
                    if (has_construction_edge && d < swap_dist) {
                        swap_dist = d;
                        best_swap = v;
                    }
                }
            }
            if (best_spare < n) {
                g.adjacency[best_spare].push_back(u);
                repair_edges.insert({best_spare, u});
                bfs_mark(u);
                attached_any = true;
            } else if (best_swap < n) {
                auto& adj = g.adjacency[best_swap];
                size_t drop = adj.size();
                double drop_dist = -1.0;
                for (size_t j = 0; j < adj.size(); ++j) {
                    if (repair_edges.count({best_swap, adj[j]})) continue;
                    const double d = l2_sq(dataset.row(best_swap), dataset.row(adj[j]));
                    if (d > drop_dist) {
                        drop_dist = d;
                        drop = j;
                    }
                }
                adj[drop] = u;
                repair_edges.insert({best_swap, u});
                bfs_mark(u); // a swapped-out vertex is re-checked next round
                attached_any = true;
            }
        }
        if (!attached_any) break;
    }

    std::fill(reach.begin(), reach.end(), 0);
    bfs_mark(g.entry_point);
    g.unreachable_count = 0;
    for (uint32_t u = 0; u < n; ++u) {
        if (!reach[u]) g.unreachable_count++;
    }
    return g;
}

std::vector<std::pair<uint32_t, double>> l2_search(const ProximityGraph& graph,
                                                   const VectorDataset& dataset,
                                                   std::span<const float> query,
                                                   uint32_t k, uint32_t queue_width) {
    if (graph.size() == 0) throw std::runtime_error("l2_search: empty graph");
    if (query.size() != dataset.dim) {
        throw std::invalid_argument("l2_search: query dim mismatch");
    }
    std::vector<char> visited(graph.size(), 0);
    const auto found = best_first_l2(graph.adjacency, dataset, query, graph.entry_point,
                                     std::max(k, queue_width), visited);
    std::vector<std::pair<uint32_t, double>> out;
    const size_t take = std::min<size_t>(k, found.size());
    out.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        out.emplace_back(found[i].vertex, std::sqrt(found[i].dist));
    }
    return out;
}

void save_graph(const ProximityGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path);
    }
    detail::write_u32(out, kMagic);
    detail::write_u32(out, kVersion);
    detail::write_u32(out, graph.size());
    detail::write_u32(out, graph.params.M);
    detail::write_u32(out, graph.params.k_construction);
    detail::write_u64(out, graph.params.seed);
    detail::write_u32(out, graph.entry_point);
    detail::write_u64(out, graph.dataset_fingerprint);
    for (const auto& adj : graph.adjacency) {
        detail::write_u32(out, static_cast<uint32_t>(adj.size()));
        for (uint32_t u : adj) detail::write_u32(out, u);
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

ProximityGraph load_graph(const std::string& path, const VectorDataset& dataset) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open graph file: " + path);
    }
    if (detail::read_u32(in, path + " magic") != kMagic) {
        throw std::runtime_error(path + ": not a graph file (bad magic)");
    }
    if (detail::read_u32(in, path + " version") != kVersion) {
        throw std::runtime_error(path + ": unsupported graph file version");
    }
    ProximityGraph g;
    const uint32_t n = detail::read_u32(in, path + " header");
    g.params.M = detail::read_u32(in, path + " header");
    g.params.k_construction = detail::read_u32(in, path + " header");
    g.params.seed = detail::read_u64(in, path + " header");
    g.entry_point = detail::read_u32(in, path + " header");
    g.dataset_fingerprint = detail::read_u64(in, path + " header");

    if (g.dataset_fingerprint != dataset_fingerprint(dataset)) {
        throw std::runtime_error(path + ": graph built for different data (fingerprint mismatch)");
    }
    if (n != dataset.count()) {
        throw std::runtime_error(path + ": vertex count does not match dataset");
    }
    if (n > 0 && g.entry_point >= n) {
        throw std::runtime_error(path + ": entry point out of range");
    }

    g.adjacency.resize(n);
    for (uint32_t v = 0; v < n; ++v) {
        const uint32_t deg = detail::read_u32(in, path + " adjacency");
        if (deg > g.params.M || deg >= n) {
            throw std::runtime_error(path + ": vertex degree exceeds M");
        }
        g.adjacency[v].resize(deg);
        for (uint32_t j = 0; j < deg; ++j) {
            const uint32_t u = detail::read_u32(in, path + " adjacency");
            if (u >= n || u == v) {
                throw std::runtime_error(path + ": invalid neighbor index");
            }
            g.adjacency[v][j] = u;
        }
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw std::runtime_error(path + ": trailing bytes after adjacency lists");
    }

    // reachability is derived, not stored
    std::vector<char> reach(n, 0);
    std::queue<uint32_t> q;
    if (n > 0) {
        reach[g.entry_point] = 1;
        q.push(g.entry_point);
    }
    while (!q.empty()) {
        const uint32_t v = q.front();
        q.pop();
        for (uint32_t u : g.adjacency[v]) {
            if (!reach[u]) {
                reach[u] = 1;
                q.push(u);
            }
        }
    }
    g.unreachable_count = 0;
    for (uint32_t v = 0; v < n; ++v) {
        if (!reach[v]) g.unreachable_count++;
    }
    return g;
}

} // namespace guitar
