#include "guitar/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace guitar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerateGradNorm = 1e-12;

struct Scored {
    double score;
    uint32_t vertex;
};

// higher score wins, ties to the lower index
bool score_better(const Scored& a, const Scored& b) {
    return a.score > b.score || (a.score == b.score && a.vertex < b.vertex);
}

// Bounded pool of the best-scored vertices; heap front is the worst kept.
class ResultPool {
public:
    explicit ResultPool(size_t cap) : cap_(cap) {}

    bool try_insert(Scored e) {
        if (heap_.size() < cap_) {
            heap_.push_back(e);
            std::push_heap(heap_.begin(), heap_.end(), score_better);
            return true;
        }
        if (score_better(e, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), score_better);
            heap_.back() = e;
            std::push_heap(heap_.begin(), heap_.end(), score_better);
            return true;
        }
        return false;
    }

    size_t size() const { return heap_.size(); }
    double worst_score() const { return heap_.front().score; }

    std::vector<Scored> sorted_descending() const {
        std::vector<Scored> out = heap_;
        std::sort(out.begin(), out.end(), score_better);
        return out;
    }

private:
    std::vector<Scored> heap_;
    size_t cap_;
};

struct CandWorse {
    bool operator()(const Scored& a, const Scored& b) const {
        return score_better(b, a); // priority_queue top = best
    }
};

RankVariant rank_variant_for(Strategy s) {
    return s == Strategy::GuitarProjection ? RankVariant::Projection : RankVariant::Angle;
}

SearchResult run_search(const ProximityGraph& graph, const VectorDataset& dataset,
                        const MeasureSpec& spec, std::span<const float> q,
                        const SearchParams& params,
                        std::vector<ExpansionRecord>* trace) {
    params.validate();
    if (graph.size() == 0) throw std::runtime_error("search: empty graph");
    if (graph.size() != dataset.count()) {
        throw std::runtime_error("search: graph does not match dataset size");
    }
    if (spec.x_dim() != dataset.dim) {
        throw std::invalid_argument("search: measure dim does not match dataset");
    }

    const uint32_t n = graph.size();
    SearchResult res;
    SearchStats& stats = res.stats;

    std::vector<char> visited(n, 0);
    ResultPool pool(std::min<size_t>(params.k_search, n));
    std::priority_queue<Scored, std::vector<Scored>, CandWorse> cand;
    MeasureWorkspace ws;
    std::vector<uint32_t> unvisited;

    auto probe = [&](uint32_t v) {
        if (visited[v]) return;
        visited[v] = 1;
        res.visited.push_back(v);
        const Scored e{evaluate(spec, dataset.row(v), q, ws), v};
        stats.nn_evals++;
        if (pool.try_insert(e)) cand.push(e);
    };

    probe(graph.entry_point);

    while (!cand.empty()) {
        const Scored frontier = cand.top();
        cand.pop();
        if (pool.size() >= params.k && frontier.score < pool.worst_score()) break;
        stats.hops++;

        const auto neighbors = graph.neighbors(frontier.vertex);
        if (neighbors.empty()) continue;

        if (params.strategy == Strategy::Baseline) {
            for (uint32_t u : neighbors) probe(u);
            continue;
        }

        // Rank what can still be probed. Ranking the already-visited
        // neighbors too would let them win the pruning bound and stall the
        // walk as soon as the gradient points back along the search path.
        unvisited.clear();
        for (uint32_t u : neighbors) {
            if (!visited[u]) unvisited.push_back(u);
        }
        if (unvisited.empty()) continue; // nothing to rank, gradient not spent
        if (unvisited.size() == 1) {
            // a lone candidate always survives pruning (the best is always
            // retained), so the gradient would buy nothing at twice the
            // price of the evaluation it could at most save
            probe(unvisited[0]);
            continue;
        }

        RankOutcome ranked = rank_neighbors(spec, dataset, frontier.vertex, q, unvisited,
                                            rank_variant_for(params.strategy), ws);
        stats.grad_evals++;

        if (ranked.degenerate_gradient) {
            // ranking undefined; probe every neighbor for this expansion
            for (uint32_t u : neighbors) probe(u);
            if (trace) {
                ExpansionRecord rec;
                rec.frontier = frontier.vertex;
                rec.neighbor_list.assign(neighbors.begin(), neighbors.end());
                rec.degenerate_gradient = true;
                trace->push_back(std::move(rec));
            }
            continue;
        }

        CandidateSet pruned =
            params.strategy == Strategy::GuitarFixedCount
                ? prune_neighbors_fixed(ranked.set, params.fixed_count)
                : prune_neighbors(ranked.set, params.alpha);
        stats.pruned_neighbors += ranked.set.items.size() - pruned.items.size();

        for (const RankedNeighbor& rn : pruned.items) probe(rn.vertex);

        if (trace) {
            ExpansionRecord rec;
            rec.frontier = frontier.vertex;
            rec.neighbor_list.assign(neighbors.begin(), neighbors.end());
            rec.ranked = std::move(ranked.set);
            rec.pruned = std::move(pruned);
            trace->push_back(std::move(rec));
        }
    }

    const auto best = pool.sorted_descending();
    const size_t take = std::min<size_t>(params.k, best.size());
    res.topk.entries.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        res.topk.entries.push_back({best[i].vertex, best[i].score});
    }
    return res;
}

} // namespace

Strategy parse_strategy(const std::string& name) {
    if (name == "baseline") return Strategy::Baseline;
    if (name == "guitar-angle") return Strategy::GuitarAngle;
    if (name == "guitar-projection") return Strategy::GuitarProjection;
    if (name == "guitar-fixed-count") return Strategy::GuitarFixedCount;
    throw std::runtime_error("unknown strategy: " + name);
}

std::string strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::GuitarAngle: return "guitar-angle";
    case Strategy::GuitarProjection: return "guitar-projection";
    case Strategy::GuitarFixedCount: return "guitar-fixed-count";
    }
    throw std::logic_error("unreachable strategy");
}

void SearchParams::validate() const {
    if (k == 0) throw std::runtime_error("search params: k must be >= 1");
    if (k > k_search) throw std::runtime_error("search params: k must be <= k_search");
    if (!(alpha >= 1.0)) throw std::runtime_error("search params: alpha must be >= 1");
    if (strategy == Strategy::GuitarFixedCount && fixed_count == 0) {
        throw std::runtime_error("search params: fixed_count must be >= 1");
    }
}

RankOutcome rank_neighbors(const MeasureSpec& spec, const VectorDataset& dataset,
                           uint32_t frontier, std::span<const float> q,
                           std::span<const uint32_t> neighbor_list,
                           RankVariant variant, MeasureWorkspace& ws) {
    RankOutcome out;
    out.set.variant = variant;

    GradResult gr;
    evaluate_with_grad(spec, dataset.row(frontier), q, ws, gr);
    double gnorm_sq = 0.0;
    for (double g : gr.grad) gnorm_sq += g * g;
    const double gnorm = std::sqrt(gnorm_sq);
    if (gnorm <= kDegenerateGradNorm) {
        out.degenerate_gradient = true;
        return out;
    }

    const auto xf = dataset.row(frontier);
    out.set.items.reserve(neighbor_list.size());
    for (uint32_t u : neighbor_list) {
        const auto xu = dataset.row(u);
        double dot = 0.0, off_sq = 0.0;
        for (uint32_t i = 0; i < dataset.dim; ++i) {
            const double off = static_cast<double>(xu[i]) - static_cast<double>(xf[i]);
            dot += gr.grad[i] * off;
            off_sq += off * off;
        }
        double key;
        if (off_sq == 0.0) {
            // duplicate point: worst possible key, never crowds out real
            // directions, stays eligible under include-all
            key = variant == RankVariant::Angle ? std::acos(-1.0) : -kInf;
        } else if (variant == RankVariant::Angle) {
            const double c = dot / (gnorm * std::sqrt(off_sq));
            key = std::acos(std::clamp(c, -1.0, 1.0));
        } else {
            key = dot / gnorm;
        }
        out.set.items.push_back({u, key});
    }

    if (variant == RankVariant::Angle) {
        std::sort(out.set.items.begin(), out.set.items.end(),
                  [](const RankedNeighbor& a, const RankedNeighbor& b) {
                      return a.key < b.key || (a.key == b.key && a.vertex < b.vertex);
                  });
    } else {
        std::sort(out.set.items.begin(), out.set.items.end(),
                  [](const RankedNeighbor& a, const RankedNeighbor& b) {
                      return a.key > b.key || (a.key == b.key && a.vertex < b.vertex);
                  });
    }
    return out;
}

CandidateSet prune_neighbors(const CandidateSet& candidates, double alpha) {
    if (!(alpha >= 1.0)) throw std::runtime_error("prune_neighbors: alpha must be >= 1");
    CandidateSet out;
    out.variant = candidates.variant;
    if (candidates.items.empty()) return out;
    if (std::isinf(alpha)) {
        out.items = candidates.items;
        return out;
    }
    const double theta = candidates.theta();
    if (candidates.variant == RankVariant::Angle) {
        const double bound = alpha * theta;
        for (const RankedNeighbor& rn : candidates.items) {
            if (rn.key <= bound) out.items.push_back(rn);
        }
    } else {
        if (theta <= 0.0) {
            // the best neighbor already points away from the gradient;
            // theta/alpha is meaningless across signs
            out.items.push_back(candidates.items.front());
            return out;
        }
        const double bound = theta / alpha;
        for (const RankedNeighbor& rn : candidates.items) {
            if (rn.key >= bound) out.items.push_back(rn);
        }
    }
    if (out.items.empty()) out.items.push_back(candidates.items.front());
    return out;
}

CandidateSet prune_neighbors_fixed(const CandidateSet& candidates, uint32_t fixed_count) {
    if (fixed_count == 0) {
        throw std::runtime_error("prune_neighbors_fixed: fixed_count must be >= 1");
    }
    CandidateSet out;
    out.variant = candidates.variant;
    const size_t take = std::min<size_t>(fixed_count, candidates.items.size());
    out.items.assign(candidates.items.begin(), candidates.items.begin() + take);
    return out;
}

SearchResult search_baseline(const ProximityGraph& graph, const VectorDataset& dataset,
                             const MeasureSpec& spec, std::span<const float> q,
                             const SearchParams& params) {
    SearchParams p = params;
    p.strategy = Strategy::Baseline;
    return run_search(graph, dataset, spec, q, p, nullptr);
}

SearchResult search_guitar(const ProximityGraph& graph, const VectorDataset& dataset,
                           const MeasureSpec& spec, std::span<const float> q,
                           const SearchParams& params,
                           std::vector<ExpansionRecord>* trace) {
    if (params.strategy == Strategy::Baseline) {
        throw std::runtime_error("search_guitar: params request the baseline strategy");
    }
    return run_search(graph, dataset, spec, q, params, trace);
}

SearchResult search_guitar_fixed(const ProximityGraph& graph, const VectorDataset& dataset,
                                 const MeasureSpec& spec, std::span<const float> q,
                                 const SearchParams& params,
                                 std::vector<ExpansionRecord>* trace) {
    SearchParams p = params;
    p.strategy = Strategy::GuitarFixedCount;
    return run_search(graph, dataset, spec, q, p, trace);
}

SearchResult search(const ProximityGraph& graph, const VectorDataset& dataset,
                    const MeasureSpec& spec, std::span<const float> q,
                    const SearchParams& params,
                    std::vector<ExpansionRecord>* trace) {
    if (params.strategy == Strategy::Baseline) {
        return run_search(graph, dataset, spec, q, params, nullptr);
    }
    return run_search(graph, dataset, spec, q, params, trace);
}

} // namespace guitar
