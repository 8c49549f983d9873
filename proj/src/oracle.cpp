#include "guitar/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace guitar {

namespace {

bool entry_better(const TopKEntry& a, const TopKEntry& b) {
    return a.score > b.score || (a.score == b.score && a.vertex < b.vertex);
}

} // namespace

TopKResult brute_force_topk(const VectorDataset& dataset, const MeasureSpec& spec,
                            std::span<const float> q, uint32_t k) {
    const uint32_t n = dataset.count();
    if (k == 0 || k > n) {
        throw std::runtime_error("brute_force_topk: need 1 <= k <= n, got k=" +
                                 std::to_string(k) + " n=" + std::to_string(n));
    }
    MeasureWorkspace ws;
    // bounded heap of the k best; front is the worst kept
    std::vector<TopKEntry> heap;
    heap.reserve(k);
    for (uint32_t i = 0; i < n; ++i) {
        const TopKEntry e{i, evaluate(spec, dataset.row(i), q, ws)};
        if (heap.size() < k) {
            heap.push_back(e);
            std::push_heap(heap.begin(), heap.end(), entry_better);
        } else if (entry_better(e, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), entry_better);
            heap.back() = e;
            std::push_heap(heap.begin(), heap.end(), entry_better);
        }
    }
    std::sort(heap.begin(), heap.end(), entry_better);
    TopKResult out;
    out.entries = std::move(heap);
    return out;
}

GroundTruth build_groundtruth(const VectorDataset& dataset, const VectorDataset& queries,
                              const MeasureSpec& spec, uint32_t k) {
    GroundTruth gt;
    gt.k = k;
    const uint32_t nq = queries.count();
    gt.indices.reserve(static_cast<size_t>(nq) * k);
    gt.scores.reserve(static_cast<size_t>(nq) * k);
    for (uint32_t qi = 0; qi < nq; ++qi) {
        const TopKResult top = brute_force_topk(dataset, spec, queries.row(qi), k);
        for (const TopKEntry& e : top.entries) {
            gt.indices.push_back(e.vertex);
            gt.scores.push_back(e.score);
        }
    }
    return gt;
}

} // namespace guitar
