#pragma once

#include <span>

#include "guitar/dataset.hpp"
#include "guitar/measure.hpp"
#include "guitar/search.hpp"

namespace guitar {

// Exact top-k by scoring every base vector. Ties break to the lower index,
// matching the search module, so recall is well defined under score ties.
TopKResult brute_force_topk(const VectorDataset& dataset, const MeasureSpec& spec,
                            std::span<const float> q, uint32_t k);

GroundTruth build_groundtruth(const VectorDataset& dataset, const VectorDataset& queries,
                              const MeasureSpec& spec, uint32_t k);

} // namespace guitar
