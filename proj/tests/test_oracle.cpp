#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "guitar/oracle.hpp"
#include "test_util.hpp"

using namespace guitar;

namespace {

VectorDataset from_rows(uint32_t dim, std::initializer_list<std::vector<float>> rows) {
    VectorDataset ds;
    ds.dim = dim;
    for (const auto& r : rows) ds.values.insert(ds.values.end(), r.begin(), r.end());
    return ds;
}

} // namespace

TEST_CASE("brute force finds the max inner product") {
    const VectorDataset ds = from_rows(2, {{2.0f, 1.0f}, {1.0f, 0.0f}, {3.0f, 0.0f}});
    const MeasureSpec spec = make_random_measure(MeasureKind::InnerProduct, 2, 0);
    const std::vector<float> q{1.0f, 0.0f};
    const TopKResult r = brute_force_topk(ds, spec, q, 1);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].vertex == 2);
    CHECK(r.entries[0].score == 3.0);
}

TEST_CASE("k = n returns a full permutation sorted by score") {
    const VectorDataset ds = generate_synthetic(50, 4, 8, Distribution::Gaussian);
    const MeasureSpec spec = make_random_measure(MeasureKind::NegL2, 4, 0);
    const VectorDataset q = generate_synthetic(1, 4, 9, Distribution::Gaussian);
    const TopKResult r = brute_force_topk(ds, spec, q.row(0), 50);
    REQUIRE(r.entries.size() == 50);
    std::vector<uint32_t> idx;
    for (const auto& e : r.entries) idx.push_back(e.vertex);
    std::sort(idx.begin(), idx.end());
    std::vector<uint32_t> expect(50);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(idx == expect);
    for (size_t i = 1; i < r.entries.size(); ++i) {
        CHECK(r.entries[i - 1].score >= r.entries[i].score);
    }
}

TEST_CASE("brute force agrees with an independent quadratic re-check") {
    Rng seeds(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const uint32_t n = 50 + static_cast<uint32_t>(seeds.uniform(0, 450));
        const uint32_t k = 1 + static_cast<uint32_t>(seeds.uniform(0, 19));
        const uint64_t seed = seeds.next_u64();
        const VectorDataset ds = generate_synthetic(n, 6, seed, Distribution::Gaussian);
        const VectorDataset q = generate_synthetic(1, 6, seed + 1, Distribution::Gaussian);
        const MeasureSpec spec = make_random_mlp({12, 8, 1}, seed + 2);

        const TopKResult a = brute_force_topk(ds, spec, q.row(0), k);
        const TopKResult b = testutil::quadratic_topk(ds, spec, q.row(0), k);
        REQUIRE(a.entries.size() == b.entries.size());
        for (size_t i = 0; i < a.entries.size(); ++i) {
            CHECK(a.entries[i].vertex == b.entries[i].vertex);
            CHECK(a.entries[i].score == b.entries[i].score);
        }
    }
}

TEST_CASE("permuting the dataset and unpermuting the answers changes nothing") {
    const VectorDataset ds = generate_synthetic(120, 5, 77, Distribution::Gaussian);
    const MeasureSpec spec = make_random_mlp({10, 8, 1}, 78);
    const VectorDataset q = generate_synthetic(1, 5, 79, Distribution::Gaussian);

    // reverse-order permutation
    VectorDataset rev;
    rev.dim = ds.dim;
    for (uint32_t i = ds.count(); i-- > 0;) {
        const auto r = ds.row(i);
        rev.values.insert(rev.values.end(), r.begin(), r.end());
    }
    const TopKResult a = brute_force_topk(ds, spec, q.row(0), 10);
    const TopKResult b = brute_force_topk(rev, spec, q.row(0), 10);
    std::vector<uint32_t> av, bv;
    for (const auto& e : a.entries) av.push_back(e.vertex);
    for (const auto& e : b.entries) bv.push_back(ds.count() - 1 - e.vertex);
    std::sort(av.begin(), av.end());
    std::sort(bv.begin(), bv.end());
    CHECK(av == bv);
}

TEST_CASE("ties order by the lower index") {
    // duplicate rows guarantee exact score ties
    const VectorDataset ds =
        from_rows(2, {{1.0f, 0.0f}, {0.0f, 2.0f}, {1.0f, 0.0f}, {1.0f, 0.0f}});
    const MeasureSpec spec = make_random_measure(MeasureKind::InnerProduct, 2, 0);
    const std::vector<float> q{1.0f, 0.0f};
    const TopKResult r = brute_force_topk(ds, spec, q, 3);
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].vertex == 0);
    CHECK(r.entries[1].vertex == 2);
    CHECK(r.entries[2].vertex == 3);
}

TEST_CASE("k greater than n is rejected") {
    const VectorDataset ds = generate_synthetic(5, 3, 1, Distribution::Uniform);
    const MeasureSpec spec = make_random_measure(MeasureKind::InnerProduct, 3, 0);
    const VectorDataset q = generate_synthetic(1, 3, 2, Distribution::Uniform);
    CHECK_THROWS_AS(brute_force_topk(ds, spec, q.row(0), 6), std::runtime_error);
}

TEST_CASE("ground truth of zero queries is empty") {
    const VectorDataset ds = generate_synthetic(10, 3, 1, Distribution::Uniform);
    const VectorDataset queries = generate_synthetic(0, 3, 2, Distribution::Uniform);
    const MeasureSpec spec = make_random_measure(MeasureKind::InnerProduct, 3, 0);
    const GroundTruth gt = build_groundtruth(ds, queries, spec, 5);
    CHECK(gt.query_count() == 0);
    CHECK(gt.k == 5);
}

TEST_CASE("single-query ground truth matches brute force") {
    const VectorDataset ds = generate_synthetic(80, 4, 3, Distribution::Gaussian);
    const VectorDataset queries = generate_synthetic(1, 4, 4, Distribution::Gaussian);
    const MeasureSpec spec = make_random_mlp({8, 8, 1}, 5);
    const GroundTruth gt = build_groundtruth(ds, queries, spec, 1);
    const TopKResult r = brute_force_topk(ds, spec, queries.row(0), 1);
    REQUIRE(gt.query_count() == 1);
    CHECK(gt.indices[0] == r.entries[0].vertex);
    CHECK(gt.scores[0] == r.entries[0].score);
}

TEST_CASE("ground truth round-trips through its file format") {
    const VectorDataset ds = generate_synthetic(500, 6, 6, Distribution::Gaussian);
    const VectorDataset queries = generate_synthetic(100, 6, 7, Distribution::Gaussian);
    const MeasureSpec spec = make_random_deepfm(2, 4, {8}, 8);
    const GroundTruth gt = build_groundtruth(ds, queries, spec, 10);
    testutil::TempFile f("gt_roundtrip.bin");
    save_groundtruth(gt, f.path);
    const GroundTruth back = load_groundtruth(f.path);
    CHECK(back.k == gt.k);
    CHECK(back.indices == gt.indices);
    REQUIRE(back.scores.size() == gt.scores.size());
    for (size_t i = 0; i < gt.scores.size(); ++i) {
        CHECK(back.scores[i] == static_cast<double>(static_cast<float>(gt.scores[i])));
    }
}
