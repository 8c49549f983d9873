#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "guitar/graph.hpp"
#include "test_util.hpp"

using namespace guitar;

namespace {

VectorDataset from_rows(uint32_t dim, std::initializer_list<std::vector<float>> rows) {
    VectorDataset ds;
    ds.dim = dim;
    for (const auto& r : rows) {
        ds.values.insert(ds.values.end(), r.begin(), r.end());
    }
    return ds;
}

// exhaustive l2 top-k for comparison
std::vector<uint32_t> brute_l2(const VectorDataset& ds, std::span<const float> q,
                               uint32_t k) {
    std::vector<std::pair<double, uint32_t>> all;
    for (uint32_t i = 0; i < ds.count(); ++i) {
        double d = 0;
        const auto r = ds.row(i);
        for (uint32_t j = 0; j < ds.dim; ++j) {
            const double t = static_cast<double>(r[j]) - static_cast<double>(q[j]);
            d += t * t;
        }
        all.emplace_back(d, i);
    }
    std::sort(all.begin(), all.end());
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < k; ++i) out.push_back(all[i].second);
    return out;
}

} // namespace

TEST_CASE("three colinear points with M=1 wire up to their nearest neighbors") {
    const VectorDataset ds = from_rows(1, {{0.0f}, {1.0f}, {10.0f}});
    const ProximityGraph g = build_graph(ds, {1, 2, 0});
    CHECK(g.adjacency[0] == std::vector<uint32_t>{1});
    CHECK(g.adjacency[1] == std::vector<uint32_t>{0});
    CHECK(g.adjacency[2] == std::vector<uint32_t>{1});
    // with every reachable vertex at the degree cap, vertex 2 stays
    // unattached and is reported instead
    CHECK(g.unreachable_count == 1);
}

TEST_CASE("degree never exceeds M") {
    const VectorDataset ds = generate_synthetic(200, 4, 5, Distribution::Uniform);
    const ProximityGraph g = build_graph(ds, {2, 8, 0});
    for (uint32_t v = 0; v < g.size(); ++v) {
        CHECK(g.neighbors(v).size() <= 2);
    }
}

TEST_CASE("l2 greedy search on the built graph reaches high recall") {
    const VectorDataset ds = generate_synthetic(2000, 16, 4, Distribution::Gaussian);
    const ProximityGraph g = build_graph(ds, {16, 100, 0});
    const VectorDataset queries = generate_synthetic(50, 16, 123, Distribution::Gaussian);

    double hits = 0, total = 0;
    for (uint32_t qi = 0; qi < queries.count(); ++qi) {
        const auto truth = brute_l2(ds, queries.row(qi), 10);
        const auto found = l2_search(g, ds, queries.row(qi), 10, 100);
        for (const auto& [v, dist] : found) {
            if (std::find(truth.begin(), truth.end(), v) != truth.end()) hits += 1;
        }
        total += 10;
    }
    CHECK(hits / total >= 0.95);
}

TEST_CASE("neighbors of a single-vertex graph are empty") {
    const VectorDataset ds = from_rows(2, {{0.0f, 0.0f}});
    const ProximityGraph g = build_graph(ds, {4, 8, 0});
    CHECK(g.neighbors(0).empty());
    CHECK(g.unreachable_count == 0);
}

TEST_CASE("neighbors is bounds-checked and stable") {
    const VectorDataset ds = generate_synthetic(50, 3, 6, Distribution::Uniform);
    const ProximityGraph g = build_graph(ds, {4, 16, 0});
    CHECK_THROWS_AS(g.neighbors(50), std::out_of_range);
    const auto a = g.neighbors(7);
    const auto b = g.neighbors(7);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    for (uint32_t v = 0; v < g.size(); ++v) {
        CHECK(g.neighbors(v).size() <= 4);
        for (uint32_t u : g.neighbors(v)) {
            CHECK(u < g.size());
            CHECK(u != v);
        }
    }
}

TEST_CASE("construction is deterministic") {
    const VectorDataset ds = generate_synthetic(300, 8, 12, Distribution::Gaussian);
    const ProximityGraph a = build_graph(ds, {8, 32, 0});
    const ProximityGraph b = build_graph(ds, {8, 32, 0});
    CHECK(a.adjacency == b.adjacency);
    CHECK(a.entry_point == b.entry_point);
}

TEST_CASE("build rejects an empty dataset") {
    VectorDataset ds;
    ds.dim = 3;
    CHECK_THROWS_WITH_AS(build_graph(ds, {4, 8, 0}), doctest::Contains("empty"),
                         std::runtime_error);
}

TEST_CASE("graph file round-trips and re-saves byte-identically") {
    const VectorDataset ds = generate_synthetic(2000, 8, 21, Distribution::Gaussian);
    const ProximityGraph g = build_graph(ds, {8, 48, 7});
    testutil::TempFile f1("graph1.bin");
    testutil::TempFile f2("graph2.bin");
    save_graph(g, f1.path);
    const ProximityGraph back = load_graph(f1.path, ds);
    CHECK(back.adjacency == g.adjacency);
    CHECK(back.entry_point == g.entry_point);
    CHECK(back.params.M == g.params.M);
    CHECK(back.params.k_construction == g.params.k_construction);
    CHECK(back.params.seed == g.params.seed);
    CHECK(back.dataset_fingerprint == g.dataset_fingerprint);
    CHECK(back.unreachable_count == g.unreachable_count);
    save_graph(back, f2.path);
    CHECK(testutil::read_file_bytes(f1.path) == testutil::read_file_bytes(f2.path));
}

TEST_CASE("loading a graph against different data fails on the fingerprint") {
    const VectorDataset ds = generate_synthetic(100, 4, 3, Distribution::Uniform);
    const ProximityGraph g = build_graph(ds, {4, 16, 0});
    testutil::TempFile f("graph.bin");
    save_graph(g, f.path);
    const VectorDataset other = generate_synthetic(100, 4, 4, Distribution::Uniform);
    CHECK_THROWS_WITH_AS(load_graph(f.path, other),
                         doctest::Contains("different data"), std::runtime_error);
}

TEST_CASE("every vertex finds itself as top-1 for almost all queries") {
    const VectorDataset ds = generate_synthetic(2000, 8, 33, Distribution::Gaussian);
    const ProximityGraph g = build_graph(ds, {16, 64, 0});
    CHECK(g.unreachable_count == 0);
    uint32_t self_hits = 0;
    for (uint32_t v = 0; v < ds.count(); ++v) {
        const auto found = l2_search(g, ds, ds.row(v), 1, 32);
        if (!found.empty() && found[0].first == v) self_hits++;
    }
    CHECK(static_cast<double>(self_hits) / ds.count() >= 0.99);
}
