#include <doctest.h>

#include <cmath>
#include <fstream>

#include "guitar/measure.hpp"
#include "guitar/rng.hpp"
#include "test_util.hpp"

using namespace guitar;

namespace {

MeasureSpec ip2() { return make_random_measure(MeasureKind::InnerProduct, 2, 0); }

std::vector<float> random_vec(Rng& rng, uint32_t d, double scale = 1.0) {
    std::vector<float> v(d);
    for (auto& x : v) x = static_cast<float>(rng.gaussian() * scale);
    return v;
}

} // namespace

TEST_CASE("inner product of orthogonal vectors is zero") {
    const std::vector<float> x{1.0f, 0.0f}, q{0.0f, 1.0f};
    CHECK(evaluate(ip2(), x, q) == 0.0);
}

TEST_CASE("cosine of colinear vectors is one, independent of scale") {
    const MeasureSpec spec = make_random_measure(MeasureKind::Cosine, 2, 0);
    const std::vector<float> x{2.0f, 0.0f}, q{1.0f, 0.0f};
    CHECK(evaluate(spec, x, q) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mlp with all-zero weights outputs sigmoid(0)") {
    MeasureSpec spec = make_random_mlp({4, 3, 1}, 0);
    std::fill(spec.weights.begin(), spec.weights.end(), 0.0f);
    const std::vector<float> x{0.3f, -0.7f}, q{2.0f, 0.1f};
    CHECK(evaluate(spec, x, q) == 0.5);
}

TEST_CASE("inner product value and gradient") {
    const std::vector<float> x{1.0f, 2.0f}, q{3.0f, 4.0f};
    const GradResult gr = evaluate_with_grad(ip2(), x, q);
    CHECK(gr.value == 11.0);
    CHECK(gr.grad == std::vector<double>{3.0, 4.0});
}

TEST_CASE("neg-l2 at x == q has zero value and zero gradient") {
    const MeasureSpec spec = make_random_measure(MeasureKind::NegL2, 3, 0);
    const std::vector<float> x{0.5f, -1.0f, 2.0f};
    const GradResult gr = evaluate_with_grad(spec, x, x);
    CHECK(gr.value == 0.0);
    CHECK(gr.grad == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("gradients match central finite differences for every kind") {
    struct Case {
        const char* name;
        MeasureSpec spec;
    };
    const Case cases[] = {
        {"inner-product", make_random_measure(MeasureKind::InnerProduct, 7, 0)},
        {"cosine", make_random_measure(MeasureKind::Cosine, 7, 0)},
        {"neg-l2", make_random_measure(MeasureKind::NegL2, 7, 0)},
        {"mlp-sigmoid", make_random_mlp({14, 16, 1}, 21)},
        {"deepfm", make_random_deepfm(3, 5, {8, 8}, 22)},
    };
    for (const Case& c : cases) {
        CAPTURE(c.name);
        Rng rng(404);
        const auto res = testutil::check_gradients(c.spec, rng, 100);
        CHECK(res.coord_failures == 0);
        CHECK(res.samples_checked >= 80);
    }
}

TEST_CASE("reverse loss direction equals the measure gradient") {
    // L = 1 - f, so -dL/dx must match df/dx; checked against finite
    // differences of L itself
    const MeasureSpec spec = make_random_deepfm(2, 4, {8}, 5);
    Rng rng(99);
    const auto x = random_vec(rng, 6);
    const auto q = random_vec(rng, 6);
    const GradResult gr = evaluate_with_grad(spec, x, q);
    const double h = 1e-4;
    auto xp = x;
    for (uint32_t i = 0; i < 6; ++i) {
        xp[i] = static_cast<float>(static_cast<double>(x[i]) + h);
        const double lp = 1.0 - evaluate(spec, xp, q);
        xp[i] = static_cast<float>(static_cast<double>(x[i]) - h);
        const double lm = 1.0 - evaluate(spec, xp, q);
        xp[i] = x[i];
        const double neg_dl = -(lp - lm) / (2.0 * h);
        CHECK(neg_dl == doctest::Approx(gr.grad[i]).epsilon(1e-3));
    }
}

TEST_CASE("gradient direction is the same under L = 1 - f and L = -f") {
    const MeasureSpec spec = make_random_mlp({8, 8, 1}, 17);
    Rng rng(3);
    const double h = 1e-4;
    for (int t = 0; t < 20; ++t) {
        const auto x = random_vec(rng, 4);
        const auto q = random_vec(rng, 4);
        // numeric loss gradients from each loss definition
        std::vector<double> d1(4), d2(4);
        auto xp = x;
        for (uint32_t i = 0; i < 4; ++i) {
            xp[i] = static_cast<float>(static_cast<double>(x[i]) + h);
            const double fp = evaluate(spec, xp, q);
            xp[i] = static_cast<float>(static_cast<double>(x[i]) - h);
            const double fm = evaluate(spec, xp, q);
            xp[i] = x[i];
            d1[i] = -((1.0 - fp) - (1.0 - fm)) / (2.0 * h); // -dL/dx, L = 1 - f
            d2[i] = -((-fp) - (-fm)) / (2.0 * h);           // -dL/dx, L = -f
        }
        double dot = 0, n1 = 0, n2 = 0;
        for (int i = 0; i < 4; ++i) {
            dot += d1[i] * d2[i];
            n1 += d1[i] * d1[i];
            n2 += d2[i] * d2[i];
        }
        REQUIRE(n1 > 0.0);
        REQUIRE(n2 > 0.0);
        CHECK(dot / std::sqrt(n1 * n2) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("capped measures stay inside (0, 1)") {
    const MeasureSpec spec = make_random_mlp({12, 16, 1}, 8);
    Rng rng(15);
    for (int t = 0; t < 1000; ++t) {
        const double v = evaluate(spec, random_vec(rng, 6), random_vec(rng, 6));
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("deepfm stays finite over random inputs") {
    const MeasureSpec spec = make_random_deepfm(8, 32, {32, 32}, 2);
    Rng rng(77);
    for (int t = 0; t < 1000; ++t) {
        const double v = evaluate(spec, random_vec(rng, 40), random_vec(rng, 40));
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("evaluate is a pure function") {
    const MeasureSpec spec = make_random_deepfm(4, 6, {8, 8}, 10);
    Rng rng(31);
    const auto x = random_vec(rng, 10);
    const auto q = random_vec(rng, 10);
    CHECK(evaluate(spec, x, q) == evaluate(spec, x, q));
}

TEST_CASE("evaluate_with_grad value matches evaluate bitwise") {
    const MeasureSpec spec = make_random_deepfm(4, 6, {8, 8}, 10);
    Rng rng(32);
    for (int t = 0; t < 50; ++t) {
        const auto x = random_vec(rng, 10);
        const auto q = random_vec(rng, 10);
        CHECK(evaluate_with_grad(spec, x, q).value == evaluate(spec, x, q));
    }
}

TEST_CASE("make_random_measure is deterministic in the seed") {
    const MeasureSpec a = make_random_mlp({10, 8, 1}, 42);
    const MeasureSpec b = make_random_mlp({10, 8, 1}, 42);
    CHECK(a.weights == b.weights);
    const MeasureSpec c = make_random_mlp({10, 8, 1}, 43);
    CHECK(a.weights != c.weights);
}

TEST_CASE("measure file round-trip evaluates bitwise identically") {
    const MeasureSpec spec = make_random_deepfm(8, 32, {32, 32}, 9);
    testutil::TempFile f("measure.bin");
    save_measure(spec, f.path);
    const MeasureSpec back = load_measure(f.path);
    CHECK(back.weights == spec.weights);
    Rng rng(100);
    for (int t = 0; t < 100; ++t) {
        const auto x = random_vec(rng, 40);
        const auto q = random_vec(rng, 40);
        CHECK(evaluate(back, x, q) == evaluate(spec, x, q));
    }
}

TEST_CASE("mlp weight arity is validated") {
    const MeasureSpec spec = make_random_mlp({80, 32, 1}, 1);
    CHECK(spec.weights.size() == 80u * 32 + 32 + 32 * 1 + 1);

    testutil::TempFile f("short.bin");
    save_measure(spec, f.path);
    // drop the last 4 bytes: one missing weight
    auto bytes = testutil::read_file_bytes(f.path);
    bytes.resize(bytes.size() - 4);
    {
        std::ofstream out(f.path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_WITH_AS(load_measure(f.path), doctest::Contains("end of file"),
                         std::runtime_error);
}

TEST_CASE("declared weight count must match the architecture") {
    testutil::TempFile f("counts.bin");
    {
        std::ofstream out(f.path, std::ios::binary);
        out << "guitar-measure 1\nkind mlp-sigmoid\nlayers 4 2 1\ncapped 1\n"
            << "weights 3\npayload\n";
        const float w[3] = {0, 0, 0};
        out.write(reinterpret_cast<const char*>(w), sizeof(w));
    }
    CHECK_THROWS_WITH_AS(load_measure(f.path), doctest::Contains("weight count"),
                         std::runtime_error);
}

TEST_CASE("evaluate rejects dimension mismatch") {
    const MeasureSpec spec = make_random_measure(MeasureKind::InnerProduct, 3, 0);
    const std::vector<float> x{1.0f, 2.0f}, q{1.0f, 2.0f, 3.0f};
    CHECK_THROWS_AS(evaluate(spec, x, q), std::invalid_argument);
}
