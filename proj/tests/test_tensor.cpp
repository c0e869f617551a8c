#include <doctest.h>

#include <cmath>
#include <limits>

#include "orsnn/tensor/ops.hpp"
#include "support/gradcheck.hpp"

using namespace orsnn;
using orsnn::testing::random_tensor;

namespace {

template <class Real>
std::vector<Real> vals(const Tensor<Real>& t) {
    return {t.values().begin(), t.values().end()};
}

Tensor<double> leaf(Shape s, std::vector<double> v) {
    Tensor<double> t(std::move(s), std::move(v));
    t.set_requires_grad(true);
    return t;
}

}  // namespace

TEST_CASE("elementwise arithmetic") {
    const Tensor<double> a({2}, {1, 2}), b({2}, {3, 4});
    CHECK(vals(add(a, b)) == std::vector<double>{4, 6});
    CHECK(vals(sub(a, b)) == std::vector<double>{-2, -2});
    CHECK(vals(scale(a, 2.5)) == std::vector<double>{2.5, 5});

    SUBCASE("broadcast over leading axes") {
        const Tensor<double> m({2, 3}, {1, 2, 3, 4, 5, 6}), row({3}, {10, 20, 30});
        CHECK(vals(add(m, row)) == std::vector<double>{11, 22, 33, 14, 25, 36});
    }
    SUBCASE("incompatible shapes name both") {
        try {
            add(Tensor<double>({2, 3}), Tensor<double>({4}));
            FAIL("expected ShapeMismatch");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ShapeMismatch);
            CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
            CHECK(std::string(e.what()).find("[4]") != std::string::npos);
        }
    }
}

TEST_CASE("product rule and annihilator") {
    Tape<double> tape;
    auto x = leaf({1}, {2.0}), y = leaf({1}, {3.0});
    tape.backward(sum(mul(x, y)));
    CHECK(x.grad()[0] == 3.0);
    CHECK(y.grad()[0] == 2.0);

    auto z = leaf({3}, {1, 2, 3});
    Tape<double> t2;
    const auto out = mul(z, Tensor<double>({3}, 0.0));
    t2.backward(sum(out));
    for (double v : out.values()) CHECK(v == 0.0);
    for (double g : z.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward on a non-scalar root needs a seed") {
    Tape<double> tape;
    auto x = leaf({2}, {1, 2});
    CHECK_THROWS_AS(tape.backward(affine(x, 2.0)), Error);
}

TEST_CASE("conv2d") {
    SUBCASE("1x1 identity kernel") {
        std::mt19937_64 rng(1);
        const auto x = random_tensor({1, 1, 4, 5}, rng, -1, 1, false);
        CHECK(vals(conv2d(x, Tensor<double>({1, 1, 1, 1}, 1.0), 1, 0)) == vals(x));
    }
    SUBCASE("3x3 ones on 3x3 ones") {
        const auto y = conv2d(Tensor<double>({1, 1, 3, 3}, 1.0), Tensor<double>({1, 1, 3, 3}, 1.0), 1, 0);
        CHECK(y.shape() == Shape{1, 1, 1, 1});
        CHECK(y[0] == 9.0);
    }
    SUBCASE("non-integral extent rejected unless floored") {
        const Tensor<double> x({1, 1, 28, 28}), k({1, 1, 3, 3});
        CHECK_THROWS_AS(conv2d(x, k, 2, 1), Error);
        CHECK(conv2d(x, k, 2, 1, ExtentRounding::Floor).shape() == Shape{1, 1, 14, 14});
    }
    SUBCASE("zero extent rejected") {
        CHECK_THROWS_AS(conv2d(Tensor<double>({1, 1, 2, 2}), Tensor<double>({1, 1, 3, 3}), 1, 0), Error);
    }
    SUBCASE("matches a naive loop") {
        std::mt19937_64 rng(7);
        const auto x = random_tensor({2, 3, 6, 5}, rng, -1, 1, false);
        const auto k = random_tensor({4, 3, 3, 3}, rng, -1, 1, false);
        const auto y = conv2d(x, k, 2, 1, ExtentRounding::Floor);
        const std::size_t ho = y.dim(2), wo = y.dim(3);
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t o = 0; o < 4; ++o)
                for (std::size_t i = 0; i < ho; ++i)
                    for (std::size_t j = 0; j < wo; ++j) {
                        double s = 0;
                        for (std::size_t c = 0; c < 3; ++c)
                            for (std::size_t u = 0; u < 3; ++u)
                                for (std::size_t v = 0; v < 3; ++v) {
                                    const long yy = static_cast<long>(i * 2 + u) - 1, xx = static_cast<long>(j * 2 + v) - 1;
                                    if (yy < 0 || xx < 0 || yy >= 6 || xx >= 5) continue;
                                    s += x[((b * 3 + c) * 6 + yy) * 5 + xx] * k[((o * 3 + c) * 3 + u) * 3 + v];
                                }
                        CHECK(y[((b * 4 + o) * ho + i) * wo + j] == doctest::Approx(s).epsilon(1e-12));
                    }
    }
}

TEST_CASE("batch norm") {
    SUBCASE("normalized input is a fixed point") {
        const Tensor<double> x({4, 1, 1, 1}, {-1.5, -0.5, 0.5, 1.5});
        // population variance 1.25; rescale to unit variance
        std::vector<double> v;
        for (double a : x.values()) v.push_back(a / std::sqrt(1.25));
        BatchNormStats<double> st{{0.0}, {1.0}};
        const auto y = batch_norm(Tensor<double>({4, 1, 1, 1}, v), Tensor<double>({1}, 1.0), Tensor<double>({1}, 0.0), st,
                                  NormMode::Train);
        for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(v[i]).epsilon(1e-4));
    }
    SUBCASE("constant channel maps to beta") {
        BatchNormStats<double> st{{0.0}, {1.0}};
        const auto y = batch_norm(Tensor<double>({3, 1, 2, 2}, 7.0), Tensor<double>({1}, 2.0), Tensor<double>({1}, 0.25),
                                  st, NormMode::Train);
        for (double v : y.values()) CHECK(v == doctest::Approx(0.25));
    }
    SUBCASE("running statistics follow the moving average") {
        BatchNormStats<double> st{{0.0}, {1.0}};
        batch_norm(Tensor<double>({2, 1, 1, 1}, {1.0, 3.0}), Tensor<double>({1}, 1.0), Tensor<double>({1}, 0.0), st,
                   NormMode::Train);
        CHECK(st.running_mean[0] == doctest::Approx(0.2));
        CHECK(st.running_var[0] == doctest::Approx(0.9 + 0.1 * 2.0));  // unbiased variance 2
    }
    SUBCASE("infer uses running statistics") {
        BatchNormStats<double> st{{1.0}, {4.0}};
        const auto y = batch_norm(Tensor<double>({1, 1, 1, 1}, {5.0}), Tensor<double>({1}, 1.0), Tensor<double>({1}, 0.0),
                                  st, NormMode::Infer, {0.0, 0.1});
        CHECK(y[0] == doctest::Approx(2.0));
    }
}

TEST_CASE("pooling") {
    CHECK(global_avg_pool(Tensor<double>({1, 2, 3, 3}, 1.0)).shape() == Shape{1, 2});
    const auto g = global_avg_pool(Tensor<double>({1, 2, 3, 3}, 1.0));
    for (double v : g.values()) CHECK(v == 1.0);
    const auto m = max_pool2d(Tensor<double>({1, 1, 1, 3}, {1, 5, 3}), 1, 1, 0);
    CHECK(vals(m) == std::vector<double>{1, 5, 3});
    CHECK(reduce(Tensor<double>({1, 3}, {1, 5, 3}), {1}, ReduceKind::Max)[0] == 5.0);
    CHECK(max_pool2d(Tensor<double>({1, 1, 3, 3}, {1, 5, 3, 0, 0, 0, 2, 2, 2}), 3, 1, 0)[0] == 5.0);
    CHECK_THROWS_AS(max_pool2d(Tensor<double>({1, 1, 2, 2}), 3, 1, 0), Error);
    const auto a = avg_pool2d(Tensor<double>({1, 1, 2, 2}, {1, 2, 3, 4}), 2, 2, 0);
    CHECK(a[0] == 2.5);
    SUBCASE("adaptive bins") {
        std::vector<double> v(25);
        for (std::size_t i = 0; i < 25; ++i) v[i] = static_cast<double>(i);
        const auto y = adaptive_avg_pool2d(Tensor<double>({1, 1, 5, 5}, v), 2);
        // bins [0,3) and [2,5) along each axis
        CHECK(y[0] == doctest::Approx((0 + 1 + 2 + 5 + 6 + 7 + 10 + 11 + 12) / 9.0));
        CHECK(y[3] == doctest::Approx((12 + 13 + 14 + 17 + 18 + 19 + 22 + 23 + 24) / 9.0));
    }
}

TEST_CASE("dense, reduce, concat") {
    const Tensor<double> eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(vals(dense(x, eye, Tensor<double>({3}, 0.0))) == vals(x));
    CHECK(dense(Tensor<double>({1, 3}, {1, 2, 3}), Tensor<double>({1, 3}, 1.0), Tensor<double>())[0] == 6.0);
    const auto r = reduce(Tensor<double>({2, 4}, {1, 2, 3, 4, 5, 6, 7, 8}), {1}, ReduceKind::Mean);
    CHECK(vals(r) == std::vector<double>{2.5, 6.5});
    CHECK(reduce(Tensor<double>({1, 4}, {1, 2, 3, 6}), {1}, ReduceKind::Mean)[0] == 3.0);
    const auto c = concat<double>({Tensor<double>({3, 1, 2, 2}), Tensor<double>({3, 1, 2, 2})}, 1);
    CHECK(c.shape() == Shape{3, 2, 2, 2});
}

TEST_CASE("cross entropy") {
    const Tensor<double> logits({2, 3}, {0, 0, 0, 10, 0, 0});
    const double l = cross_entropy(logits, {1, 0}).item();
    const double expect = 0.5 * (std::log(3.0) + (std::log(std::exp(10.0) + 2.0) - 10.0));
    CHECK(l == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(cross_entropy(logits, {1, 3}), Error);
}

TEST_CASE("permute and reshape") {
    const Tensor<double> x({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(vals(permute(x, {1, 0})) == std::vector<double>{1, 4, 2, 5, 3, 6});
    CHECK_THROWS_AS(reshape(x, {4}), Error);
}
