#include <doctest.h>

#include <cmath>
#include <limits>

#include "orsnn/neuron/lif.hpp"
#include "orsnn/tensor/init.hpp"
#include "support/gradcheck.hpp"

using namespace orsnn;
using orsnn::testing::random_tensor;

namespace {

LifConfig hand_config() {
    LifConfig c;
    c.tau = 2.0;
    c.threshold = 1.0;
    c.reset = 0.0;
    return c;
}

}  // namespace

TEST_CASE("single-step examples") {
    const LifConfig c = hand_config();
    LifState<double> s;
    auto spike = lif_step(s, Tensor<double>({1}, {1.0}), c);
    CHECK(spike[0] == 0.0);
    CHECK(s.hidden[0] == 0.5);

    LifState<double> s2;
    s2.hidden = Tensor<double>({1}, {0.9});
    s2.initialized = true;
    spike = lif_step(s2, Tensor<double>({1}, {1.5}), c);
    CHECK(spike[0] == 1.0);
    CHECK(s2.hidden[0] == 0.0);
}

TEST_CASE("ten-step hand trace") {
    // U_t = H + (I - H) / 2; spike when U >= 1; H = 0 after a spike.
    const std::vector<double> input = {1.5, 0.5, 2.5, 2.0, 1.0, 3.0, 0.2, 0.8, 1.9, 0.0};
    const std::vector<double> u = {0.75, 0.625, 1.5625, 1.0, 0.5, 1.75, 0.1, 0.45, 1.175, 0.0};
    const std::vector<double> s = {0, 0, 1, 1, 0, 1, 0, 0, 1, 0};
    LifState<double> st;
    for (std::size_t t = 0; t < input.size(); ++t) {
        const auto spike = lif_step(st, Tensor<double>({1}, {input[t]}), hand_config());
        CHECK(spike[0] == s[t]);
        const double h = s[t] == 1.0 ? 0.0 : u[t];
        CHECK(std::abs(st.hidden[0] - h) <= 1e-12);
    }
    const auto run = lif_multistep(Tensor<double>({10, 1}, input), hand_config());
    for (std::size_t t = 0; t < 10; ++t) CHECK(run.spikes[t] == s[t]);
    CHECK(run.hidden[0] == 0.0);
}

TEST_CASE("threshold crossing is inclusive") {
    LifState<double> st;
    CHECK(lif_step(st, Tensor<double>({1}, {2.0}), hand_config())[0] == 1.0);  // U = 1 exactly
}

TEST_CASE("zero input stays quiescent") {
    const auto run = lif_multistep(Tensor<double>({50, 3}, 0.0), hand_config());
    for (double v : run.spikes.values()) CHECK(v == 0.0);
}

TEST_CASE("nonzero reset potential") {
    LifConfig c = hand_config();
    c.reset = -0.5;
    LifState<double> st;  // starts at u_reset
    // U = -0.5 + (3 - 0) / 2 = 1.0 -> spike, H = u_reset
    CHECK(lif_step(st, Tensor<double>({1}, {3.0}), c)[0] == 1.0);
    CHECK(st.hidden[0] == -0.5);
    // U = -0.5 + (0 - 0) / 2 = -0.5: the leak pulls toward u_reset, not 0
    CHECK(lif_step(st, Tensor<double>({1}, {0.0}), c)[0] == 0.0);
    CHECK(st.hidden[0] == -0.5);
}

TEST_CASE("spike function and surrogate") {
    const auto s = spike_fn(Tensor<double>({3}, {0.2, -0.2, 0.0}), 2.0);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == 0.0);
    CHECK(s[2] == 1.0);
    CHECK(atan_surrogate_grad(0.0, 2.0) == doctest::Approx(1.0));
    Tape<double> tape;
    Tensor<double> v({1}, {0.0});
    v.set_requires_grad(true);
    tape.backward(sum(spike_fn(v, 2.0)));
    CHECK(v.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("fused multistep equals composed steps bit for bit") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t steps = 2 + seed % 6;
        LifConfig c;
        c.tau = 1.5 + static_cast<double>(seed % 3);
        c.threshold = 0.5 + 0.25 * static_cast<double>(seed % 4);
        c.reset = seed % 2 ? -0.1 : 0.0;
        c.detach_reset = seed % 3 != 0;
        const auto x = random_tensor({steps, 3, 4}, rng, -1, 3, true);
        const auto w = random_tensor({steps, 3, 4}, rng, -1, 1, false);

        Tape<double> t1;
        const auto fused = lif_multistep(x, c);
        t1.backward(sum(mul(fused.spikes, w)));
        const std::vector<double> g_fused(x.grad().begin(), x.grad().end());

        x.node()->grad.clear();
        Tape<double> t2;
        LifState<double> st;
        std::vector<Tensor<double>> outs;
        for (std::size_t t = 0; t < steps; ++t) {
            std::vector<double> row(x.values().begin() + static_cast<std::ptrdiff_t>(t * 12),
                                    x.values().begin() + static_cast<std::ptrdiff_t>((t + 1) * 12));
            // Slice through a one-hot dense map so the gradient reaches x.
            std::vector<double> sel(steps, 0.0);
            sel[t] = 1.0;
            const auto slice = reshape(dense(permute(reshape(x, {steps, 12}), {1, 0}), Tensor<double>({1, steps}, sel),
                                             Tensor<double>()),
                                       {3, 4});
            outs.push_back(lif_step(st, slice, c));
            for (std::size_t i = 0; i < 12; ++i) CHECK(outs.back()[i] == fused.spikes[t * 12 + i]);
        }
        const auto composed = reshape(concat(outs, 0), {steps, 3, 4});
        t2.backward(sum(mul(composed, w)));
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(g_fused[i]).epsilon(1e-12));
        for (std::size_t i = 0; i < 12; ++i) CHECK(st.hidden[i] == fused.hidden[i]);
    }
}

TEST_CASE("fused and composed agree exactly in float") {
    std::mt19937_64 rng(5);
    std::vector<float> v(6 * 40);
    for (auto& a : v) a = static_cast<float>(uniform(rng, -0.5, 2.5));
    const Tensor<float> x({6, 40}, v);
    const auto fused = lif_multistep(x, hand_config());
    LifState<float> st;
    for (std::size_t t = 0; t < 6; ++t) {
        const Tensor<float> row({40}, std::vector<float>(v.begin() + static_cast<std::ptrdiff_t>(t * 40),
                                                         v.begin() + static_cast<std::ptrdiff_t>((t + 1) * 40)));
        const auto s = lif_step(st, row, hand_config());
        for (std::size_t i = 0; i < 40; ++i) CHECK(s[i] == fused.spikes[t * 40 + i]);
    }
}

TEST_CASE("invalid inputs fail fast") {
    LifState<double> st;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lif_step(st, Tensor<double>({2}, {0.0, nan}), hand_config()), Error);
    LifState<double> st2;
    lif_step(st2, Tensor<double>({2}, 0.0), hand_config());
    CHECK_THROWS_AS(lif_step(st2, Tensor<double>({3}, 0.0), hand_config()), Error);
    LifConfig bad = hand_config();
    bad.tau = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = hand_config();
    bad.threshold = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
