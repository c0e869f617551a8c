#include <doctest.h>

#include <algorithm>

#include "orsnn/attention/syna.hpp"
#include "support/gradcheck.hpp"

using namespace orsnn;
using orsnn::testing::random_tensor;

namespace {

using V = std::vector<double>;

// Straight-line LIF over a time-major series, fresh state.
V lif_oracle(const V& drive, std::size_t steps, const LifConfig& c) {
    const std::size_t n = drive.size() / steps;
    V h(n, c.reset), out(drive.size());
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t i = 0; i < n; ++i) {
            const double u = h[i] + (drive[t * n + i] - (h[i] - c.reset)) / c.tau;
            const double s = u >= c.threshold ? 1.0 : 0.0;
            out[t * n + i] = s;
            h[i] = s == 1.0 ? c.reset : u;
        }
    return out;
}

// y = W1 relu(W0 v), weights row-major [out, in].
V mlp(const V& v, const Tensor<double>& w0, const Tensor<double>& w1) {
    const std::size_t in = w0.dim(1), mid = w0.dim(0);
    V hid(mid, 0.0), y(in, 0.0);
    for (std::size_t m = 0; m < mid; ++m) {
        for (std::size_t i = 0; i < in; ++i) hid[m] += w0[m * in + i] * v[i];
        hid[m] = std::max(hid[m], 0.0);
    }
    for (std::size_t o = 0; o < in; ++o)
        for (std::size_t m = 0; m < mid; ++m) y[o] += w1[o * mid + m] * hid[m];
    return y;
}

V temporal_oracle(const Tensor<double>& x, const TemporalAttention<double>& att) {
    const std::size_t T = x.dim(0), N = x.dim(1), vol = x.size() / (T * N);
    V drive(T * N);
    for (std::size_t n = 0; n < N; ++n) {
        V avg(T, 0.0), mx(T, -1e300);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t k = 0; k < vol; ++k) {
                const double v = x[(t * N + n) * vol + k];
                avg[t] += v / static_cast<double>(vol);
                mx[t] = std::max(mx[t], v);
            }
        const V a = mlp(avg, att.w0, att.w1), b = mlp(mx, att.w0, att.w1);
        for (std::size_t t = 0; t < T; ++t) drive[t * N + n] = a[t] + b[t];
    }
    return lif_oracle(drive, T, att.neuron);
}

V channel_oracle(const Tensor<double>& x, const ChannelAttention<double>& att) {
    const std::size_t T = x.dim(0), N = x.dim(1), C = x.dim(2), hw = x.dim(3) * x.dim(4);
    V drive(T * N * C);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t n = 0; n < N; ++n) {
            V avg(C, 0.0), mx(C, -1e300);
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t k = 0; k < hw; ++k) {
                    const double v = x[((t * N + n) * C + c) * hw + k];
                    avg[c] += v / static_cast<double>(hw);
                    mx[c] = std::max(mx[c], v);
                }
            const V a = mlp(avg, att.w0, att.w1), b = mlp(mx, att.w0, att.w1);
            for (std::size_t c = 0; c < C; ++c) drive[(t * N + n) * C + c] = a[c] + b[c];
        }
    return lif_oracle(drive, T, att.neuron);
}

V spatial_oracle(const Tensor<double>& x, const SpatialAttention<double>& att) {
    const std::size_t T = x.dim(0), N = x.dim(1), C = x.dim(2), H = x.dim(3), W = x.dim(4);
    const std::size_t ks = att.kernel_size();
    const long pad = static_cast<long>(ks / 2);
    V drive(T * N * H * W);
    for (std::size_t tn = 0; tn < T * N; ++tn) {
        V mx(H * W, -1e300), avg(H * W, 0.0);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t p = 0; p < H * W; ++p) {
                const double v = x[(tn * C + c) * H * W + p];
                mx[p] = std::max(mx[p], v);
                avg[p] += v / static_cast<double>(C);
            }
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                double s = 0;
                for (std::size_t u = 0; u < ks; ++u)
                    for (std::size_t v = 0; v < ks; ++v) {
                        const long yy = static_cast<long>(i + u) - pad, xx = static_cast<long>(j + v) - pad;
                        if (yy < 0 || xx < 0 || yy >= static_cast<long>(H) || xx >= static_cast<long>(W)) continue;
                        const std::size_t p = static_cast<std::size_t>(yy) * W + static_cast<std::size_t>(xx);
                        s += att.kernel[u * ks + v] * mx[p] + att.kernel[ks * ks + u * ks + v] * avg[p];
                    }
                drive[tn * H * W + i * W + j] = s;
            }
    }
    return lif_oracle(drive, T, att.neuron);
}

template <class R>
bool all_binary(const Tensor<R>& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](R v) { return v == R(0) || v == R(1); });
}

void fill(Tensor<double>& t, double v) {
    for (auto& a : t.mutable_values()) a = v;
}

}  // namespace

TEST_CASE("attention weights match naive-loop oracles") {
    const LifConfig lif;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const auto x = random_tensor({4, 2, 8, 3, 3}, rng, -1, 3, false);
        const auto ta = TemporalAttention<double>::create(4, 2, lif, rng);
        const auto ca = ChannelAttention<double>::create(8, 4, lif, rng);
        const auto sa = SpatialAttention<double>::create(3, lif, rng);

        const auto wt = ma_t_weights(x, ta);
        CHECK(wt.shape() == Shape{4, 2});
        CHECK(std::vector<double>(wt.values().begin(), wt.values().end()) == temporal_oracle(x, ta));
        const auto wc = ma_c_weights(x, ca);
        CHECK(wc.shape() == Shape{4, 2, 8});
        CHECK(std::vector<double>(wc.values().begin(), wc.values().end()) == channel_oracle(x, ca));
        const auto ws = ia_s_weights(x, sa);
        CHECK(ws.shape() == Shape{4, 2, 1, 3, 3});
        const V so = spatial_oracle(x, sa);
        // conv accumulates in another order; spikes still agree on these seeds
        std::size_t agree = 0;
        for (std::size_t i = 0; i < so.size(); ++i) agree += ws[i] == so[i];
        CHECK(agree == so.size());
    }
}

TEST_CASE("weights are binary on random inputs for every dimension and role") {
    const LifConfig lif;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_tensor({4, 3, 16, 5, 5}, rng, -3, 3, false);
        for (auto dim : {AttentionDim::Temporal, AttentionDim::Channel, AttentionDim::Spatial}) {
            const auto ma = make_attention<double>(dim, 4, 16, {}, lif, rng);
            const auto ia = make_attention<double>(dim, 4, 16, {}, lif, rng);
            const auto wm = attention_weights(x, ma), wi = ia_weights(x, ia);
            CHECK(all_binary(wm));
            CHECK(all_binary(wi));
            // binary x gated by binary w stays binary
            Tensor<double> bits(x.shape());
            for (std::size_t i = 0; i < x.size(); ++i) bits.mutable_values()[i] = x[i] > 0 ? 1.0 : 0.0;
            CHECK(all_binary(apply_attention(bits, wm, dim)));
        }
    }
}

TEST_CASE("zero network gates everything off") {
    const LifConfig lif;
    std::mt19937_64 rng(1);
    const auto x = random_tensor({4, 2, 4, 3, 3}, rng, 0.5, 2, false);
    auto ta = TemporalAttention<double>::create(4, 2, lif, rng);
    fill(ta.w0, 0.0);
    fill(ta.w1, 0.0);
    auto ca = ChannelAttention<double>::create(4, 2, lif, rng);
    fill(ca.w0, 0.0);
    fill(ca.w1, 0.0);
    auto sa = SpatialAttention<double>::create(3, lif, rng);
    fill(sa.kernel, 0.0);
    for (const auto& [w, dim] : {std::pair{ma_t_weights(x, ta), AttentionDim::Temporal},
                                 std::pair{ma_c_weights(x, ca), AttentionDim::Channel},
                                 std::pair{ia_s_weights(x, sa), AttentionDim::Spatial}}) {
        for (double v : w.values()) CHECK(v == 0.0);
        const auto y = apply_attention(x, w, dim);
        for (double v : y.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("saturated network is the identity gate") {
    const LifConfig lif;
    std::mt19937_64 rng(2);
    const Tensor<double> x({4, 2, 4, 3, 3}, 1.0);
    auto ta = TemporalAttention<double>::create(4, 2, lif, rng);
    fill(ta.w0, 5.0);
    fill(ta.w1, 5.0);
    auto ca = ChannelAttention<double>::create(4, 2, lif, rng);
    fill(ca.w0, 5.0);
    fill(ca.w1, 5.0);
    auto sa = SpatialAttention<double>::create(3, lif, rng);
    fill(sa.kernel, 5.0);
    for (const auto& [w, dim] : {std::pair{ma_t_weights(x, ta), AttentionDim::Temporal},
                                 std::pair{ma_c_weights(x, ca), AttentionDim::Channel},
                                 std::pair{ia_s_weights(x, sa), AttentionDim::Spatial}}) {
        for (double v : w.values()) CHECK(v == 1.0);
        const auto y = apply_attention(x, w, dim);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
    }
}

TEST_CASE("constant input: both branches equal, drive doubles") {
    LifConfig lif;
    std::mt19937_64 rng(4);
    const Tensor<double> x({4, 1, 2, 2, 2}, 0.3);
    const auto ta = TemporalAttention<double>::create(4, 2, lif, rng);
    const V single = mlp(V(4, 0.3), ta.w0, ta.w1);
    V doubled(4);
    for (std::size_t t = 0; t < 4; ++t) doubled[t] = 2.0 * single[t];
    const auto w = ma_t_weights(x, ta);
    CHECK(std::vector<double>(w.values().begin(), w.values().end()) == lif_oracle(doubled, 4, lif));
}

TEST_CASE("evaluation is pure") {
    const LifConfig lif;
    std::mt19937_64 rng(8);
    const auto x = random_tensor({4, 2, 8, 3, 3}, rng, -1, 3, false);
    const auto ca = ChannelAttention<double>::create(8, 2, lif, rng);
    const auto a = ma_c_weights(x, ca), b = ma_c_weights(x, ca);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST_CASE("shape errors") {
    const LifConfig lif;
    std::mt19937_64 rng(0);
    const auto x = random_tensor({4, 1, 8, 3, 3}, rng, -1, 1, false);
    CHECK_THROWS_AS(ma_t_weights(x, TemporalAttention<double>::create(8, 2, lif, rng)), Error);
    CHECK_THROWS_AS(ma_c_weights(x, ChannelAttention<double>::create(16, 2, lif, rng)), Error);
    CHECK_THROWS_AS(SpatialAttention<double>::create(4, lif, rng), Error);
    auto sa = SpatialAttention<double>::create(3, lif, rng);
    sa.kernel = Tensor<double>({1, 2, 2, 2});
    CHECK_THROWS_AS(ia_s_weights(x, sa), Error);
    CHECK_THROWS_AS(TemporalAttention<double>::create(6, 4, lif, rng), Error);
    CHECK_THROWS_AS(apply_attention(x, Tensor<double>({4, 2}, 1.0), AttentionDim::Temporal), Error);
    CHECK_THROWS_AS(apply_attention(x, Tensor<double>({4, 1, 8}, 1.0), AttentionDim::Spatial), Error);
}

TEST_CASE("apply_attention broadcasts along missing axes") {
    const Tensor<double> x({2, 1, 2, 1, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    const auto yt = apply_attention(x, Tensor<double>({2, 1}, {1, 0}), AttentionDim::Temporal);
    CHECK(std::vector<double>(yt.values().begin(), yt.values().end()) == V{1, 2, 3, 4, 0, 0, 0, 0});
    const auto yc = apply_attention(x, Tensor<double>({2, 1, 2}, {0, 1, 1, 0}), AttentionDim::Channel);
    CHECK(std::vector<double>(yc.values().begin(), yc.values().end()) == V{0, 0, 3, 4, 5, 6, 0, 0});
    const auto ys = apply_attention(x, Tensor<double>({2, 1, 1, 1, 2}, {1, 0, 0, 1}), AttentionDim::Spatial);
    CHECK(std::vector<double>(ys.values().begin(), ys.values().end()) == V{1, 0, 3, 0, 0, 6, 0, 8});
}

TEST_CASE("plan notation") {
    const auto p = parse_attention_plan("C/b");
    REQUIRE(p.has_value());
    CHECK(p->dim == AttentionDim::Channel);
    CHECK(p->placement == Placement::B);
    CHECK(p->render() == "C/b");
    CHECK_FALSE(parse_attention_plan("none").has_value());
    CHECK_THROWS_AS(parse_attention_plan("X/a"), Error);
    CHECK_THROWS_AS(parse_attention_plan("T/e"), Error);
    CHECK_THROWS_AS(parse_attention_plan("Ta"), Error);
}
