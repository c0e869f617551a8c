#include "gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "orsnn/attention/syna.hpp"
#include "orsnn/neuron/lif.hpp"
#include "orsnn/residual/join.hpp"
#include "orsnn/tensor/init.hpp"

namespace orsnn::testing {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi, bool requires_grad) {
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = uniform(rng, lo, hi);
    Tensor<double> t(std::move(shape), std::move(v));
    t.set_requires_grad(requires_grad);
    return t;
}

GradCase check_gradient(const std::string& op, std::uint64_t seed, std::vector<Tensor<double>> inputs, const GradFn& f,
                        double tol) {
    GradCase c;
    c.op = op;
    c.seed = seed;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

    // Analytic pass.
    Tensor<double> weights;
    {
        Tape<double> tape;
        for (auto& x : inputs) x.zero_grad();
        const Tensor<double> out = f(inputs);
        weights = random_tensor(out.shape(), rng, -1.0, 1.0, false);
        tape.backward(sum(mul(out, weights)));
    }
    auto loss = [&]() {
        const Tensor<double> out = f(inputs);
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weights[i];
        return s;
    };

    const double h = 1e-6;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (!inputs[k].requires_grad()) continue;
        auto vals = inputs[k].mutable_values();
        const auto grad = inputs[k].grad();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + h;
            const double up = loss();
            vals[i] = keep - h;
            const double down = loss();
            vals[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double analytic = grad.empty() ? 0.0 : grad[i];
            const double diff = std::abs(analytic - numeric);
            const double scale = std::max(std::abs(analytic), std::abs(numeric));
            const double rel = diff / std::max(scale, 1e-4);
            c.worst = std::max(c.worst, rel);
            ++c.checked;
            if (diff > tol * scale && diff > 1e-8 && c.ok) {
                c.ok = false;
                std::ostringstream os;
                os << "input " << k << " element " << i << ": analytic " << analytic << " numeric " << numeric;
                c.detail = os.str();
            }
        }
    }
    return c;
}

namespace {

using T = Tensor<double>;
using Ins = std::vector<T>;

// Keeps values away from the kink of relu/abs-like ops.
T away_from_zero(Shape shape, std::mt19937_64& rng) {
    T t = random_tensor(std::move(shape), rng);
    for (auto& v : t.mutable_values()) v = v < 0 ? v - 0.05 : v + 0.05;
    return t;
}

LifConfig smooth_lif() {
    LifConfig c;
    c.tau = 2.0;
    c.threshold = 0.5;
    c.detach_reset = false;  // finite differences see the reset path
    return c;
}

}  // namespace

std::vector<GradCase> gradient_suite(std::size_t seeds, std::uint64_t base_seed) {
    std::vector<GradCase> out;
    for (std::size_t s = 0; s < seeds; ++s) {
        const std::uint64_t seed = base_seed + s;
        std::mt19937_64 rng(seed);
        auto run = [&](const std::string& op, Ins in, const GradFn& f) {
            out.push_back(check_gradient(op, seed, std::move(in), f));
        };

        run("add", {random_tensor({2, 3, 4}, rng), random_tensor({3, 1}, rng)},
            [](const Ins& x) { return add(x[0], x[1]); });
        run("sub", {random_tensor({3, 4}, rng), random_tensor({4}, rng)}, [](const Ins& x) { return sub(x[0], x[1]); });
        run("mul", {random_tensor({2, 3, 4}, rng), random_tensor({2, 1, 4}, rng)},
            [](const Ins& x) { return mul(x[0], x[1]); });
        run("affine", {random_tensor({5, 2}, rng)}, [](const Ins& x) { return affine(x[0], -1.7, 0.3); });
        run("relu", {away_from_zero({4, 5}, rng)}, [](const Ins& x) { return relu(x[0]); });
        run("reshape+permute", {random_tensor({2, 3, 4}, rng)},
            [](const Ins& x) { return permute(reshape(x[0], {3, 2, 4}), {2, 0, 1}); });
        run("conv2d", {random_tensor({2, 2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng)},
            [](const Ins& x) { return conv2d(x[0], x[1], 1, 1); });
        run("conv2d-strided", {random_tensor({1, 2, 6, 6}, rng), random_tensor({2, 2, 3, 3}, rng)},
            [](const Ins& x) { return conv2d(x[0], x[1], 2, 1, ExtentRounding::Floor); });
        run("batch_norm-train", {random_tensor({4, 3, 2, 2}, rng), random_tensor({3}, rng, 0.5, 1.5), random_tensor({3}, rng)},
            [](const Ins& x) {
                BatchNormStats<double> st{std::vector<double>(3, 0.0), std::vector<double>(3, 1.0)};
                return batch_norm(x[0], x[1], x[2], st, NormMode::Train);
            });
        {
            std::vector<double> mean(3), var(3);
            for (auto& v : mean) v = uniform(rng, -0.5, 0.5);
            for (auto& v : var) v = uniform(rng, 0.5, 2.0);
            run("batch_norm-infer", {random_tensor({2, 3, 2, 2}, rng), random_tensor({3}, rng), random_tensor({3}, rng)},
                [mean, var](const Ins& x) {
                    BatchNormStats<double> st{mean, var};
                    return batch_norm(x[0], x[1], x[2], st, NormMode::Infer);
                });
        }
        run("max_pool2d", {random_tensor({2, 2, 5, 5}, rng)}, [](const Ins& x) { return max_pool2d(x[0], 3, 2, 1); });
        run("avg_pool2d", {random_tensor({2, 2, 4, 4}, rng)}, [](const Ins& x) { return avg_pool2d(x[0], 2, 2, 0); });
        run("adaptive_avg_pool2d", {random_tensor({1, 2, 7, 7}, rng)},
            [](const Ins& x) { return adaptive_avg_pool2d(x[0], 3); });
        run("global_avg_pool", {random_tensor({2, 3, 3, 3}, rng)}, [](const Ins& x) { return global_avg_pool(x[0]); });
        run("dense", {random_tensor({3, 4}, rng), random_tensor({5, 4}, rng), random_tensor({5}, rng)},
            [](const Ins& x) { return dense(x[0], x[1], x[2]); });
        run("reduce-mean", {random_tensor({2, 3, 4}, rng)},
            [](const Ins& x) { return reduce(x[0], {0, 2}, ReduceKind::Mean); });
        run("reduce-max", {random_tensor({2, 3, 4}, rng)}, [](const Ins& x) { return reduce(x[0], {1}, ReduceKind::Max); });
        run("sum", {random_tensor({3, 3}, rng)}, [](const Ins& x) { return sum(x[0]); });
        run("concat", {random_tensor({2, 1, 3}, rng), random_tensor({2, 2, 3}, rng)},
            [](const Ins& x) { return concat<double>({x[0], x[1]}, 1); });
        {
            std::vector<std::int32_t> labels(4);
            for (auto& l : labels) l = static_cast<std::int32_t>(rng() % 5);
            run("cross_entropy", {random_tensor({4, 5}, rng, -2, 2)},
                [labels](const Ins& x) { return cross_entropy(x[0], labels); });
        }
        run("spike_fn-smooth", {random_tensor({3, 4}, rng)},
            [](const Ins& x) { return spike_fn(x[0], 2.0, SpikeForward::Smooth); });
        run("lif_step-smooth", {random_tensor({4, 2, 3}, rng, -0.5, 2.0)}, [](const Ins& x) {
            LifState<double> st;
            std::vector<T> steps;
            const T flat = reshape(x[0], {4, 6});
            for (std::size_t t = 0; t < 4; ++t) {
                // Row t through a one-hot selection keeps the op set small.
                std::vector<double> sel(4, 0.0);
                sel[t] = 1.0;
                const T row = dense(permute(flat, {1, 0}), T({1, 4}, sel), T());
                steps.push_back(lif_step(st, reshape(row, {2, 3}), smooth_lif(), SpikeForward::Smooth));
            }
            return concat(steps, 0);
        });
        run("lif_multistep-smooth", {random_tensor({5, 2, 3}, rng, -0.5, 2.0)},
            [](const Ins& x) { return lif_multistep(x[0], smooth_lif(), {}, SpikeForward::Smooth).spikes; });
        run("join-or", {random_tensor({3, 4}, rng, 0, 1), random_tensor({3, 4}, rng, 0, 1)},
            [](const Ins& x) { return join(x[0], x[1], JoinMode::Or); });
        run("join-and", {random_tensor({3, 4}, rng, 0, 1), random_tensor({3, 4}, rng, 0, 1)},
            [](const Ins& x) { return join(x[0], x[1], JoinMode::And); });
        run("join-iand", {random_tensor({3, 4}, rng, 0, 1), random_tensor({3, 4}, rng, 0, 1)},
            [](const Ins& x) { return join(x[0], x[1], JoinMode::IAnd); });
        run("join-add", {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
            [](const Ins& x) { return join(x[0], x[1], JoinMode::Add); });
        run("apply_attention", {random_tensor({2, 2, 3, 2, 2}, rng), random_tensor({2, 2, 3}, rng)},
            [](const Ins& x) { return apply_attention(x[0], x[1], AttentionDim::Channel); });

        // Two conv-BN-LIF stages over T = 3 with the smooth spike forward,
        // time-averaged head, cross-entropy.
        {
            std::vector<std::int32_t> labels = {static_cast<std::int32_t>(rng() % 3), static_cast<std::int32_t>(rng() % 3)};
            run("snn-2layer-smooth",
                {random_tensor({3, 2, 1, 4, 4}, rng, 0, 1), random_tensor({2, 1, 3, 3}, rng), random_tensor({2}, rng, 0.5, 1.5),
                 random_tensor({2}, rng), random_tensor({3, 32}, rng, -0.5, 0.5)},
                [labels](const Ins& x) {
                    const LifConfig lif = smooth_lif();
                    const std::size_t steps = 3, n = 2;
                    const T planes = reshape(x[0], {steps * n, 1, 4, 4});
                    BatchNormStats<double> st{std::vector<double>(2, 0.0), std::vector<double>(2, 1.0)};
                    const T bn = batch_norm(conv2d(planes, x[1], 1, 1), x[2], x[3], st, NormMode::Train);
                    const T s1 = lif_multistep(reshape(bn, {steps, n, 2, 4, 4}), lif, {}, SpikeForward::Smooth).spikes;
                    const T fc = dense(reshape(s1, {steps, n, 32}), x[4], T());
                    const T s2 = lif_multistep(fc, lif, {}, SpikeForward::Smooth).spikes;
                    return cross_entropy(reduce(affine(s2, 3.0), {0}, ReduceKind::Mean), labels);
                });
        }
    }
    return out;
}

}  // namespace orsnn::testing
