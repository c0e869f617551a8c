#include "orsnn/neuron/lif.hpp"

#include <cmath>
#include <numbers>

namespace orsnn {

void LifConfig::validate() const {
    if (!(tau > 0.0)) fail(ErrorKind::InvalidArgument, "LIF tau must be > 0");
    if (!(threshold > reset)) fail(ErrorKind::InvalidArgument, "LIF threshold must exceed the reset potential");
    if (!(surrogate_alpha > 0.0)) fail(ErrorKind::InvalidArgument, "surrogate alpha must be > 0");
}

double atan_surrogate_grad(double v, double alpha) {
    const double z = std::numbers::pi * alpha * v / 2.0;
    return alpha / (2.0 * (1.0 + z * z));
}

double atan_surrogate_primitive(double v, double alpha) {
    return std::atan(std::numbers::pi * alpha * v / 2.0) / std::numbers::pi + 0.5;
}

namespace {

template <class Real>
void require_finite(std::span<const Real> values, const char* where) {
    for (auto v : values) {
        if (std::isnan(v)) fail(ErrorKind::NaNDetected, std::string("NaN input to ") + where);
    }
}

template <class Real>
Real spike_value(Real v, double alpha, SpikeForward forward) {
    if (forward == SpikeForward::Smooth) return static_cast<Real>(atan_surrogate_primitive(v, alpha));
    return v >= Real(0) ? Real(1) : Real(0);
}

}  // namespace

template <class Real>
Tensor<Real> spike_fn(const Tensor<Real>& v, double alpha, SpikeForward forward) {
    const auto x = v.values();
    std::vector<Real> value(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) value[i] = spike_value(x[i], alpha, forward);
    return detail::make_result<Real>(
        v.shape(), std::move(value), {v.node()},
        [alpha](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                in.grad[i] += self.grad[i] * static_cast<Real>(atan_surrogate_grad(in.value[i], alpha));
            }
        },
        "spike");
}

template <class Real>
Tensor<Real> lif_step(LifState<Real>& state, const Tensor<Real>& input, const LifConfig& config,
                      SpikeForward forward) {
    require_finite(input.values(), "lif_step");
    if (!state.initialized) {
        state.hidden = Tensor<Real>(input.shape(), static_cast<Real>(config.reset));
        state.initialized = true;
    }
    if (state.hidden.shape() != input.shape()) {
        fail(ErrorKind::ShapeMismatch, "lif_step input " + to_string(input.shape()) + " does not match state " +
                                           to_string(state.hidden.shape()));
    }
    const Tensor<Real>& h = state.hidden;
    const Tensor<Real> leak = sub(input, affine(h, 1.0, -config.reset));
    const Tensor<Real> u = add(h, affine(leak, 1.0 / config.tau));
    const Tensor<Real> s = spike_fn(affine(u, 1.0, -config.threshold), config.surrogate_alpha, forward);
    const Tensor<Real> gate = config.detach_reset ? stop_gradient(s) : s;
    state.hidden = add(mul(u, affine(gate, -1.0, 1.0)), affine(gate, config.reset));
    return s;
}

template <class Real>
LifRun<Real> lif_multistep(const Tensor<Real>& input, const LifConfig& config, std::span<const Real> initial_hidden,
                           SpikeForward forward) {
    require_finite(input.values(), "lif_multistep");
    if (input.rank() < 1 || input.dim(0) == 0) {
        fail(ErrorKind::ShapeMismatch, "lif_multistep expects a leading time axis, got " + to_string(input.shape()));
    }
    const std::size_t steps = input.dim(0);
    const std::size_t width = input.size() / steps;
    if (!initial_hidden.empty() && initial_hidden.size() != width) {
        fail(ErrorKind::ShapeMismatch, "lif_multistep state holds " + std::to_string(initial_hidden.size()) +
                                           " neurons, input step holds " + std::to_string(width));
    }
    const Real reset = static_cast<Real>(config.reset);
    const Real threshold = static_cast<Real>(config.threshold);
    const Real inv_tau = static_cast<Real>(1.0 / config.tau);
    const auto x = input.values();
    std::vector<Real> h(width, reset);
    if (!initial_hidden.empty()) std::copy(initial_hidden.begin(), initial_hidden.end(), h.begin());
    std::vector<Real> spikes(input.size());
    std::vector<Real> potentials(input.size());
    for (std::size_t t = 0; t < steps; ++t) {
        const Real* xt = x.data() + t * width;
        Real* ut = potentials.data() + t * width;
        Real* st = spikes.data() + t * width;
        for (std::size_t i = 0; i < width; ++i) {
            const Real u = h[i] + (xt[i] - (h[i] - reset)) * inv_tau;
            const Real s = spike_value<Real>(u - threshold, config.surrogate_alpha, forward);
            ut[i] = u;
            st[i] = s;
            h[i] = u * (Real(1) - s) + reset * s;
        }
    }
    const double alpha = config.surrogate_alpha;
    const bool detach = config.detach_reset;
    Tensor<Real> out = detail::make_result<Real>(
        input.shape(), spikes, {input.node()},
        [=, potentials = std::move(potentials), spikes = spikes](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            std::vector<Real> carry(width, Real(0));  // dL/dH_t flowing back from step t+1
            for (std::size_t t = steps; t-- > 0;) {
                const Real* ut = potentials.data() + t * width;
                const Real* st = spikes.data() + t * width;
                const Real* gs = self.grad.data() + t * width;
                Real* gi = in.grad.data() + t * width;
                for (std::size_t i = 0; i < width; ++i) {
                    const Real sg = static_cast<Real>(atan_surrogate_grad(ut[i] - threshold, alpha));
                    Real dh_du = Real(1) - st[i];
                    if (!detach) dh_du += (reset - ut[i]) * sg;
                    const Real du = gs[i] * sg + carry[i] * dh_du;
                    gi[i] += du * inv_tau;
                    carry[i] = du * (Real(1) - inv_tau);
                }
            }
        },
        "lif");
    return LifRun<Real>{std::move(out), std::move(h)};
}

template Tensor<float> spike_fn(const Tensor<float>&, double, SpikeForward);
template Tensor<double> spike_fn(const Tensor<double>&, double, SpikeForward);
template Tensor<float> lif_step(LifState<float>&, const Tensor<float>&, const LifConfig&, SpikeForward);
template Tensor<double> lif_step(LifState<double>&, const Tensor<double>&, const LifConfig&, SpikeForward);
template LifRun<float> lif_multistep(const Tensor<float>&, const LifConfig&, std::span<const float>, SpikeForward);
template LifRun<double> lif_multistep(const Tensor<double>&, const LifConfig&, std::span<const double>, SpikeForward);

}  // namespace orsnn
