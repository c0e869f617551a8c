#pragma once

#include "orsnn/tensor/ops.hpp"

namespace orsnn {

/// Leaky integrate-and-fire hyper-parameters. Defaults: threshold 1.0,
/// reset 0, tau 2.0, ATan surrogate, hard reset.
struct LifConfig {
    double tau = 2.0;
    double threshold = 1.0;
    double reset = 0.0;
    double surrogate_alpha = 2.0;
    // Reset term H = U(1 - S) treats S as a constant during backprop.
    bool detach_reset = true;

    void validate() const;
    bool operator==(const LifConfig&) const = default;
};

/// Forward value of the spike nonlinearity.
enum class SpikeForward {
    Heaviside,  // exact step, Θ(0) = 1
    Smooth,     // the surrogate's primitive; used for gradient checks only
};

/// alpha / (2 (1 + (π alpha v / 2)^2))
double atan_surrogate_grad(double v, double alpha);
/// atan(π alpha v / 2) / π + 1/2, whose derivative is atan_surrogate_grad.
double atan_surrogate_primitive(double v, double alpha);

/// Heaviside step forward, ATan surrogate derivative backward.
template <class Real>
Tensor<Real> spike_fn(const Tensor<Real>& v, double alpha, SpikeForward forward = SpikeForward::Heaviside);

/// Hidden membrane potentials carried across the steps of one sequence.
template <class Real>
struct LifState {
    Tensor<Real> hidden;
    bool initialized = false;

    void reset() {
        hidden = Tensor<Real>();
        initialized = false;
    }
};

/// One step of the iterative LIF recurrence, composed from differentiable
/// primitives:
///   U = H + (I - (H - u_reset)) / tau
///   S = Θ(U - u_threshold)
///   H' = U (1 - S) + u_reset S
/// An uninitialized state starts at H = u_reset with the shape of `input`.
template <class Real>
Tensor<Real> lif_step(LifState<Real>& state, const Tensor<Real>& input, const LifConfig& config,
                      SpikeForward forward = SpikeForward::Heaviside);

/// Result of running the recurrence over every step of a [T, ...] input.
template <class Real>
struct LifRun {
    Tensor<Real> spikes;        // [T, ...], same shape as the input
    std::vector<Real> hidden;   // H after the last step, shape input.shape()[1:]
};

/// Fused multi-step LIF over axis 0 with hand-written BPTT. Numerically the
/// same recurrence as repeated lif_step calls. `initial_hidden` may be empty,
/// meaning H starts at u_reset.
template <class Real>
LifRun<Real> lif_multistep(const Tensor<Real>& input, const LifConfig& config,
                           std::span<const Real> initial_hidden = {},
                           SpikeForward forward = SpikeForward::Heaviside);

}  // namespace orsnn
