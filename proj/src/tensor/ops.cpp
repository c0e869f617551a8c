#include "orsnn/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace orsnn {

namespace {

template <class Real>
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MatMap = Eigen::Map<RowMatrix<Real>>;
template <class Real>
using ConstMatMap = Eigen::Map<const RowMatrix<Real>>;

template <class Real>
using NodePtr = std::shared_ptr<TensorNode<Real>>;

// Walks every output position of a broadcast binary op, yielding the linear
// offsets into both operands.
template <class F>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& f) {
    const std::size_t rank = out.size();
    const std::size_t total = numel(out);
    if (rank == 0) {
        f(std::size_t{0}, std::size_t{0}, std::size_t{0});
        return;
    }
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0;
    std::size_t ib = 0;
    for (std::size_t i = 0; i < total; ++i) {
        f(i, ia, ib);
        for (std::size_t ax = rank; ax-- > 0;) {
            ++idx[ax];
            ia += sa[ax];
            ib += sb[ax];
            if (idx[ax] < out[ax]) break;
            ia -= sa[ax] * out[ax];
            ib -= sb[ax] * out[ax];
            idx[ax] = 0;
        }
    }
}

enum class BinOp { Add, Sub, Mul };

template <class Real>
Tensor<Real> binary(const Tensor<Real>& a, const Tensor<Real>& b, BinOp op) {
    const Shape out = broadcast_shapes(a.shape(), b.shape());
    const auto sa = broadcast_strides(a.shape(), out);
    const auto sb = broadcast_strides(b.shape(), out);
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<Real> value(numel(out));
    const bool same = a.shape() == out && b.shape() == out;
    if (same) {
        for (std::size_t i = 0; i < value.size(); ++i) {
            switch (op) {
                case BinOp::Add: value[i] = av[i] + bv[i]; break;
                case BinOp::Sub: value[i] = av[i] - bv[i]; break;
                case BinOp::Mul: value[i] = av[i] * bv[i]; break;
            }
        }
    } else {
        for_each_broadcast(out, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
            switch (op) {
                case BinOp::Add: value[i] = av[ia] + bv[ib]; break;
                case BinOp::Sub: value[i] = av[ia] - bv[ib]; break;
                case BinOp::Mul: value[i] = av[ia] * bv[ib]; break;
            }
        });
    }
    const char* name = op == BinOp::Add ? "add" : op == BinOp::Sub ? "sub" : "mul";
    return detail::make_result<Real>(
        out, std::move(value), {a.node(), b.node()},
        [out, sa, sb, op, same](TensorNode<Real>& self) {
            auto& na = *self.inputs[0];
            auto& nb = *self.inputs[1];
            const bool ga = na.requires_grad;
            const bool gb = nb.requires_grad;
            if (ga) na.ensure_grad();
            if (gb) nb.ensure_grad();
            auto step = [&](std::size_t i, std::size_t ia, std::size_t ib) {
                const Real g = self.grad[i];
                switch (op) {
                    case BinOp::Add:
                        if (ga) na.grad[ia] += g;
                        if (gb) nb.grad[ib] += g;
                        break;
                    case BinOp::Sub:
                        if (ga) na.grad[ia] += g;
                        if (gb) nb.grad[ib] -= g;
                        break;
                    case BinOp::Mul:
                        if (ga) na.grad[ia] += g * nb.value[ib];
                        if (gb) nb.grad[ib] += g * na.value[ia];
                        break;
                }
            };
            if (same) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) step(i, i, i);
            } else {
                for_each_broadcast(out, sa, sb, step);
            }
        },
        name);
}

void check_pool_geometry(const Shape& s, std::size_t window, std::size_t stride, std::size_t padding,
                         const char* what) {
    if (s.size() != 4) fail(ErrorKind::ShapeMismatch, std::string(what) + " expects [B,C,H,W], got " + to_string(s));
    if (window == 0 || stride == 0) fail(ErrorKind::InvalidArgument, std::string(what) + ": window and stride must be >= 1");
    if (window > s[2] + 2 * padding || window > s[3] + 2 * padding) {
        fail(ErrorKind::InvalidArgument, std::string(what) + ": window " + std::to_string(window) +
                                             " larger than padded input " + to_string(s));
    }
}

}  // namespace

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
    return binary(a, b, BinOp::Add);
}
template <class Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
    return binary(a, b, BinOp::Sub);
}
template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
    return binary(a, b, BinOp::Mul);
}

template <class Real>
Tensor<Real> affine(const Tensor<Real>& a, double scale, double shift) {
    const auto av = a.values();
    std::vector<Real> value(av.size());
    const Real s = static_cast<Real>(scale);
    const Real c = static_cast<Real>(shift);
    for (std::size_t i = 0; i < av.size(); ++i) value[i] = s * av[i] + c;
    return detail::make_result<Real>(
        a.shape(), std::move(value), {a.node()},
        [s](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += s * self.grad[i];
        },
        "affine");
}

template <class Real>
Tensor<Real> relu(const Tensor<Real>& a) {
    const auto av = a.values();
    std::vector<Real> value(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) value[i] = av[i] > Real(0) ? av[i] : Real(0);
    return detail::make_result<Real>(
        a.shape(), std::move(value), {a.node()},
        [](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (in.value[i] > Real(0)) in.grad[i] += self.grad[i];
            }
        },
        "relu");
}

template <class Real>
Tensor<Real> stop_gradient(const Tensor<Real>& a) {
    return a.detach();
}

template <class Real>
Tensor<Real> reshape(const Tensor<Real>& a, Shape shape) {
    if (numel(shape) != a.size()) {
        fail(ErrorKind::ShapeMismatch, "cannot reshape " + to_string(a.shape()) + " to " + to_string(shape));
    }
    std::vector<Real> value(a.values().begin(), a.values().end());
    return detail::make_result<Real>(
        std::move(shape), std::move(value), {a.node()},
        [](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += self.grad[i];
        },
        "reshape");
}

template <class Real>
Tensor<Real> permute(const Tensor<Real>& a, const std::vector<std::size_t>& perm) {
    const Shape& in = a.shape();
    const std::size_t rank = in.size();
    if (perm.size() != rank) fail(ErrorKind::InvalidArgument, "permutation rank mismatch for " + to_string(in));
    std::vector<bool> seen(rank, false);
    for (auto p : perm) {
        if (p >= rank || seen[p]) fail(ErrorKind::InvalidArgument, "invalid permutation for " + to_string(in));
        seen[p] = true;
    }
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) out[i] = in[perm[i]];
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in[i];
    std::vector<std::size_t> src_strides(rank);
    for (std::size_t i = 0; i < rank; ++i) src_strides[i] = in_strides[perm[i]];
    // Gather map: out position i reads input position index[i].
    std::vector<std::size_t> index(a.size());
    std::vector<std::size_t> zero(rank, 0);
    for_each_broadcast(out, src_strides, zero, [&](std::size_t i, std::size_t src, std::size_t) { index[i] = src; });
    const auto av = a.values();
    std::vector<Real> value(a.size());
    for (std::size_t i = 0; i < value.size(); ++i) value[i] = av[index[i]];
    return detail::make_result<Real>(
        out, std::move(value), {a.node()},
        [index = std::move(index)](TensorNode<Real>& self) {
            auto& src = *self.inputs[0];
            src.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) src.grad[index[i]] += self.grad[i];
        },
        "permute");
}

namespace {

template <class Real>
void im2col(const Real* image, std::size_t channels, std::size_t height, std::size_t width, std::size_t k,
            std::size_t stride, std::size_t padding, std::size_t out_h, std::size_t out_w, Real* col) {
    const std::size_t hw = out_h * out_w;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ki = 0; ki < k; ++ki) {
            for (std::size_t kj = 0; kj < k; ++kj) {
                Real* row = col + ((c * k + ki) * k + kj) * hw;
                for (std::size_t oy = 0; oy < out_h; ++oy) {
                    const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ki) - static_cast<std::ptrdiff_t>(padding);
                    Real* dst = row + oy * out_w;
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(height)) {
                        std::fill(dst, dst + out_w, Real(0));
                        continue;
                    }
                    const Real* src = image + (c * height + static_cast<std::size_t>(y)) * width;
                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                        const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + kj) - static_cast<std::ptrdiff_t>(padding);
                        dst[ox] = (x < 0 || x >= static_cast<std::ptrdiff_t>(width)) ? Real(0) : src[x];
                    }
                }
            }
        }
    }
}

template <class Real>
void col2im(const Real* col, std::size_t channels, std::size_t height, std::size_t width, std::size_t k,
            std::size_t stride, std::size_t padding, std::size_t out_h, std::size_t out_w, Real* image) {
    const std::size_t hw = out_h * out_w;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t ki = 0; ki < k; ++ki) {
            for (std::size_t kj = 0; kj < k; ++kj) {
                const Real* row = col + ((c * k + ki) * k + kj) * hw;
                for (std::size_t oy = 0; oy < out_h; ++oy) {
                    const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ki) - static_cast<std::ptrdiff_t>(padding);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(height)) continue;
                    Real* dst = image + (c * height + static_cast<std::size_t>(y)) * width;
                    const Real* src = row + oy * out_w;
                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                        const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + kj) - static_cast<std::ptrdiff_t>(padding);
                        if (x >= 0 && x < static_cast<std::ptrdiff_t>(width)) dst[x] += src[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

template <class Real>
Tensor<Real> conv2d(const Tensor<Real>& input, const Tensor<Real>& kernel, std::size_t stride,
                    std::size_t padding, ExtentRounding rounding) {
    const Shape& is = input.shape();
    const Shape& ks = kernel.shape();
    if (is.size() != 4) fail(ErrorKind::ShapeMismatch, "conv2d input must be [B,C,H,W], got " + to_string(is));
    if (ks.size() != 4 || ks[2] != ks[3]) {
        fail(ErrorKind::ShapeMismatch, "conv2d kernel must be [Cout,Cin,k,k], got " + to_string(ks));
    }
    if (ks[1] != is[1]) {
        fail(ErrorKind::ShapeMismatch, "conv2d channel mismatch: input " + to_string(is) + " kernel " + to_string(ks));
    }
    const std::size_t k = ks[2];
    if (k == 0 || stride == 0) fail(ErrorKind::InvalidArgument, "conv2d needs k >= 1 and stride >= 1");
    const std::size_t batch = is[0], cin = is[1], h = is[2], w = is[3], cout = ks[0];
    if (h + 2 * padding < k || w + 2 * padding < k) {
        fail(ErrorKind::InvalidArgument, "conv2d produces zero-extent output for input " + to_string(is));
    }
    if (rounding == ExtentRounding::Exact &&
        ((h + 2 * padding - k) % stride != 0 || (w + 2 * padding - k) % stride != 0)) {
        fail(ErrorKind::InvalidArgument, "conv2d output extent (H+2p-k)/s+1 is not integral for input " +
                                             to_string(is) + ", k=" + std::to_string(k) +
                                             ", s=" + std::to_string(stride) + ", p=" + std::to_string(padding));
    }
    const std::size_t oh = (h + 2 * padding - k) / stride + 1;
    const std::size_t ow = (w + 2 * padding - k) / stride + 1;
    const std::size_t hw = oh * ow;
    const std::size_t ckk = cin * k * k;

    std::vector<Real> value(batch * cout * hw);
    std::vector<Real> col(ckk * hw);
    ConstMatMap<Real> wmat(kernel.values().data(), cout, ckk);
    for (std::size_t b = 0; b < batch; ++b) {
        im2col(input.values().data() + b * cin * h * w, cin, h, w, k, stride, padding, oh, ow, col.data());
        ConstMatMap<Real> cmat(col.data(), ckk, hw);
        MatMap<Real> omat(value.data() + b * cout * hw, cout, hw);
        omat.noalias() = wmat * cmat;
    }
    return detail::make_result<Real>(
        Shape{batch, cout, oh, ow}, std::move(value), {input.node(), kernel.node()},
        [=](TensorNode<Real>& self) {
            auto& x = *self.inputs[0];
            auto& kw = *self.inputs[1];
            std::vector<Real> colbuf(ckk * hw);
            std::vector<Real> dcol(ckk * hw);
            ConstMatMap<Real> wm(kw.value.data(), cout, ckk);
            if (kw.requires_grad) kw.ensure_grad();
            if (x.requires_grad) x.ensure_grad();
            for (std::size_t b = 0; b < batch; ++b) {
                ConstMatMap<Real> dout(self.grad.data() + b * cout * hw, cout, hw);
                if (kw.requires_grad) {
                    im2col(x.value.data() + b * cin * h * w, cin, h, w, k, stride, padding, oh, ow, colbuf.data());
                    ConstMatMap<Real> cm(colbuf.data(), ckk, hw);
                    MatMap<Real> dw(kw.grad.data(), cout, ckk);
                    dw.noalias() += dout * cm.transpose();
                }
                if (x.requires_grad) {
                    MatMap<Real> dc(dcol.data(), ckk, hw);
                    dc.noalias() = wm.transpose() * dout;
                    col2im(dcol.data(), cin, h, w, k, stride, padding, oh, ow, x.grad.data() + b * cin * h * w);
                }
            }
        },
        "conv2d");
}

template <class Real>
Tensor<Real> batch_norm(const Tensor<Real>& input, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                        BatchNormStats<Real>& stats, NormMode mode, BatchNormOptions options) {
    const Shape& s = input.shape();
    if (s.size() < 2) fail(ErrorKind::ShapeMismatch, "batch_norm needs a channel axis, got " + to_string(s));
    const std::size_t batch = s[0];
    const std::size_t channels = s[1];
    std::size_t inner = 1;
    for (std::size_t i = 2; i < s.size(); ++i) inner *= s[i];
    if (gamma.size() != channels || beta.size() != channels) {
        fail(ErrorKind::ShapeMismatch, "batch_norm affine parameters do not match " + std::to_string(channels) + " channels");
    }
    if (stats.running_mean.size() != channels) stats.running_mean.assign(channels, Real(0));
    if (stats.running_var.size() != channels) stats.running_var.assign(channels, Real(1));
    const std::size_t count = batch * inner;
    const auto x = input.values();
    std::vector<Real> mean(channels), inv_std(channels);
    if (mode == NormMode::Train) {
        for (std::size_t c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const Real* p = x.data() + (b * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) acc += p[i];
            }
            const double m = acc / static_cast<double>(count);
            double sq = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const Real* p = x.data() + (b * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    const double d = p[i] - m;
                    sq += d * d;
                }
            }
            const double var = sq / static_cast<double>(count);
            mean[c] = static_cast<Real>(m);
            inv_std[c] = static_cast<Real>(1.0 / std::sqrt(var + options.eps));
            const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
            stats.running_mean[c] = static_cast<Real>((1.0 - options.momentum) * stats.running_mean[c] + options.momentum * m);
            stats.running_var[c] = static_cast<Real>((1.0 - options.momentum) * stats.running_var[c] + options.momentum * unbiased);
        }
    } else {
        for (std::size_t c = 0; c < channels; ++c) {
            mean[c] = stats.running_mean[c];
            inv_std[c] = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(stats.running_var[c]) + options.eps));
        }
    }
    const auto g = gamma.values();
    const auto bt = beta.values();
    std::vector<Real> value(input.size());
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t off = (b * channels + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                value[off + i] = g[c] * ((x[off + i] - mean[c]) * inv_std[c]) + bt[c];
            }
        }
    }
    const bool train = mode == NormMode::Train;
    return detail::make_result<Real>(
        s, std::move(value), {input.node(), gamma.node(), beta.node()},
        [=](TensorNode<Real>& self) {
            auto& xn = *self.inputs[0];
            auto& gn = *self.inputs[1];
            auto& bn = *self.inputs[2];
            if (xn.requires_grad) xn.ensure_grad();
            if (gn.requires_grad) gn.ensure_grad();
            if (bn.requires_grad) bn.ensure_grad();
            for (std::size_t c = 0; c < channels; ++c) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (std::size_t b = 0; b < batch; ++b) {
                    const std::size_t off = (b * channels + c) * inner;
                    for (std::size_t i = 0; i < inner; ++i) {
                        const double xhat = (xn.value[off + i] - mean[c]) * inv_std[c];
                        sum_dy += self.grad[off + i];
                        sum_dy_xhat += self.grad[off + i] * xhat;
                    }
                }
                if (gn.requires_grad) gn.grad[c] += static_cast<Real>(sum_dy_xhat);
                if (bn.requires_grad) bn.grad[c] += static_cast<Real>(sum_dy);
                if (!xn.requires_grad) continue;
                const double scale = static_cast<double>(gn.value[c]) * inv_std[c];
                const double mdy = sum_dy / static_cast<double>(count);
                const double mdyx = sum_dy_xhat / static_cast<double>(count);
                for (std::size_t b = 0; b < batch; ++b) {
                    const std::size_t off = (b * channels + c) * inner;
                    for (std::size_t i = 0; i < inner; ++i) {
                        if (train) {
                            const double xhat = (xn.value[off + i] - mean[c]) * inv_std[c];
                            xn.grad[off + i] += static_cast<Real>(scale * (self.grad[off + i] - mdy - xhat * mdyx));
                        } else {
                            xn.grad[off + i] += static_cast<Real>(scale * self.grad[off + i]);
                        }
                    }
                }
            }
        },
        "batch_norm");
}

template <class Real>
Tensor<Real> max_pool2d(const Tensor<Real>& input, std::size_t window, std::size_t stride, std::size_t padding) {
    const Shape& s = input.shape();
    check_pool_geometry(s, window, stride, padding, "max_pool2d");
    const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
    const std::size_t oh = (h + 2 * padding - window) / stride + 1;
    const std::size_t ow = (w + 2 * padding - window) / stride + 1;
    const auto x = input.values();
    std::vector<Real> value(planes * oh * ow);
    std::vector<std::size_t> argmax(value.size());
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                Real best = -std::numeric_limits<Real>::infinity();
                std::size_t best_i = std::numeric_limits<std::size_t>::max();
                for (std::size_t ky = 0; ky < window; ++ky) {
                    const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                        const std::size_t i = (p * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(xx);
                        // Strict comparison keeps the first maximum in scan order;
                        // scan order within a window is increasing linear index.
                        if (best_i == std::numeric_limits<std::size_t>::max() || x[i] > best) {
                            best = x[i];
                            best_i = i;
                        }
                    }
                }
                const std::size_t o = (p * oh + oy) * ow + ox;
                value[o] = best;
                argmax[o] = best_i;
            }
        }
    }
    return detail::make_result<Real>(
        Shape{s[0], s[1], oh, ow}, std::move(value), {input.node()},
        [argmax = std::move(argmax)](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (std::size_t o = 0; o < self.grad.size(); ++o) {
                if (argmax[o] != std::numeric_limits<std::size_t>::max()) in.grad[argmax[o]] += self.grad[o];
            }
        },
        "max_pool2d");
}

template <class Real>
Tensor<Real> avg_pool2d(const Tensor<Real>& input, std::size_t window, std::size_t stride, std::size_t padding) {
    const Shape& s = input.shape();
    check_pool_geometry(s, window, stride, padding, "avg_pool2d");
    const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
    const std::size_t oh = (h + 2 * padding - window) / stride + 1;
    const std::size_t ow = (w + 2 * padding - window) / stride + 1;
    const Real inv = Real(1) / static_cast<Real>(window * window);
    const auto x = input.values();
    std::vector<Real> value(planes * oh * ow, Real(0));
    auto visit = [=](std::size_t p, std::size_t oy, std::size_t ox, auto&& f) {
        for (std::size_t ky = 0; ky < window; ++ky) {
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
            if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < window; ++kx) {
                const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                f((p * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(xx));
            }
        }
    };
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                Real acc(0);
                visit(p, oy, ox, [&](std::size_t i) { acc += x[i]; });
                value[(p * oh + oy) * ow + ox] = acc * inv;
            }
    return detail::make_result<Real>(
        Shape{s[0], s[1], oh, ow}, std::move(value), {input.node()},
        [=](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (std::size_t p = 0; p < planes; ++p)
                for (std::size_t oy = 0; oy < oh; ++oy)
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const Real g = self.grad[(p * oh + oy) * ow + ox] * inv;
                        visit(p, oy, ox, [&](std::size_t i) { in.grad[i] += g; });
                    }
        },
        "avg_pool2d");
}

template <class Real>
Tensor<Real> adaptive_avg_pool2d(const Tensor<Real>& input, std::size_t out) {
    const Shape& s = input.shape();
    if (s.size() != 4) fail(ErrorKind::ShapeMismatch, "adaptive_avg_pool2d expects [B,C,H,W], got " + to_string(s));
    if (out == 0) fail(ErrorKind::InvalidArgument, "adaptive_avg_pool2d output size must be >= 1");
    const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
    auto start = [](std::size_t i, std::size_t in, std::size_t o) { return i * in / o; };
    auto stop = [](std::size_t i, std::size_t in, std::size_t o) { return ((i + 1) * in + o - 1) / o; };
    const auto x = input.values();
    std::vector<Real> value(planes * out * out);
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t oy = 0; oy < out; ++oy)
            for (std::size_t ox = 0; ox < out; ++ox) {
                const std::size_t y0 = start(oy, h, out), y1 = stop(oy, h, out);
                const std::size_t x0 = start(ox, w, out), x1 = stop(ox, w, out);
                Real acc(0);
                for (std::size_t y = y0; y < y1; ++y)
                    for (std::size_t xx = x0; xx < x1; ++xx) acc += x[(p * h + y) * w + xx];
                value[(p * out + oy) * out + ox] = acc / static_cast<Real>((y1 - y0) * (x1 - x0));
            }
    return detail::make_result<Real>(
        Shape{s[0], s[1], out, out}, std::move(value), {input.node()},
        [=](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (std::size_t p = 0; p < planes; ++p)
                for (std::size_t oy = 0; oy < out; ++oy)
                    for (std::size_t ox = 0; ox < out; ++ox) {
                        const std::size_t y0 = start(oy, h, out), y1 = stop(oy, h, out);
                        const std::size_t x0 = start(ox, w, out), x1 = stop(ox, w, out);
                        const Real g = self.grad[(p * out + oy) * out + ox] / static_cast<Real>((y1 - y0) * (x1 - x0));
                        for (std::size_t y = y0; y < y1; ++y)
                            for (std::size_t xx = x0; xx < x1; ++xx) in.grad[(p * h + y) * w + xx] += g;
                    }
        },
        "adaptive_avg_pool2d");
}

template <class Real>
Tensor<Real> global_avg_pool(const Tensor<Real>& input) {
    if (input.rank() != 4) fail(ErrorKind::ShapeMismatch, "global_avg_pool expects [B,C,H,W], got " + to_string(input.shape()));
    return reduce(input, {2, 3}, ReduceKind::Mean);
}

template <class Real>
Tensor<Real> dense(const Tensor<Real>& input, const Tensor<Real>& weight, const Tensor<Real>& bias) {
    const Shape& s = input.shape();
    if (s.empty() || weight.rank() != 2) {
        fail(ErrorKind::ShapeMismatch, "dense expects input [*,Fin] and weight [Fout,Fin], got " + to_string(s) +
                                           " and " + to_string(weight.shape()));
    }
    const std::size_t fin = s.back();
    const std::size_t fout = weight.dim(0);
    if (weight.dim(1) != fin) {
        fail(ErrorKind::ShapeMismatch, "dense inner extent mismatch: input " + to_string(s) + " weight " + to_string(weight.shape()));
    }
    const bool has_bias = bias.size() > 0;
    if (has_bias && bias.size() != fout) {
        fail(ErrorKind::ShapeMismatch, "dense bias " + to_string(bias.shape()) + " does not match Fout=" + std::to_string(fout));
    }
    const std::size_t rows = input.size() / fin;
    Shape out = s;
    out.back() = fout;
    std::vector<Real> value(rows * fout);
    {
        ConstMatMap<Real> xm(input.values().data(), rows, fin);
        ConstMatMap<Real> wm(weight.values().data(), fout, fin);
        MatMap<Real> om(value.data(), rows, fout);
        om.noalias() = xm * wm.transpose();
        if (has_bias) {
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < fout; ++j) value[r * fout + j] += bias.values()[j];
        }
    }
    std::vector<std::shared_ptr<TensorNode<Real>>> inputs{input.node(), weight.node()};
    if (has_bias) inputs.push_back(bias.node());
    return detail::make_result<Real>(
        std::move(out), std::move(value), std::move(inputs),
        [=](TensorNode<Real>& self) {
            auto& xn = *self.inputs[0];
            auto& wn = *self.inputs[1];
            ConstMatMap<Real> dout(self.grad.data(), rows, fout);
            if (xn.requires_grad) {
                xn.ensure_grad();
                ConstMatMap<Real> wm(wn.value.data(), fout, fin);
                MatMap<Real> dx(xn.grad.data(), rows, fin);
                dx.noalias() += dout * wm;
            }
            if (wn.requires_grad) {
                wn.ensure_grad();
                ConstMatMap<Real> xm(xn.value.data(), rows, fin);
                MatMap<Real> dw(wn.grad.data(), fout, fin);
                dw.noalias() += dout.transpose() * xm;
            }
            if (has_bias && self.inputs[2]->requires_grad) {
                auto& bn = *self.inputs[2];
                bn.ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < fout; ++j) bn.grad[j] += self.grad[r * fout + j];
            }
        },
        "dense");
}

template <class Real>
Tensor<Real> reduce(const Tensor<Real>& input, const std::vector<std::size_t>& axes, ReduceKind kind) {
    const Shape& s = input.shape();
    std::vector<bool> reduced(s.size(), false);
    for (auto a : axes) {
        if (a >= s.size() || reduced[a]) fail(ErrorKind::InvalidArgument, "invalid reduce axes for " + to_string(s));
        reduced[a] = true;
    }
    Shape out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!reduced[i]) out.push_back(s[i]);
    // Output strides laid over the input rank, zero on reduced axes.
    std::vector<std::size_t> ostride(s.size(), 0);
    {
        std::size_t stride = 1;
        for (std::size_t i = s.size(); i-- > 0;) {
            if (reduced[i]) continue;
            ostride[i] = stride;
            stride *= s[i];
        }
    }
    std::vector<std::size_t> istride(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) istride[i - 1] = istride[i] * s[i];
    const std::size_t out_n = numel(out);
    const std::size_t count = out_n == 0 ? 0 : input.size() / out_n;
    if (count == 0) fail(ErrorKind::InvalidArgument, "reduce over empty extent in " + to_string(s));
    const auto x = input.values();
    std::vector<Real> value(out_n, kind == ReduceKind::Max ? -std::numeric_limits<Real>::infinity() : Real(0));
    std::vector<std::size_t> arg;
    std::vector<double> acc;
    if (kind == ReduceKind::Max) arg.assign(out_n, std::numeric_limits<std::size_t>::max());
    else acc.assign(out_n, 0.0);
    for_each_broadcast(s, istride, ostride, [&](std::size_t, std::size_t ii, std::size_t oi) {
        if (kind == ReduceKind::Mean) {
            acc[oi] += x[ii];
        } else if (arg[oi] == std::numeric_limits<std::size_t>::max() || x[ii] > value[oi]) {
            value[oi] = x[ii];
            arg[oi] = ii;
        }
    });
    if (kind == ReduceKind::Mean) {
        for (std::size_t i = 0; i < out_n; ++i) value[i] = static_cast<Real>(acc[i] / static_cast<double>(count));
    }
    return detail::make_result<Real>(
        std::move(out), std::move(value), {input.node()},
        [=, arg = std::move(arg)](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            if (kind == ReduceKind::Max) {
                for (std::size_t o = 0; o < self.grad.size(); ++o) in.grad[arg[o]] += self.grad[o];
                return;
            }
            const Real inv = Real(1) / static_cast<Real>(count);
            for_each_broadcast(s, istride, ostride, [&](std::size_t, std::size_t ii, std::size_t oi) {
                in.grad[ii] += self.grad[oi] * inv;
            });
        },
        kind == ReduceKind::Mean ? "mean" : "max");
}

template <class Real>
Tensor<Real> sum(const Tensor<Real>& input) {
    double acc = 0.0;
    for (auto v : input.values()) acc += v;
    return detail::make_result<Real>(
        Shape{}, std::vector<Real>{static_cast<Real>(acc)}, {input.node()},
        [](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            for (auto& g : in.grad) g += self.grad[0];
        },
        "sum");
}

template <class Real>
Tensor<Real> concat(const std::vector<Tensor<Real>>& inputs, std::size_t axis) {
    if (inputs.empty()) fail(ErrorKind::InvalidArgument, "concat of zero tensors");
    const Shape& first = inputs.front().shape();
    if (axis >= first.size()) fail(ErrorKind::InvalidArgument, "concat axis out of range for " + to_string(first));
    Shape out = first;
    out[axis] = 0;
    for (const auto& t : inputs) {
        const Shape& s = t.shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
        if (!ok) fail(ErrorKind::ShapeMismatch, "concat shape mismatch: " + to_string(first) + " vs " + to_string(s));
        out[axis] += s[axis];
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
    std::vector<std::size_t> chunk;
    for (const auto& t : inputs) chunk.push_back(t.dim(axis) * inner);
    const std::size_t row = out[axis] * inner;
    std::vector<Real> value(numel(out));
    std::vector<std::shared_ptr<TensorNode<Real>>> nodes;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto v = inputs[k].values();
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(v.data() + o * chunk[k], chunk[k], value.data() + o * row + offset);
        offset += chunk[k];
        nodes.push_back(inputs[k].node());
    }
    return detail::make_result<Real>(
        std::move(out), std::move(value), std::move(nodes),
        [=](TensorNode<Real>& self) {
            std::size_t off = 0;
            for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                auto& in = *self.inputs[k];
                if (in.requires_grad) {
                    in.ensure_grad();
                    for (std::size_t o = 0; o < outer; ++o)
                        for (std::size_t i = 0; i < chunk[k]; ++i) in.grad[o * chunk[k] + i] += self.grad[o * row + off + i];
                }
                off += chunk[k];
            }
        },
        "concat");
}

template <class Real>
Tensor<Real> cross_entropy(const Tensor<Real>& logits, const std::vector<std::int32_t>& labels) {
    if (logits.rank() != 2) fail(ErrorKind::ShapeMismatch, "cross_entropy expects logits [N,K], got " + to_string(logits.shape()));
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (labels.size() != n) fail(ErrorKind::CountMismatch, "cross_entropy got " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " rows");
    const auto z = logits.values();
    std::vector<Real> prob(n * k);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
            fail(ErrorKind::InvalidArgument, "label " + std::to_string(labels[r]) + " outside [0," + std::to_string(k) + ")");
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, static_cast<double>(z[r * k + j]));
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) denom += std::exp(z[r * k + j] - mx);
        const double log_denom = std::log(denom) + mx;
        for (std::size_t j = 0; j < k; ++j) prob[r * k + j] = static_cast<Real>(std::exp(z[r * k + j] - log_denom));
        loss += log_denom - z[r * k + static_cast<std::size_t>(labels[r])];
    }
    loss /= static_cast<double>(n);
    return detail::make_result<Real>(
        Shape{}, std::vector<Real>{static_cast<Real>(loss)}, {logits.node()},
        [=, prob = std::move(prob)](TensorNode<Real>& self) {
            auto& in = *self.inputs[0];
            in.ensure_grad();
            const Real g = self.grad[0] / static_cast<Real>(n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t j = 0; j < k; ++j) {
                    const Real target = static_cast<std::size_t>(labels[r]) == j ? Real(1) : Real(0);
                    in.grad[r * k + j] += g * (prob[r * k + j] - target);
                }
        },
        "cross_entropy");
}

#define ORSNN_INSTANTIATE(Real)                                                                              \
    template Tensor<Real> add(const Tensor<Real>&, const Tensor<Real>&);                                    \
    template Tensor<Real> sub(const Tensor<Real>&, const Tensor<Real>&);                                    \
    template Tensor<Real> mul(const Tensor<Real>&, const Tensor<Real>&);                                    \
    template Tensor<Real> affine(const Tensor<Real>&, double, double);                                      \
    template Tensor<Real> relu(const Tensor<Real>&);                                                        \
    template Tensor<Real> stop_gradient(const Tensor<Real>&);                                               \
    template Tensor<Real> reshape(const Tensor<Real>&, Shape);                                              \
    template Tensor<Real> permute(const Tensor<Real>&, const std::vector<std::size_t>&);                    \
    template Tensor<Real> conv2d(const Tensor<Real>&, const Tensor<Real>&, std::size_t, std::size_t, ExtentRounding);       \
    template Tensor<Real> batch_norm(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,         \
                                     BatchNormStats<Real>&, NormMode, BatchNormOptions);                    \
    template Tensor<Real> max_pool2d(const Tensor<Real>&, std::size_t, std::size_t, std::size_t);           \
    template Tensor<Real> avg_pool2d(const Tensor<Real>&, std::size_t, std::size_t, std::size_t);           \
    template Tensor<Real> adaptive_avg_pool2d(const Tensor<Real>&, std::size_t);                            \
    template Tensor<Real> global_avg_pool(const Tensor<Real>&);                                             \
    template Tensor<Real> dense(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&);             \
    template Tensor<Real> reduce(const Tensor<Real>&, const std::vector<std::size_t>&, ReduceKind);         \
    template Tensor<Real> sum(const Tensor<Real>&);                                                         \
    template Tensor<Real> concat(const std::vector<Tensor<Real>>&, std::size_t);                            \
    template Tensor<Real> cross_entropy(const Tensor<Real>&, const std::vector<std::int32_t>&);

ORSNN_INSTANTIATE(float)
ORSNN_INSTANTIATE(double)

#undef ORSNN_INSTANTIATE

}  // namespace orsnn
