#include "orsnn/residual/join.hpp"

#include <cmath>

namespace orsnn {

std::string_view to_string(JoinMode mode) {
    switch (mode) {
        case JoinMode::Add: return "ADD";
        case JoinMode::And: return "AND";
        case JoinMode::IAnd: return "IAND";
        case JoinMode::Or: return "OR";
    }
    return "?";
}

JoinMode parse_join_mode(std::string_view text) {
    if (text == "ADD") return JoinMode::Add;
    if (text == "AND") return JoinMode::And;
    if (text == "IAND") return JoinMode::IAnd;
    if (text == "OR") return JoinMode::Or;
    fail(ErrorKind::ParseError, "unknown join mode '" + std::string(text) + "' (expected ADD, AND, IAND or OR)");
}

template <class Real>
Tensor<Real> join(const Tensor<Real>& x, const Tensor<Real>& y, JoinMode mode) {
    if (x.shape() != y.shape()) {
        fail(ErrorKind::ShapeMismatch, "join operands differ: " + to_string(x.shape()) + " vs " + to_string(y.shape()));
    }
    switch (mode) {
        case JoinMode::Add: return add(x, y);
        case JoinMode::And: return mul(x, y);
        case JoinMode::IAnd: return mul(affine(x, -1.0, 1.0), y);
        case JoinMode::Or: return sub(add(x, y), mul(x, y));
    }
    fail(ErrorKind::InvalidArgument, "bad join mode");
}

template <class Real>
BinaryCheck check_binary(std::span<const Real> values) {
    BinaryCheck check;
    for (auto v : values) {
        if (v != Real(0) && v != Real(1)) {
            ++check.non_binary;
            check.max_magnitude = std::max(check.max_magnitude, std::abs(static_cast<double>(v)));
        }
    }
    return check;
}

template <class Real>
Tensor<Real> join_checked(const Tensor<Real>& x, const Tensor<Real>& y, JoinMode mode, const std::string& layer,
                          bool strict) {
    if (strict && is_bitwise(mode)) {
        for (const auto* operand : {&x, &y}) {
            const auto check = check_binary(operand->values());
            if (!check.ok()) {
                fail(ErrorKind::NotBinary, layer + ": " + std::string(to_string(mode)) + " join received " +
                                               std::to_string(check.non_binary) + " non-binary operand values (max |v| = " +
                                               std::to_string(check.max_magnitude) + ")");
            }
        }
    }
    return join(x, y, mode);
}

template Tensor<float> join(const Tensor<float>&, const Tensor<float>&, JoinMode);
template Tensor<double> join(const Tensor<double>&, const Tensor<double>&, JoinMode);
template BinaryCheck check_binary(std::span<const float>);
template BinaryCheck check_binary(std::span<const double>);
template Tensor<float> join_checked(const Tensor<float>&, const Tensor<float>&, JoinMode, const std::string&, bool);
template Tensor<double> join_checked(const Tensor<double>&, const Tensor<double>&, JoinMode, const std::string&, bool);

}  // namespace orsnn
