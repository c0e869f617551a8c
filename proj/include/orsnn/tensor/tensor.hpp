#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orsnn/error.hpp"
#include "orsnn/tensor/shape.hpp"

namespace orsnn {

template <class Real>
class Tape;

/// Storage and autograd bookkeeping behind a Tensor handle.
template <class Real>
struct TensorNode {
    Shape shape;
    std::vector<Real> value;
    std::vector<Real> grad;  // empty until a gradient reaches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> inputs;
    std::function<void(TensorNode&)> backward;
    const char* op = "leaf";

    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), Real(0));
    }
};

/// Dense row-major array with reverse-mode autodiff. Copies share storage.
template <class Real>
class Tensor {
public:
    using Node = TensorNode<Real>;

    Tensor() : node_(std::make_shared<Node>()) {}

    explicit Tensor(Shape shape, Real fill = Real(0)) : node_(std::make_shared<Node>()) {
        node_->value.assign(numel(shape), fill);
        node_->shape = std::move(shape);
    }

    Tensor(Shape shape, std::vector<Real> values) : node_(std::make_shared<Node>()) {
        if (numel(shape) != values.size()) {
            fail(ErrorKind::ShapeMismatch, "shape " + to_string(shape) + " holds " +
                                               std::to_string(numel(shape)) + " elements, got " +
                                               std::to_string(values.size()));
        }
        node_->shape = std::move(shape);
        node_->value = std::move(values);
    }

    static Tensor scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

    static Tensor parameter(Shape shape, std::vector<Real> values) {
        Tensor t(std::move(shape), std::move(values));
        t.node_->requires_grad = true;
        return t;
    }

    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t size() const { return node_->value.size(); }

    std::span<const Real> values() const { return node_->value; }
    std::span<Real> mutable_values() { return node_->value; }
    std::span<const Real> grad() const { return node_->grad; }
    std::span<Real> mutable_grad() { return node_->grad; }
    bool has_grad() const { return !node_->grad.empty(); }

    Real item() const {
        if (size() != 1) fail(ErrorKind::ShapeMismatch, "item() on tensor of shape " + to_string(shape()));
        return node_->value[0];
    }
    Real operator[](std::size_t i) const { return node_->value[i]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    void zero_grad() { node_->grad.clear(); }

    /// Leaf copy of the values, cut from the graph.
    Tensor detach() const { return Tensor(shape(), node_->value); }

    const std::shared_ptr<Node>& node() const { return node_; }
    const char* op() const { return node_->op; }

private:
    std::shared_ptr<Node> node_;
};

/// Ordered record of differentiable operations executed while it is active.
/// Constructing a Tape makes it the active tape for its scalar type on this
/// thread; destruction restores the previous one.
template <class Real>
class Tape {
public:
    Tape() : previous_(current()) { current() = this; }
    ~Tape() { current() = previous_; }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active() { return current(); }

    void record(std::shared_ptr<TensorNode<Real>> node) { nodes_.push_back(std::move(node)); }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    /// Seeds d(root)/d(root) = 1; root must be a single element.
    void backward(const Tensor<Real>& root) {
        if (root.size() != 1) {
            fail(ErrorKind::InvalidArgument,
                 "backward on non-scalar tensor " + to_string(root.shape()) + " requires an explicit seed");
        }
        const Real one(1);
        backward(root, std::span<const Real>(&one, 1));
    }

    void backward(const Tensor<Real>& root, std::span<const Real> seed) {
        if (seed.size() != root.size()) {
            fail(ErrorKind::ShapeMismatch, "seed size does not match root " + to_string(root.shape()));
        }
        auto& node = *root.node();
        if (!node.requires_grad) return;
        node.ensure_grad();
        for (std::size_t i = 0; i < seed.size(); ++i) node.grad[i] += seed[i];
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            auto& n = **it;
            if (!n.grad.empty() && n.backward) n.backward(n);
        }
    }

private:
    static Tape*& current() {
        thread_local Tape* tape = nullptr;
        return tape;
    }

    Tape* previous_;
    std::vector<std::shared_ptr<TensorNode<Real>>> nodes_;
};

namespace detail {

/// Builds the result node of an op. It joins the graph only when a tape is
/// active and some input requires a gradient.
template <class Real>
Tensor<Real> make_result(Shape shape, std::vector<Real> value,
                         std::vector<std::shared_ptr<TensorNode<Real>>> inputs,
                         std::function<void(TensorNode<Real>&)> backward, const char* op) {
    auto node = std::make_shared<TensorNode<Real>>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = op;
    Tape<Real>* tape = Tape<Real>::active();
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in->requires_grad;
    if (tape != nullptr && needs) {
        node->requires_grad = true;
        node->inputs = std::move(inputs);
        node->backward = std::move(backward);
        tape->record(node);
    }
    return Tensor<Real>(std::move(node));
}

}  // namespace detail

}  // namespace orsnn
