#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "nilmtune/nn/tensor.hpp"

namespace nilmtune::nn {

/// A trainable tensor. Gradients live outside the parameter so fitted
/// networks can be shared read-only.
struct Parameter {
    std::string name;
    Tensor value;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Parameter gradients produced by Tape::backward.
class Gradients {
public:
    /// Gradient of `p`; zeros if the loss does not depend on it.
    Tensor of(const Parameter& p) const;
    const Tensor* find(const Parameter& p) const;
    void add(const Parameter& p, const Tensor& g);

private:
    std::unordered_map<const Parameter*, Tensor> grads_;
};

/// Records a forward computation so that `backward` can replay it in
/// reverse. Nodes are appended in evaluation order, which is a topological
/// order of the graph.
class Tape {
public:
    /// Backward callback: receives the node's accumulated output gradient
    /// and adds its contribution into the parents' gradients.
    using BackwardFn = std::function<void(Tape&, const Tensor& grad)>;

    /// With `record_gradients` false nothing is kept for backward; used for
    /// inference.
    explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Registers `p` once per tape; repeated calls return the same node.
    Var parameter(const Parameter& p);
    /// Appends an op result. Throws if any value is NaN or infinite.
    Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const;
    /// Gradient buffer of `v`, zero-initialised on first use.
    Tensor& grad(Var v);

    Gradients backward(Var loss);

    bool recording() const noexcept { return recording_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t last_backward_visits() const noexcept { return visits_; }

    void check(Var v) const;

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn backward;
        const Parameter* param = nullptr;
    };

    bool recording_;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
    std::size_t visits_ = 0;
};

}  // namespace nilmtune::nn
