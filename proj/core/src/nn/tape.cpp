#include "nilmtune/nn/tape.hpp"

#include <stdexcept>

namespace nilmtune::nn {

const Tensor& Var::value() const {
    if (!tape_) throw std::logic_error("Var: not attached to a tape");
    return tape_->value(*this);
}

Tensor Gradients::of(const Parameter& p) const {
    if (const Tensor* g = find(p)) return *g;
    return Tensor(p.value.shape());
}

const Tensor* Gradients::find(const Parameter& p) const {
    const auto it = grads_.find(&p);
    return it == grads_.end() ? nullptr : &it->second;
}

void Gradients::add(const Parameter& p, const Tensor& g) {
    auto [it, inserted] = grads_.try_emplace(&p, g);
    if (inserted) return;
    auto dst = it->second.values();
    auto src = g.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::check(Var v) const {
    if (v.tape_ != this) throw std::invalid_argument("Tape: variable belongs to a different (detached) tape");
    if (v.id_ >= nodes_.size()) throw std::out_of_range("Tape: variable id out of range");
}

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const Parameter& p) {
    if (const auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
    param_nodes_.emplace(&p, nodes_.size());
    Node n;
    n.value = p.value;
    n.requires_grad = recording_;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
    if (!value.all_finite()) throw std::runtime_error("non-finite value produced by a kernel operation");
    Node n;
    n.value = std::move(value);
    if (recording_) {
        for (Var p : parents) {
            check(p);
            n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
        }
        if (n.requires_grad) n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
    check(v);
    return nodes_[v.id_].value;
}

bool Tape::requires_grad(Var v) const {
    check(v);
    return nodes_[v.id_].requires_grad;
}

Tensor& Tape::grad(Var v) {
    check(v);
    Node& n = nodes_[v.id_];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

Gradients Tape::backward(Var loss) {
    check(loss);
    if (!recording_) throw std::logic_error("Tape::backward on an inference tape");
    if (nodes_[loss.id_].value.size() != 1) {
        throw std::invalid_argument("Tape::backward: loss is not a scalar (shape " +
                                    shape_string(nodes_[loss.id_].value.shape()) + ")");
    }
    grad(loss).fill(1.0);
    visits_ = 0;
    Gradients out;
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
        Node& n = nodes_[i];
        ++visits_;
        if (n.grad.empty()) continue;
        // parents always precede their children, so this never aliases n.grad
        if (n.backward) n.backward(*this, n.grad);
        if (n.param) out.add(*n.param, n.grad);
    }
    return out;
}

}  // namespace nilmtune::nn
