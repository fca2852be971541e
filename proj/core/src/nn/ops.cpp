#include "nilmtune/nn/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nilmtune::nn {

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "linear") return Activation::linear;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

LossKind parse_loss(std::string_view name) {
    if (name == "mse" || name == "mean_squared_error") return LossKind::mse;
    if (name == "mae" || name == "mean_absolute_error") return LossKind::mae;
    throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

const char* to_string(LossKind k) { return k == LossKind::mse ? "mse" : "mae"; }

namespace {

Tape& same_tape(Var a, Var b) {
    if (!a.tape() || a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
    return *a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
    }
}

template <class F, class D>
Var unary(Var a, F forward, D derivative) {
    Tape& tape = *a.tape();
    const Tensor& x = a.value();
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = forward(x[i]);
    return tape.record(std::move(y), {a}, [a, derivative](Tape& t, const Tensor& g) {
        if (!t.requires_grad(a)) return;
        const Tensor& x = t.value(a);
        Tensor& dx = t.grad(a);
        for (std::size_t i = 0; i < x.size(); ++i) dx[i] += g[i] * derivative(x[i]);
    });
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
        throw std::invalid_argument("matmul: shape mismatch " + shape_string(A.shape()) + " x " +
                                    shape_string(B.shape()));
    }
    const std::size_t M = A.dim(0), K = A.dim(1), N = B.dim(1);
    Tensor C({M, N});
    for (std::size_t i = 0; i < M; ++i) {
        double* c = C.data() + i * N;
        for (std::size_t k = 0; k < K; ++k) {
            const double av = A[i * K + k];
            const double* brow = B.data() + k * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += av * brow[j];
        }
    }
    return tape.record(std::move(C), {a, b}, [a, b, M, K, N](Tape& t, const Tensor& g) {
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        if (t.requires_grad(a)) {
            Tensor& dA = t.grad(a);
            for (std::size_t i = 0; i < M; ++i) {
                const double* grow = g.data() + i * N;
                for (std::size_t k = 0; k < K; ++k) {
                    const double* brow = B.data() + k * N;
                    double s = 0.0;
                    for (std::size_t j = 0; j < N; ++j) s += grow[j] * brow[j];
                    dA[i * K + k] += s;
                }
            }
        }
        if (t.requires_grad(b)) {
            Tensor& dB = t.grad(b);
            for (std::size_t i = 0; i < M; ++i) {
                const double* grow = g.data() + i * N;
                for (std::size_t k = 0; k < K; ++k) {
                    const double av = A[i * K + k];
                    double* drow = dB.data() + k * N;
                    for (std::size_t j = 0; j < N; ++j) drow[j] += av * grow[j];
                }
            }
        }
    });
}

Var add_bias(Var x, Var bias) {
    Tape& tape = same_tape(x, bias);
    const Tensor& X = x.value();
    const Tensor& b = bias.value();
    if (X.rank() != 2 || b.rank() != 1 || X.dim(1) != b.dim(0)) {
        throw std::invalid_argument("add_bias: shape mismatch " + shape_string(X.shape()) + " + " +
                                    shape_string(b.shape()));
    }
    const std::size_t M = X.dim(0), N = X.dim(1);
    Tensor Y = X;
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < N; ++j) Y[i * N + j] += b[j];
    }
    return tape.record(std::move(Y), {x, bias}, [x, bias, M, N](Tape& t, const Tensor& g) {
        if (t.requires_grad(x)) {
            Tensor& dx = t.grad(x);
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
        if (t.requires_grad(bias)) {
            Tensor& db = t.grad(bias);
            for (std::size_t i = 0; i < M; ++i) {
                for (std::size_t j = 0; j < N; ++j) db[j] += g[i * N + j];
            }
        }
    });
}

Var add(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    require_same_shape(a.value(), b.value(), "add");
    Tensor y = a.value();
    const Tensor& B = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += B[i];
    return tape.record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
        for (Var v : {a, b}) {
            if (!t.requires_grad(v)) continue;
            Tensor& d = t.grad(v);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
    });
}

Var sub(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    require_same_shape(a.value(), b.value(), "sub");
    Tensor y = a.value();
    const Tensor& B = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= B[i];
    return tape.record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) {
            Tensor& d = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
        }
        if (t.requires_grad(b)) {
            Tensor& d = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b) {
    Tape& tape = same_tape(a, b);
    require_same_shape(a.value(), b.value(), "mul");
    Tensor y = a.value();
    const Tensor& B = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= B[i];
    return tape.record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        if (t.requires_grad(a)) {
            Tensor& d = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * B[i];
        }
        if (t.requires_grad(b)) {
            Tensor& d = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * A[i];
        }
    });
}

Var one_minus(Var a) {
    return unary(a, [](double x) { return 1.0 - x; }, [](double) { return -1.0; });
}

Var scale(Var a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var relu(Var a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

namespace {

double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var sigmoid(Var a) {
    return unary(a, sigmoid_value, [](double x) {
        const double s = sigmoid_value(x);
        return s * (1.0 - s);
    });
}

Var tanh(Var a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
    });
}

Var activate(Var a, Activation kind) {
    switch (kind) {
        case Activation::relu: return relu(a);
        case Activation::sigmoid: return sigmoid(a);
        case Activation::tanh: return tanh(a);
        case Activation::linear: return a;
    }
    return a;
}

Var dropout(Var a, double p, std::mt19937_64& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
    if (p == 0.0) return a;
    Tape& tape = *a.tape();
    const Tensor& x = a.value();
    Tensor mask(x.shape());
    std::bernoulli_distribution keep(1.0 - p);
    const double scale = 1.0 / (1.0 - p);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? scale : 0.0;
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
    return tape.record(std::move(y), {a}, [a, mask = std::move(mask)](Tape& t, const Tensor& g) {
        if (!t.requires_grad(a)) return;
        Tensor& d = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * mask[i];
    });
}

Var conv1d(Var x, Var w, Var bias, std::size_t pad_left, std::size_t pad_right) {
    Tape& tape = same_tape(x, w);
    same_tape(x, bias);
    const Tensor& X = x.value();
    const Tensor& W = w.value();
    const Tensor& b = bias.value();
    if (X.rank() != 3 || W.rank() != 3 || b.rank() != 1 || X.dim(1) != W.dim(1) || W.dim(0) != b.dim(0)) {
        throw std::invalid_argument("conv1d: shape mismatch x" + shape_string(X.shape()) + " w" +
                                    shape_string(W.shape()) + " b" + shape_string(b.shape()));
    }
    const std::size_t B = X.dim(0), C = X.dim(1), L = X.dim(2), O = W.dim(0), K = W.dim(2);
    if (L + pad_left + pad_right < K) throw std::invalid_argument("conv1d: kernel wider than padded input");
    const std::size_t Lout = L + pad_left + pad_right - K + 1;
    // output position l reads input position l + k - pad_left
    const auto lo = [=](std::size_t k) { return k < pad_left ? pad_left - k : std::size_t{0}; };
    const auto hi = [=](std::size_t k) {
        const std::size_t limit = L + pad_left;  // l + k < L + pad_left
        return limit > k ? std::min(Lout, limit - k) : std::size_t{0};
    };

    Tensor Y({B, O, Lout});
    for (std::size_t bi = 0; bi < B; ++bi) {
        for (std::size_t o = 0; o < O; ++o) {
            double* y = Y.data() + (bi * O + o) * Lout;
            for (std::size_t l = 0; l < Lout; ++l) y[l] = b[o];
            for (std::size_t c = 0; c < C; ++c) {
                const double* xr = X.data() + (bi * C + c) * L;
                for (std::size_t k = 0; k < K; ++k) {
                    const double wv = W[(o * C + c) * K + k];
                    for (std::size_t l = lo(k); l < hi(k); ++l) y[l] += wv * xr[l + k - pad_left];
                }
            }
        }
    }
    return tape.record(std::move(Y), {x, w, bias}, [=](Tape& t, const Tensor& g) {
        const Tensor& X = t.value(x);
        const Tensor& W = t.value(w);
        const bool gx = t.requires_grad(x), gw = t.requires_grad(w), gb = t.requires_grad(bias);
        for (std::size_t bi = 0; bi < B; ++bi) {
            for (std::size_t o = 0; o < O; ++o) {
                const double* gy = g.data() + (bi * O + o) * Lout;
                if (gb) {
                    double s = 0.0;
                    for (std::size_t l = 0; l < Lout; ++l) s += gy[l];
                    t.grad(bias)[o] += s;
                }
                for (std::size_t c = 0; c < C; ++c) {
                    const double* xr = X.data() + (bi * C + c) * L;
                    for (std::size_t k = 0; k < K; ++k) {
                        const std::size_t widx = (o * C + c) * K + k;
                        if (gw) {
                            double s = 0.0;
                            for (std::size_t l = lo(k); l < hi(k); ++l) s += gy[l] * xr[l + k - pad_left];
                            t.grad(w)[widx] += s;
                        }
                        if (gx) {
                            double* dx = t.grad(x).data() + (bi * C + c) * L;
                            const double wv = W[widx];
                            for (std::size_t l = lo(k); l < hi(k); ++l) dx[l + k - pad_left] += wv * gy[l];
                        }
                    }
                }
            }
        }
    });
}

Var reshape(Var a, Shape shape) {
    Tape& tape = *a.tape();
    Tensor y = a.value().reshaped(std::move(shape));
    return tape.record(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
        if (!t.requires_grad(a)) return;
        Tensor& d = t.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    });
}

Var time_step(Var x, std::size_t step) {
    Tape& tape = *x.tape();
    const Tensor& X = x.value();
    if (X.rank() != 3 || step >= X.dim(1)) throw std::invalid_argument("time_step: bad shape or index");
    const std::size_t B = X.dim(0), T = X.dim(1), F = X.dim(2);
    Tensor y({B, F});
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t f = 0; f < F; ++f) y[b * F + f] = X[(b * T + step) * F + f];
    }
    return tape.record(std::move(y), {x}, [x, B, T, F, step](Tape& t, const Tensor& g) {
        if (!t.requires_grad(x)) return;
        Tensor& d = t.grad(x);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t f = 0; f < F; ++f) d[(b * T + step) * F + f] += g[b * F + f];
        }
    });
}

Var sum(Var a) {
    Tape& tape = *a.tape();
    double s = 0.0;
    for (double v : a.value().values()) s += v;
    return tape.record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
        if (!t.requires_grad(a)) return;
        Tensor& d = t.grad(a);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[0];
    });
}

Var loss(LossKind kind, Var pred, const Tensor& target) {
    Tape& tape = *pred.tape();
    const Tensor& P = pred.value();
    require_same_shape(P, target, "loss");
    if (P.size() == 0) throw std::invalid_argument("loss: empty input");
    const auto n = static_cast<double>(P.size());
    double total = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double r = P[i] - target[i];
        total += kind == LossKind::mse ? r * r : std::abs(r);
    }
    return tape.record(Tensor::scalar(total / n), {pred}, [pred, target, kind, n](Tape& t, const Tensor& g) {
        if (!t.requires_grad(pred)) return;
        const Tensor& P = t.value(pred);
        Tensor& d = t.grad(pred);
        for (std::size_t i = 0; i < P.size(); ++i) {
            const double r = P[i] - target[i];
            const double dr = kind == LossKind::mse ? 2.0 * r : (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0));
            d[i] += g[0] * dr / n;
        }
    });
}

}  // namespace nilmtune::nn
