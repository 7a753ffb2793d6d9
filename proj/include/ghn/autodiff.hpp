#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sparse.hpp"

namespace ghn {

/// A learnable tensor that outlives individual tapes.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
    /// Subject to L2 weight decay in the optimizer.
    bool decay = true;
    /// Frozen parameters still receive gradients but are never updated.
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Matrix v, bool decays = true)
        : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())),
          decay(decays) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Matrix& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Eager reverse-mode tape. Nodes are appended in creation order, which is a
/// topological order, so backward is a single reverse sweep.
class Tape {
public:
    /// Receives the upstream gradient of the node being processed.
    using Backward = std::function<void(Tape&, const Matrix&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value) { return push(std::move(value), false, nullptr, {}); }

    /// A leaf whose gradient can be read back with grad().
    Var variable(Matrix value) { return push(std::move(value), true, nullptr, {}); }

    /// A leaf bound to a Parameter; backward() accumulates into Parameter::grad.
    Var parameter(Parameter& p) { return push(p.value, true, &p, {}); }

    Var record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
        bool needs = false;
        for (const Var& p : parents) needs = needs || nodes_[p.id()].requires_grad;
        return push(std::move(value), needs, nullptr, needs ? std::move(backward) : Backward{});
    }

    Var record(Matrix value, const std::vector<Var>& parents, Backward backward) {
        bool needs = false;
        for (const Var& p : parents) needs = needs || nodes_[p.id()].requires_grad;
        return push(std::move(value), needs, nullptr, needs ? std::move(backward) : Backward{});
    }

    const Matrix& value(const Var& v) const { return nodes_.at(v.id()).value; }
    bool requires_grad(const Var& v) const { return nodes_.at(v.id()).requires_grad; }

    /// Gradient of the last backward() target with respect to v (zeros if unreached).
    Matrix grad(const Var& v) const {
        const Node& n = nodes_.at(v.id());
        if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    void accumulate(const Var& v, const Matrix& g) {
        Node& n = nodes_[v.id()];
        if (!n.requires_grad) return;
        require_shape(g.rows() == n.value.rows() && g.cols() == n.value.cols(),
                      "gradient " + shape_str(g) + " for node " + shape_str(n.value));
        if (n.grad.size() == 0) n.grad = g;
        else n.grad += g;
    }

    void backward(const Var& loss) {
        if (backward_done_) throw Error("backward called twice without reset()");
        const Node& root = nodes_.at(loss.id());
        require_shape(root.value.rows() == 1 && root.value.cols() == 1,
                      "backward needs a scalar loss, got " + shape_str(root.value));
        backward_done_ = true;
        if (!root.requires_grad) return;
        nodes_[loss.id()].grad = Matrix::Ones(1, 1);
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.grad.size() == 0) continue;
            if (n.backward) n.backward(*this, n.grad);
            if (n.param != nullptr) {
                if (n.param->grad.size() == 0) n.param->zero_grad();
                n.param->grad += n.grad;
            }
        }
    }

    /// Clears all gradients so backward() may run again.
    void reset() {
        for (Node& n : nodes_) n.grad.resize(0, 0);
        backward_done_ = false;
    }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        Backward backward;
    };

    Var push(Matrix value, bool requires_grad, Parameter* param, Backward backward) {
        nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, param, std::move(backward)});
        return Var(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

/// Differentiable operators. Each records its forward value and an exact
/// vector-Jacobian product.
namespace ad {

namespace detail {
inline Tape& tape_of(const Var& a) { return *a.tape(); }
inline void same_shape(const Var& a, const Var& b, const char* op) {
    require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                  std::string(op) + ": " + shape_str(a.value()) + " vs " + shape_str(b.value()));
}
} // namespace detail

inline Var matmul(const Var& a, const Var& b) {
    require_shape(a.cols() == b.rows(),
                  "matmul " + shape_str(a.value()) + " * " + shape_str(b.value()));
    Matrix out = a.value() * b.value();
    return detail::tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
        if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
    });
}

/// a · bᵀ
inline Var matmul_nt(const Var& a, const Var& b) {
    require_shape(a.cols() == b.cols(),
                  "matmul_nt " + shape_str(a.value()) + " * " + shape_str(b.value()) + "^T");
    Matrix out = a.value() * b.value().transpose();
    return detail::tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, g * b.value());
        if (t.requires_grad(b)) t.accumulate(b, g.transpose() * a.value());
    });
}

inline Var transpose(const Var& a) {
    Matrix out = a.value().transpose();
    return detail::tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, g.transpose());
    });
}

/// s · a for a constant sparse s (the Laplacian). s must outlive the tape.
inline Var sparse_matmul(const CsrMatrix& s, const Var& a) {
    Matrix out = s.multiply(a.value());
    const CsrMatrix* sp = &s;
    return detail::tape_of(a).record(std::move(out), {a}, [a, sp](Tape& t, const Matrix& g) {
        t.accumulate(a, sp->multiply_transposed(g));
    });
}

inline Var add(const Var& a, const Var& b) {
    detail::same_shape(a, b, "add");
    Matrix out = a.value() + b.value();
    return detail::tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

inline Var sub(const Var& a, const Var& b) {
    detail::same_shape(a, b, "sub");
    Matrix out = a.value() - b.value();
    return detail::tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        if (t.requires_grad(b)) t.accumulate(b, -g);
    });
}

/// a + 1·row, broadcasting a 1×c row over every row of a.
inline Var add_row(const Var& a, const Var& row) {
    require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
    Matrix out = a.value().rowwise() + row.value().row(0);
    return detail::tape_of(a).record(std::move(out), {a, row},
                                     [a, row](Tape& t, const Matrix& g) {
                                         t.accumulate(a, g);
                                         if (t.requires_grad(row))
                                             t.accumulate(row, g.colwise().sum());
                                     });
}

/// a + col·1ᵀ, broadcasting an r×1 column over every column of a.
inline Var add_col(const Var& a, const Var& col) {
    require_shape(col.cols() == 1 && col.rows() == a.rows(), "add_col");
    Matrix out = a.value().colwise() + col.value().col(0);
    return detail::tape_of(a).record(std::move(out), {a, col},
                                     [a, col](Tape& t, const Matrix& g) {
                                         t.accumulate(a, g);
                                         if (t.requires_grad(col))
                                             t.accumulate(col, g.rowwise().sum());
                                     });
}

inline Var add_scalar(const Var& a, double c) {
    Matrix out = a.value().array() + c;
    return detail::tape_of(a).record(std::move(out), {a},
                                     [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

inline Var scale(const Var& a, double c) {
    Matrix out = c * a.value();
    return detail::tape_of(a).record(std::move(out), {a},
                                     [a, c](Tape& t, const Matrix& g) { t.accumulate(a, c * g); });
}

/// s · a for a 1×1 Var s.
inline Var scale_by(const Var& a, const Var& s) {
    require_shape(s.rows() == 1 && s.cols() == 1, "scale_by needs a scalar");
    Matrix out = s.value()(0, 0) * a.value();
    return detail::tape_of(a).record(std::move(out), {a, s}, [a, s](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, s.value()(0, 0) * g);
        if (t.requires_grad(s))
            t.accumulate(s, Matrix::Constant(1, 1, (g.array() * a.value().array()).sum()));
    });
}

inline Var elementwise_mul(const Var& a, const Var& b) {
    detail::same_shape(a, b, "elementwise_mul");
    Matrix out = a.value().cwiseProduct(b.value());
    return detail::tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
        if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
    });
}

/// Scales row i of a by col(i).
inline Var mul_col(const Var& a, const Var& col) {
    require_shape(col.cols() == 1 && col.rows() == a.rows(), "mul_col");
    Matrix out = a.value().array().colwise() * col.value().col(0).array();
    return detail::tape_of(a).record(
        std::move(out), {a, col}, [a, col](Tape& t, const Matrix& g) {
            if (t.requires_grad(a))
                t.accumulate(a, Matrix(g.array().colwise() * col.value().col(0).array()));
            if (t.requires_grad(col))
                t.accumulate(col, Matrix(g.cwiseProduct(a.value()).rowwise().sum()));
        });
}

inline Var exp(const Var& a) {
    Matrix out = a.value().array().exp();
    return detail::tape_of(a).record(out, {a}, [a, out](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseProduct(out));
    });
}

inline Var relu(const Var& a) {
    Matrix out = a.value().cwiseMax(0.0);
    return detail::tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix((a.value().array() > 0.0).select(g, 0.0)));
    });
}

inline Var sigmoid(const Var& a) {
    Matrix out = (1.0 + (-a.value().array()).exp()).inverse();
    return detail::tape_of(a).record(out, {a}, [a, out](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix(g.array() * out.array() * (1.0 - out.array())));
    });
}

inline Var rowwise_softmax(const Var& a) {
    Matrix p = softmax_rows(a.value());
    return detail::tape_of(a).record(p, {a}, [a, p](Tape& t, const Matrix& g) {
        const Vector dot = g.cwiseProduct(p).rowwise().sum();
        t.accumulate(a, Matrix(p.array() * (g.colwise() - dot).array()));
    });
}

/// Per-row log Σ exp, as an r×1 column.
inline Var logsumexp(const Var& a) {
    Matrix out = logsumexp_rows(a.value());
    return detail::tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        const Matrix p = softmax_rows(a.value());
        t.accumulate(a, Matrix(p.array().colwise() * g.col(0).array()));
    });
}

inline Var row_sum(const Var& a) {
    Matrix out = a.value().rowwise().sum();
    return detail::tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix(g.col(0).replicate(1, a.cols())));
    });
}

inline Var sum(const Var& a) {
    Matrix out = Matrix::Constant(1, 1, a.value().sum());
    return detail::tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

/// ‖a‖²_F as 1×1.
inline Var squared_norm(const Var& a) {
    Matrix out = Matrix::Constant(1, 1, a.value().squaredNorm());
    return detail::tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, 2.0 * g(0, 0) * a.value());
    });
}

/// Per-row squared norm, as an r×1 column.
inline Var row_squared_norm(const Var& a) {
    Matrix out = a.value().rowwise().squaredNorm();
    return detail::tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix(2.0 * (a.value().array().colwise() * g.col(0).array())));
    });
}

/// Divides each row by its sum. Rows summing to zero map to zero with zero
/// gradient. Intended for nonnegative inputs.
inline Var row_normalize(const Var& a) {
    const Vector s = a.value().rowwise().sum();
    Matrix out = Matrix::Zero(a.rows(), a.cols());
    for (Index r = 0; r < a.rows(); ++r)
        if (s(r) > 0.0) out.row(r) = a.value().row(r) / s(r);
    return detail::tape_of(a).record(out, {a}, [a, s, out](Tape& t, const Matrix& g) {
        Matrix da = Matrix::Zero(a.rows(), a.cols());
        for (Index r = 0; r < a.rows(); ++r) {
            if (!(s(r) > 0.0)) continue;
            const double dot = g.row(r).dot(out.row(r));
            da.row(r) = (g.row(r).array() - dot).matrix() / s(r);
        }
        t.accumulate(a, da);
    });
}

inline Var slice_cols(const Var& a, Index start, Index count) {
    require_shape(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols");
    Matrix out = a.value().middleCols(start, count);
    return detail::tape_of(a).record(std::move(out), {a},
                                     [a, start, count](Tape& t, const Matrix& g) {
                                         Matrix da = Matrix::Zero(a.rows(), a.cols());
                                         da.middleCols(start, count) = g;
                                         t.accumulate(a, da);
                                     });
}

inline Var slice_rows(const Var& a, Index start, Index count) {
    require_shape(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows");
    Matrix out = a.value().middleRows(start, count);
    return detail::tape_of(a).record(std::move(out), {a},
                                     [a, start, count](Tape& t, const Matrix& g) {
                                         Matrix da = Matrix::Zero(a.rows(), a.cols());
                                         da.middleRows(start, count) = g;
                                         t.accumulate(a, da);
                                     });
}

/// Horizontal concatenation [a₁ | a₂ | …].
inline Var concat_cols(const std::vector<Var>& parts) {
    require_shape(!parts.empty(), "concat_cols of nothing");
    Index cols = 0;
    for (const Var& p : parts) {
        require_shape(p.rows() == parts.front().rows(), "concat_cols row counts");
        cols += p.cols();
    }
    Matrix out(parts.front().rows(), cols);
    Index at = 0;
    for (const Var& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    return detail::tape_of(parts.front())
        .record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
            Index at = 0;
            for (const Var& p : parts) {
                if (t.requires_grad(p)) t.accumulate(p, g.middleCols(at, p.cols()));
                at += p.cols();
            }
        });
}

/// Vertical concatenation [a₁; a₂; …].
inline Var concat_rows(const std::vector<Var>& parts) {
    require_shape(!parts.empty(), "concat_rows of nothing");
    Index rows = 0;
    for (const Var& p : parts) {
        require_shape(p.cols() == parts.front().cols(), "concat_rows column counts");
        rows += p.rows();
    }
    Matrix out(rows, parts.front().cols());
    Index at = 0;
    for (const Var& p : parts) {
        out.middleRows(at, p.rows()) = p.value();
        at += p.rows();
    }
    return detail::tape_of(parts.front())
        .record(std::move(out), parts, [parts](Tape& t, const Matrix& g) {
            Index at = 0;
            for (const Var& p : parts) {
                if (t.requires_grad(p)) t.accumulate(p, g.middleRows(at, p.rows()));
                at += p.rows();
            }
        });
}

/// Row-wise layer normalization with affine gain/bias (both 1×d).
inline Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5) {
    const Index d = x.cols();
    require_shape(gain.rows() == 1 && gain.cols() == d && bias.rows() == 1 && bias.cols() == d,
                  "layer_norm parameters");
    Matrix xhat(x.rows(), d);
    Vector inv_std(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        const double mean = x.value().row(r).mean();
        const double var = (x.value().row(r).array() - mean).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (x.value().row(r).array() - mean) * inv_std(r);
    }
    Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() +
                 bias.value().row(0).array();
    return detail::tape_of(x).record(
        std::move(out), {x, gain, bias},
        [x, gain, bias, xhat, inv_std, d](Tape& t, const Matrix& g) {
            if (t.requires_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
            if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
            if (!t.requires_grad(x)) return;
            Matrix dxhat = g.array().rowwise() * gain.value().row(0).array();
            Matrix dx(x.rows(), d);
            for (Index r = 0; r < x.rows(); ++r) {
                const double m1 = dxhat.row(r).mean();
                const double m2 = dxhat.row(r).dot(xhat.row(r)) / static_cast<double>(d);
                dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
            }
            t.accumulate(x, dx);
        });
}

/// Inverted dropout: zeroes each entry with probability `rate`, scales survivors
/// by 1/(1-rate). rate == 0 returns x itself.
inline Var dropout_mask(const Var& x, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
    if (rate == 0.0) return x;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix mask(x.rows(), x.cols());
    const double keep = 1.0 / (1.0 - rate);
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = u(rng) < rate ? 0.0 : keep;
    Matrix out = x.value().cwiseProduct(mask);
    return detail::tape_of(x).record(std::move(out), {x}, [x, mask](Tape& t, const Matrix& g) {
        t.accumulate(x, g.cwiseProduct(mask));
    });
}

/// Mean cross-entropy over the selected rows of an N×C logit matrix.
inline Var cross_entropy_with_logits(const Var& logits, const std::vector<int>& labels,
                                     const std::vector<Index>& rows) {
    require_shape(static_cast<Index>(labels.size()) == logits.rows(), "cross_entropy labels");
    require_shape(!rows.empty(), "cross_entropy over no rows");
    const Matrix& z = logits.value();
    double total = 0.0;
    for (Index r : rows) {
        const int y = labels[r];
        require_shape(y >= 0 && y < z.cols(), "cross_entropy label out of range");
        const double mx = z.row(r).maxCoeff();
        const double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
        total += lse - z(r, y);
    }
    const double n = static_cast<double>(rows.size());
    Matrix out = Matrix::Constant(1, 1, total / n);
    return detail::tape_of(logits).record(
        std::move(out), {logits}, [logits, labels, rows, n](Tape& t, const Matrix& g) {
            const Matrix& z = logits.value();
            Matrix dz = Matrix::Zero(z.rows(), z.cols());
            for (Index r : rows) {
                const double mx = z.row(r).maxCoeff();
                RowVector p = (z.row(r).array() - mx).exp();
                p /= p.sum();
                p(labels[r]) -= 1.0;
                dz.row(r) += p * (g(0, 0) / n);
            }
            t.accumulate(logits, dz);
        });
}

} // namespace ad
} // namespace ghn
