#pragma once

#include <string>
#include <vector>

#include "autodiff.hpp"

namespace ghn {

enum class RetrievalKind { lse, lsr };

/// Pattern matrix M (K×d) plus a log-parameterized inverse temperature.
/// With H heads, head h owns the column block [h·d/H, (h+1)·d/H) of M, i.e.
/// K patterns of width d/H. With G groups, rows are split into G equal runs.
struct MemoryBank {
    Parameter patterns;
    Parameter log_beta;
    int groups = 1;
    int heads = 1;
    RetrievalKind kind = RetrievalKind::lse;

    Index num_patterns() const { return patterns.value.rows(); }
    Index dim() const { return patterns.value.cols(); }
    double beta() const { return std::exp(log_beta.value(0, 0)); }

    void check() const {
        if (groups < 1 || num_patterns() % groups != 0)
            throw ConfigError("number of patterns K=" + std::to_string(num_patterns()) +
                              " is not divisible by groups G=" + std::to_string(groups));
        if (heads < 1 || dim() % heads != 0)
            throw ConfigError("dimension d=" + std::to_string(dim()) +
                              " is not divisible by heads H=" + std::to_string(heads));
        if (groups > 1 && kind != RetrievalKind::lse)
            throw ConfigError("hierarchical retrieval uses LSE within groups");
    }

    static MemoryBank create(Index num_patterns, Index dim, double beta_init, Rng& rng,
                             RetrievalKind kind = RetrievalKind::lse, int groups = 1,
                             int heads = 1) {
        if (!(beta_init > 0.0)) throw ConfigError("beta_init must be positive");
        MemoryBank b;
        b.patterns = Parameter("patterns",
                               random_normal(num_patterns, dim, rng,
                                             1.0 / std::sqrt(static_cast<double>(dim))));
        b.log_beta = Parameter("log_beta", Matrix::Constant(1, 1, std::log(beta_init)), false);
        b.groups = groups;
        b.heads = heads;
        b.kind = kind;
        b.check();
        return b;
    }

    static MemoryBank from_patterns(Matrix m, double beta, RetrievalKind kind = RetrievalKind::lse,
                                    int groups = 1, int heads = 1) {
        MemoryBank b;
        b.patterns = Parameter("patterns", std::move(m));
        b.log_beta = Parameter("log_beta", Matrix::Constant(1, 1, std::log(beta)), false);
        b.groups = groups;
        b.heads = heads;
        b.kind = kind;
        b.check();
        return b;
    }
};

/// g = σ(W_g [x ‖ r] + b_g), W_g is d×2d.
struct Gate {
    Parameter weight;
    Parameter bias;

    static Gate create(Index dim, double bias_init, Rng& rng) {
        const double bound = 1.0 / std::sqrt(2.0 * static_cast<double>(dim));
        Gate g;
        g.weight = Parameter("gate_weight", random_uniform(dim, 2 * dim, rng, -bound, bound));
        g.bias = Parameter("gate_bias", Matrix::Constant(1, dim, bias_init), false);
        return g;
    }

    static Gate constant(Index dim, double bias) {
        Gate g;
        g.weight = Parameter("gate_weight", Matrix::Zero(dim, 2 * dim));
        g.bias = Parameter("gate_bias", Matrix::Constant(1, dim, bias), false);
        return g;
    }
};

/// Tape-side view of a MemoryBank.
struct BoundBank {
    Var patterns;
    Var beta;
    int groups = 1;
    int heads = 1;
    RetrievalKind kind = RetrievalKind::lse;
};

inline BoundBank bind(Tape& tape, MemoryBank& bank) {
    bank.check();
    Var log_beta = tape.parameter(bank.log_beta);
    return {tape.parameter(bank.patterns), ad::exp(log_beta), bank.groups, bank.heads, bank.kind};
}

/// Binds the bank as constants (no gradient), for evaluation outside training.
inline BoundBank bind_constant(Tape& tape, const MemoryBank& bank) {
    bank.check();
    return {tape.constant(bank.patterns.value), tape.constant(Matrix::Constant(1, 1, bank.beta())),
            bank.groups, bank.heads, bank.kind};
}

struct Retrieval {
    Var output;
    /// Normalized pattern weights (N×K) of a flat retrieval.
    Var weights;
};

/// Mᵀ softmax(β M x) for every row x of `queries`.
inline Retrieval lse_retrieval(const Var& queries, const Var& patterns, const Var& beta) {
    Var logits = ad::scale_by(ad::matmul_nt(queries, patterns), beta);
    Var p = ad::rowwise_softmax(logits);
    return {ad::matmul(p, patterns), p};
}

/// Normalized Epanechnikov weights relu(1 - β/2 ‖x - m‖²). A query with no
/// pattern inside the kernel support is returned unchanged.
inline Retrieval lsr_retrieval(const Var& queries, const Var& patterns, const Var& beta) {
    Tape& tape = *queries.tape();
    Var cross = ad::scale(ad::matmul_nt(queries, patterns), -2.0);
    Var sq = ad::add_row(ad::add_col(cross, ad::row_squared_norm(queries)),
                         ad::transpose(ad::row_squared_norm(patterns)));
    Var kernel = ad::relu(ad::add_scalar(ad::scale(ad::scale_by(sq, beta), -0.5), 1.0));
    Var w = ad::row_normalize(kernel);
    const Matrix& k = kernel.value();
    Matrix empty = Matrix::Zero(k.rows(), 1);
    for (Index r = 0; r < k.rows(); ++r)
        if (!(k.row(r).sum() > 0.0)) empty(r, 0) = 1.0;
    Var out = ad::matmul(w, patterns);
    if (empty.sum() > 0.0) out = ad::add(out, ad::mul_col(queries, tape.constant(empty)));
    return {out, w};
}

/// Two-stage retrieval: soft routing over group centroids with temperature β,
/// then LSE retrieval inside every group, mixed by the routing weights.
inline Var hier_retrieval(const Var& queries, const Var& patterns, const Var& beta, int groups) {
    Tape& tape = *queries.tape();
    const Index k = patterns.rows();
    require_shape(groups >= 1 && k % groups == 0, "hierarchical groups must divide K");
    const Index per = k / groups;
    Matrix avg = Matrix::Zero(groups, k);
    for (int g = 0; g < groups; ++g)
        avg.block(g, g * per, 1, per).setConstant(1.0 / static_cast<double>(per));
    Var centroids = ad::matmul(tape.constant(std::move(avg)), patterns);
    Var route = ad::rowwise_softmax(ad::scale_by(ad::matmul_nt(queries, centroids), beta));
    Var out;
    for (int g = 0; g < groups; ++g) {
        Var inner = lse_retrieval(queries, ad::slice_rows(patterns, g * per, per), beta).output;
        Var part = ad::mul_col(inner, ad::slice_cols(route, g, 1));
        out = g == 0 ? part : ad::add(out, part);
    }
    return out;
}

/// Single-head retrieval dispatch for one block of queries and patterns.
inline Var retrieve_block(const Var& queries, const Var& patterns, const Var& beta, int groups,
                          RetrievalKind kind) {
    if (groups > 1) return hier_retrieval(queries, patterns, beta, groups);
    return kind == RetrievalKind::lse ? lse_retrieval(queries, patterns, beta).output
                                      : lsr_retrieval(queries, patterns, beta).output;
}

/// Full retrieval for an N×d query matrix: H contiguous column blocks, each
/// against its own K×(d/H) pattern block, concatenated.
inline Var retrieve(const BoundBank& bank, const Var& queries) {
    const Index d = bank.patterns.cols();
    require_shape(queries.cols() == d, "retrieve: queries have " + std::to_string(queries.cols()) +
                                           " columns, bank has " + std::to_string(d));
    if (bank.heads == 1)
        return retrieve_block(queries, bank.patterns, bank.beta, bank.groups, bank.kind);
    if (d % bank.heads != 0) throw ConfigError("d is not divisible by the number of heads");
    const Index w = d / bank.heads;
    std::vector<Var> parts;
    for (int h = 0; h < bank.heads; ++h)
        parts.push_back(retrieve_block(ad::slice_cols(queries, h * w, w),
                                       ad::slice_cols(bank.patterns, h * w, w), bank.beta,
                                       bank.groups, bank.kind));
    return ad::concat_cols(parts);
}

struct GateOutput {
    Var blended;
    Var gate;
};

/// r̃ = g ⊙ r + (1 - g) ⊙ x with g = σ(W_g [x ‖ r] + b_g).
inline GateOutput gate_blend(const Var& weight, const Var& bias, const Var& x, const Var& r) {
    Var g = ad::sigmoid(ad::add_row(ad::matmul_nt(ad::concat_cols({x, r}), weight), bias));
    return {ad::add(x, ad::elementwise_mul(g, ad::sub(r, x))), g};
}

// Eager wrappers over a single query matrix (rows are independent queries).

namespace detail {
inline Matrix eval_retrieval(const MemoryBank& bank, const Matrix& x, int groups, int heads,
                             RetrievalKind kind) {
    Tape tape;
    BoundBank b = bind_constant(tape, bank);
    b.groups = groups;
    b.heads = heads;
    b.kind = kind;
    return retrieve(b, tape.constant(x)).value();
}
inline void require_flat(const MemoryBank& bank, const char* op) {
    if (bank.groups != 1 || bank.heads != 1)
        throw ConfigError(std::string(op) + " needs a flat bank (G=1, H=1)");
}
} // namespace detail

inline Matrix retrieve_lse(const MemoryBank& bank, const Matrix& x) {
    detail::require_flat(bank, "retrieve_lse");
    return detail::eval_retrieval(bank, x, 1, 1, RetrievalKind::lse);
}

inline Matrix retrieve_lsr(const MemoryBank& bank, const Matrix& x) {
    detail::require_flat(bank, "retrieve_lsr");
    return detail::eval_retrieval(bank, x, 1, 1, RetrievalKind::lsr);
}

inline Matrix retrieve_hier(const MemoryBank& bank, const Matrix& x) {
    bank.check();
    if (bank.heads != 1) throw ConfigError("retrieve_hier expects a single head");
    Tape tape;
    BoundBank b = bind_constant(tape, bank);
    return hier_retrieval(tape.constant(x), b.patterns, b.beta, bank.groups).value();
}

inline Matrix retrieve_multihead(const MemoryBank& bank, const Matrix& x) {
    return detail::eval_retrieval(bank, x, bank.groups, bank.heads, bank.kind);
}

/// Normalized LSE weights softmax(β M x) per query row.
inline Matrix lse_weights(const MemoryBank& bank, const Matrix& x) {
    return softmax_rows(bank.beta() * x * bank.patterns.value.transpose());
}

inline Matrix gate_blend(const Gate& gate, const Matrix& x, const Matrix& r) {
    Tape tape;
    return gate_blend(tape.constant(gate.weight.value), tape.constant(gate.bias.value),
                      tape.constant(x), tape.constant(r))
        .blended.value();
}

inline Matrix gate_values(const Gate& gate, const Matrix& x, const Matrix& r) {
    Tape tape;
    return gate_blend(tape.constant(gate.weight.value), tape.constant(gate.bias.value),
                      tape.constant(x), tape.constant(r))
        .gate.value();
}

} // namespace ghn
