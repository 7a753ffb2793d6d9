#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graph.hpp"
#include "memory.hpp"

namespace ghn {

enum class Variant { lse, lsr, hier, nomem };

inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::lse: return "lse";
    case Variant::lsr: return "lsr";
    case Variant::hier: return "hier";
    case Variant::nomem: return "nomem";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "lse") return Variant::lse;
    if (s == "lsr") return Variant::lsr;
    if (s == "hier") return Variant::hier;
    if (s == "nomem") return Variant::nomem;
    throw ConfigError("unknown variant '" + s + "' (expected lse, lsr, hier or nomem)");
}

struct DynamicsConfig {
    /// Laplacian weight; negative values sharpen instead of smooth.
    double lambda = 0.3;
    /// Damping in (0, 1].
    double alpha = 0.3;
    int iterations = 4;
    Variant variant = Variant::lse;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ConfigError("alpha must be in (0, 1], got " + std::to_string(alpha));
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
    }

    /// The convergence analysis only covers nonnegative Laplacian weights.
    void require_theory_regime() const {
        validate();
        if (lambda < 0.0)
            throw ConfigError("theory checks require lambda >= 0, got " + std::to_string(lambda));
    }
};

// ---------------------------------------------------------------------------
// Base energy, evaluated on plain matrices.

/// S(X): row v is Mᵀ softmax(β M x_v).
inline Matrix retrieval_map(const Matrix& x, const Matrix& m, double beta) {
    require_shape(x.cols() == m.cols(), "retrieval_map: X " + shape_str(x) + ", M " + shape_str(m));
    return softmax_rows(beta * x * m.transpose()) * m;
}

/// Σ_v [ -lse(β, M x_v) + ½‖x_v‖² ] + λ tr(Xᵀ L X), with lse(β, z) = β⁻¹ log Σ exp(β z).
inline double energy_base(const Matrix& x, const Matrix& m, double beta, double lambda,
                          const CsrMatrix& lap) {
    require_shape(x.cols() == m.cols() && lap.rows() == x.rows(),
                  "energy_base: X " + shape_str(x) + ", M " + shape_str(m));
    const Vector lse = logsumexp_rows(beta * x * m.transpose()) / beta;
    return -lse.sum() + 0.5 * x.squaredNorm() + lambda * laplacian_quadratic(lap, x);
}

/// Row v: -Mᵀ softmax(β M x_v) + x_v + 2λ (L X)_v.
inline Matrix grad_energy_base(const Matrix& x, const Matrix& m, double beta, double lambda,
                               const CsrMatrix& lap) {
    require_shape(x.cols() == m.cols() && lap.rows() == x.rows(),
                  "grad_energy_base: X " + shape_str(x) + ", M " + shape_str(m));
    return x - retrieval_map(x, m, beta) + 2.0 * lambda * lap.multiply(x);
}

/// Undamped map T(X) = S(X) - 2λ L X; its fixed points are the critical points.
inline Matrix fixed_point_map(const Matrix& x, const Matrix& m, double beta, double lambda,
                              const CsrMatrix& lap) {
    if (lambda < 0.0) throw ConfigError("fixed_point_map requires lambda >= 0");
    require_shape(lap.rows() == x.rows(), "fixed_point_map: L vs X");
    return retrieval_map(x, m, beta) - 2.0 * lambda * lap.multiply(x);
}

/// (1-α) X + α T(X).
inline Matrix damped_map(const Matrix& x, const Matrix& m, double beta, double lambda,
                         const CsrMatrix& lap, double alpha) {
    return (1.0 - alpha) * x + alpha * fixed_point_map(x, m, beta, lambda, lap);
}

// ---------------------------------------------------------------------------
// Differentiable update used by the model.

struct BoundGate {
    Var weight;
    Var bias;
};

inline BoundGate bind(Tape& tape, Gate& gate) {
    return {tape.parameter(gate.weight), tape.parameter(gate.bias)};
}

inline BoundGate bind_constant(Tape& tape, const Gate& gate) {
    return {tape.constant(gate.weight.value), tape.constant(gate.bias.value)};
}

struct StepOutput {
    Var next;
    /// Mean gate value over nodes and coordinates; empty when ungated.
    std::optional<double> gate_mean;
};

/// One damped update. Memory variants:
///   X' = (1-α) X + α [ r̃ - 2λ L X ],   r̃ = gated retrieval (raw retrieval if gate is null).
/// NoMem replaces the retrieval by X itself: X' = X - 2αλ L X.
inline StepOutput ghn_step(const Var& x, const BoundBank* bank, const BoundGate* gate,
                           const DynamicsConfig& cfg, const CsrMatrix& lap) {
    Var smooth = ad::scale(ad::sparse_matmul(lap, x), 2.0 * cfg.lambda);
    if (cfg.variant == Variant::nomem || bank == nullptr)
        return {ad::sub(x, ad::scale(smooth, cfg.alpha)), std::nullopt};
    Var r = retrieve(*bank, x);
    StepOutput out;
    if (gate != nullptr) {
        GateOutput g = gate_blend(gate->weight, gate->bias, x, r);
        r = g.blended;
        out.gate_mean = g.gate.value().mean();
    }
    out.next = ad::add(ad::scale(x, 1.0 - cfg.alpha), ad::scale(ad::sub(r, smooth), cfg.alpha));
    return out;
}

struct IterationDiagnostics {
    /// ‖X_{t+1} - X_t‖_F per iteration.
    std::vector<double> step_norms;
    /// Mean gate value per iteration (memory variants with a gate).
    std::vector<double> gate_means;
};

struct IterateOutput {
    Var state;
    IterationDiagnostics diagnostics;
};

/// Applies ghn_step cfg.iterations times. Throws NumericError naming the
/// iteration that produced a non-finite state.
inline IterateOutput iterate(const Var& x0, const BoundBank* bank, const BoundGate* gate,
                             const DynamicsConfig& cfg, const CsrMatrix& lap) {
    cfg.validate();
    IterateOutput out{x0, {}};
    for (int t = 0; t < cfg.iterations; ++t) {
        StepOutput s = ghn_step(out.state, bank, gate, cfg, lap);
        if (!s.next.value().allFinite())
            throw NumericError("non-finite state at iteration " + std::to_string(t + 1));
        out.diagnostics.step_norms.push_back((s.next.value() - out.state.value()).norm());
        if (s.gate_mean) out.diagnostics.gate_means.push_back(*s.gate_mean);
        out.state = s.next;
    }
    return out;
}

/// Eager single step on plain matrices; `gate` may be null (raw retrieval).
inline Matrix ghn_step(const Matrix& x, const MemoryBank* bank, const Gate* gate,
                       const DynamicsConfig& cfg, const CsrMatrix& lap) {
    Tape tape;
    std::optional<BoundBank> b;
    std::optional<BoundGate> g;
    if (bank) b = bind_constant(tape, *bank);
    if (gate) g = bind_constant(tape, *gate);
    return ghn_step(tape.constant(x), b ? &*b : nullptr, g ? &*g : nullptr, cfg, lap).next.value();
}

struct EagerIterate {
    Matrix state;
    IterationDiagnostics diagnostics;
};

inline EagerIterate iterate(const Matrix& x0, const MemoryBank* bank, const Gate* gate,
                            const DynamicsConfig& cfg, const CsrMatrix& lap) {
    Tape tape;
    std::optional<BoundBank> b;
    std::optional<BoundGate> g;
    if (bank) b = bind_constant(tape, *bank);
    if (gate) g = bind_constant(tape, *gate);
    auto out = iterate(tape.constant(x0), b ? &*b : nullptr, g ? &*g : nullptr, cfg, lap);
    return {out.state.value(), std::move(out.diagnostics)};
}

} // namespace ghn
