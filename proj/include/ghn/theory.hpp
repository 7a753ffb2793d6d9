#pragma once

#include <Eigen/Eigenvalues>

#include <limits>
#include <string>
#include <vector>

#include "dynamics.hpp"

namespace ghn {

/// Slack added to every certificate inequality to absorb roundoff and the
/// finite accuracy of reference points.
inline constexpr double kCertificateHeadroom = 1e-6;

/// Largest singular value via power iteration on MᵀM.
inline double spectral_norm(const Matrix& m, double tol = 1e-13, int max_iter = 200000) {
    if (m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0)
        throw ConfigError("spectral_norm of a zero matrix");
    const auto res = symmetric_power_iteration(
        [&](const Vector& v) -> Vector { return m.transpose() * (m * v); }, m.cols(), tol,
        max_iter);
    if (!res.converged)
        throw NumericError("spectral_norm did not converge in " + std::to_string(max_iter) +
                           " iterations");
    return std::sqrt(res.value);
}

/// Fixed (M, β, λ, L) for the base LSE energy.
struct EnergyInstance {
    Matrix patterns;
    double beta = 1.0;
    double lambda = 0.0;
    CsrMatrix laplacian;

    Index num_nodes() const { return laplacian.rows(); }
    Index dim() const { return patterns.cols(); }

    double energy(const Matrix& x) const {
        return energy_base(x, patterns, beta, lambda, laplacian);
    }
    Matrix gradient(const Matrix& x) const {
        return grad_energy_base(x, patterns, beta, lambda, laplacian);
    }
    Matrix fixed_point(const Matrix& x) const {
        return fixed_point_map(x, patterns, beta, lambda, laplacian);
    }
    void require_theory_regime() const {
        if (lambda < 0.0)
            throw ConfigError("theory checks require lambda >= 0, got " + std::to_string(lambda));
        if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    }
};

enum class Regime { strongly_convex, convex_boundary, nonconvex };

inline std::string to_string(Regime r) {
    switch (r) {
    case Regime::strongly_convex: return "strongly_convex";
    case Regime::convex_boundary: return "convex_boundary";
    case Regime::nonconvex: return "nonconvex";
    }
    return "?";
}

/// Relative tolerance for placing β‖M‖² on the boundary value 2.
inline constexpr double kBoundaryTolerance = 1e-6;

inline Regime classify_regime(double beta_norm_sq) {
    if (std::abs(beta_norm_sq - 2.0) <= 2.0 * kBoundaryTolerance) return Regime::convex_boundary;
    return beta_norm_sq < 2.0 ? Regime::strongly_convex : Regime::nonconvex;
}

struct Certificate {
    std::string name;
    bool passed = false;
    /// Smallest margin by which the checked inequality held (negative on failure).
    double slack = 0.0;
    std::string detail;
    std::vector<std::pair<std::string, double>> constants;
};

struct TheoryReport {
    double spectral_norm_M_sq = 0.0;
    double beta = 0.0;
    double product = 0.0;
    double laplacian_norm = 0.0;
    double lambda = 0.0;
    double L_lip = 0.0;
    double rho = 0.0;
    double mu = 0.0;
    Regime regime = Regime::nonconvex;
    std::vector<Certificate> certificates;

    /// L_lip recomputed from its constituents.
    double lipschitz_from_parts() const {
        return 0.5 * beta * spectral_norm_M_sq + 1.0 + 2.0 * lambda * laplacian_norm;
    }
};

/// Smoothness, contraction and convexity constants for an instance.
inline TheoryReport analyze(const EnergyInstance& inst) {
    TheoryReport r;
    const double s = spectral_norm(inst.patterns);
    r.spectral_norm_M_sq = s * s;
    r.beta = inst.beta;
    r.product = inst.beta * r.spectral_norm_M_sq;
    r.lambda = inst.lambda;
    r.laplacian_norm = symmetric_norm(inst.laplacian).value;
    r.rho = 0.5 * r.product + 2.0 * inst.lambda * r.laplacian_norm;
    r.L_lip = r.rho + 1.0;
    r.mu = 1.0 - 0.5 * r.product;
    r.regime = classify_regime(r.product);
    return r;
}

/// Largest eigenvalue of Σ(p) = diag(p) - ppᵀ.
inline double softmax_covariance_norm(const Vector& p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(softmax_covariance(p),
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Certificates.

/// Gradient descent X ← X - η∇E must satisfy, at every step,
///   E(X_{t+1}) ≤ E(X_t) - η(1 - ηL/2)‖∇E(X_t)‖²,
/// and the Cesàro bound min_t ‖∇E‖² ≤ (E_0 - E_inf)/(cT) with E_inf replaced by
/// the last energy reached (an upper estimate, so the check is no looser).
inline Certificate certify_descent(const EnergyInstance& inst, const Matrix& x0, double eta,
                                   int steps) {
    inst.require_theory_regime();
    const TheoryReport rep = analyze(inst);
    if (!(eta > 0.0 && eta < 2.0 / rep.L_lip))
        throw ConfigError("step size must lie in (0, 2/L_lip) = (0, " +
                          std::to_string(2.0 / rep.L_lip) + "), got " + std::to_string(eta));
    const double c = eta * (1.0 - 0.5 * eta * rep.L_lip);
    Certificate cert{"descent", true, std::numeric_limits<double>::infinity(), "", {}};
    Matrix x = x0;
    double e = inst.energy(x);
    const double e0 = e;
    double min_grad_sq = std::numeric_limits<double>::infinity();
    for (int t = 0; t < steps; ++t) {
        const Matrix g = inst.gradient(x);
        const double gsq = g.squaredNorm();
        min_grad_sq = std::min(min_grad_sq, gsq);
        x -= eta * g;
        const double e_next = inst.energy(x);
        const double slack = (e - c * gsq) - e_next;
        cert.slack = std::min(cert.slack, slack);
        if (slack < -kCertificateHeadroom && cert.passed) {
            cert.passed = false;
            cert.detail = "descent violated at step " + std::to_string(t) +
                          " (slack " + std::to_string(slack) + ")";
        }
        e = e_next;
    }
    const double cesaro = (e0 - e) / (c * steps);
    const double cesaro_slack = cesaro - min_grad_sq;
    if (cesaro_slack < -kCertificateHeadroom && cert.passed) {
        cert.passed = false;
        cert.detail = "gradient-norm bound violated";
    }
    cert.constants = {{"eta", eta},          {"L_lip", rep.L_lip},     {"c", c},
                      {"min_grad_sq", min_grad_sq}, {"cesaro_bound", cesaro},
                      {"final_energy", e}};
    return cert;
}

/// Iterates the damped map (1-α)X + αT(X) until ‖X - T_α(X)‖ ≤ tol.
inline Matrix solve_fixed_point(const EnergyInstance& inst, Matrix x, double alpha,
                                double tol = 1e-13, int max_iter = 100000) {
    for (int it = 0; it < max_iter; ++it) {
        Matrix next = (1.0 - alpha) * x + alpha * inst.fixed_point(x);
        const double diff = (next - x).norm();
        x = std::move(next);
        if (diff <= tol * std::max(1.0, x.norm())) return x;
    }
    throw NumericError("fixed-point iteration did not converge");
}

/// Runs gradient descent with step 1/L_lip until ‖∇E‖_F ≤ tol.
inline Matrix minimize_energy(const EnergyInstance& inst, Matrix x, double eta, double tol = 1e-10,
                              int max_iter = 1000000) {
    for (int it = 0; it < max_iter; ++it) {
        const Matrix g = inst.gradient(x);
        if (g.norm() <= tol) return x;
        x -= eta * g;
    }
    throw NumericError("gradient descent did not reach the requested gradient norm");
}

/// Banach contraction of T_α = (1-α)I + αT whenever ρ < 1: `starts` random
/// initializations reach the same limit, and every step shrinks the distance
/// to the fixed point by at most (1-α) + αρ.
inline Certificate certify_contraction(const EnergyInstance& inst, double alpha = 1.0,
                                       int starts = 10, std::uint64_t seed = 1,
                                       double start_scale = 3.0) {
    inst.require_theory_regime();
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
    const TheoryReport rep = analyze(inst);
    if (!(rep.rho < 1.0))
        throw ConfigError("contraction requires rho < 1, got rho = " + std::to_string(rep.rho));
    const double factor = (1.0 - alpha) + alpha * rep.rho;
    const Matrix star = solve_fixed_point(inst, Matrix::Zero(inst.num_nodes(), inst.dim()), alpha);

    Certificate cert{alpha == 1.0 ? "contraction" : "damped_contraction", true,
                     std::numeric_limits<double>::infinity(), "", {}};
    Rng rng(seed);
    std::vector<Matrix> limits;
    double worst_ratio = 0.0;
    for (int s = 0; s < starts; ++s) {
        Matrix x = random_normal(inst.num_nodes(), inst.dim(), rng, start_scale);
        for (int it = 0; it < 100000; ++it) {
            Matrix next = (1.0 - alpha) * x + alpha * inst.fixed_point(x);
            const double before = (x - star).norm();
            const double after = (next - star).norm();
            // Below this distance the reference point's own error dominates.
            if (before > 1e-9) {
                const double ratio = after / before;
                worst_ratio = std::max(worst_ratio, ratio);
                cert.slack = std::min(cert.slack, factor + kCertificateHeadroom - ratio);
            }
            const double step = (next - x).norm();
            x = std::move(next);
            if (step <= 1e-14 * std::max(1.0, x.norm())) break;
        }
        limits.push_back(std::move(x));
    }
    double spread = 0.0;
    for (std::size_t i = 0; i < limits.size(); ++i)
        for (std::size_t j = i + 1; j < limits.size(); ++j)
            spread = std::max(spread, (limits[i] - limits[j]).norm());
    if (cert.slack < 0.0) {
        cert.passed = false;
        cert.detail = "step ratio " + std::to_string(worst_ratio) + " exceeds factor " +
                      std::to_string(factor);
    }
    if (spread > kCertificateHeadroom) {
        cert.passed = false;
        cert.detail += (cert.detail.empty() ? "" : "; ") + std::string("limits differ by ") +
                       std::to_string(spread);
    }
    cert.constants = {{"alpha", alpha},           {"rho", rep.rho},
                      {"factor", factor},         {"worst_ratio", worst_ratio},
                      {"limit_spread", spread},   {"residual", (star - inst.fixed_point(star)).norm()}};
    return cert;
}

/// Linear rates in the strongly convex regime (β‖M‖² < 2, η ≤ 1/L_lip):
///   ‖X_t - X*‖ ≤ (1-ημ)^t ‖X_0 - X*‖,  E(X_t) - E* ≤ (1-ημ)^t (E(X_0) - E*).
inline Certificate certify_strong_convexity(const EnergyInstance& inst, const Matrix& x0,
                                            double eta, int steps) {
    inst.require_theory_regime();
    const TheoryReport rep = analyze(inst);
    if (!(rep.product < 2.0))
        throw ConfigError("strong convexity requires beta*||M||^2 < 2, got " +
                          std::to_string(rep.product));
    if (!(eta > 0.0 && eta <= 1.0 / rep.L_lip))
        throw ConfigError("step size must lie in (0, 1/L_lip]");
    const Matrix star = minimize_energy(inst, x0, 1.0 / rep.L_lip);
    const double e_star = inst.energy(star);
    const double rate = 1.0 - eta * rep.mu;
    const double d0 = (x0 - star).norm();
    const double gap0 = inst.energy(x0) - e_star;

    Certificate cert{"strong_convexity", true, std::numeric_limits<double>::infinity(), "", {}};
    Matrix x = x0;
    double envelope = 1.0;
    for (int t = 0; t <= steps; ++t) {
        const double dist_slack = envelope * d0 + kCertificateHeadroom - (x - star).norm();
        const double gap_slack = envelope * gap0 + kCertificateHeadroom - (inst.energy(x) - e_star);
        const double slack = std::min(dist_slack, gap_slack);
        cert.slack = std::min(cert.slack, slack);
        if (slack < 0.0 && cert.passed) {
            cert.passed = false;
            cert.detail = (dist_slack < 0.0 ? "iterate" : "value") +
                          std::string(" envelope violated at step ") + std::to_string(t);
        }
        x -= eta * inst.gradient(x);
        envelope *= rate;
    }
    cert.constants = {{"mu", rep.mu}, {"eta", eta}, {"rate", rate}, {"initial_distance", d0},
                      {"initial_gap", gap0}};
    return cert;
}

struct CoercivityBound {
    double bound = 0.0;
    double energy = 0.0;
    bool holds = false;
};

/// ½‖X‖² - ‖M‖√N‖X‖ - N ln(K)/β, a lower bound on E_base.
inline CoercivityBound coercivity_lower_bound(const EnergyInstance& inst, const Matrix& x) {
    inst.require_theory_regime();
    const double n = static_cast<double>(inst.num_nodes());
    const double k = static_cast<double>(inst.patterns.rows());
    const double xn = x.norm();
    CoercivityBound b;
    b.bound = 0.5 * xn * xn - spectral_norm(inst.patterns) * std::sqrt(n) * xn -
              n * std::log(k) / inst.beta;
    b.energy = inst.energy(x);
    b.holds = b.energy >= b.bound - 1e-12 * std::max(1.0, std::abs(b.bound));
    return b;
}

/// Hessian-vector product of E_base:
///   (∇²E · V)_v = V_v - β Mᵀ Σ(p_v) M V_v + 2λ (L V)_v.
inline Matrix hessian_vector_product(const EnergyInstance& inst, const Matrix& x, const Matrix& v) {
    const Matrix& m = inst.patterns;
    const Matrix p = softmax_rows(inst.beta * x * m.transpose());
    const Matrix mv = v * m.transpose();  // N×K: row v is M v_v
    Matrix sigma_mv = p.cwiseProduct(mv);
    const Vector pm = sigma_mv.rowwise().sum();
    sigma_mv -= Matrix(p.array().colwise() * pm.array());
    return v - inst.beta * sigma_mv * m + 2.0 * inst.lambda * inst.laplacian.multiply(v);
}

enum class CriticalPointKind { strict_local_min, strict_saddle, inconclusive };

inline std::string to_string(CriticalPointKind k) {
    switch (k) {
    case CriticalPointKind::strict_local_min: return "strict_local_min";
    case CriticalPointKind::strict_saddle: return "strict_saddle";
    case CriticalPointKind::inconclusive: return "inconclusive";
    }
    return "?";
}

struct CriticalPointReport {
    CriticalPointKind kind = CriticalPointKind::inconclusive;
    double min_eigenvalue = 0.0;
    bool converged = false;
};

/// Smallest Hessian eigenvalue by shifted power iteration on c·I - ∇²E, with
/// c = 2 + 2λ‖L‖ above the largest eigenvalue (∇²E ≼ (1 + 2λ‖L‖) I).
inline double hessian_min_eigenvalue(const EnergyInstance& inst, const Matrix& x,
                                     bool* converged = nullptr, double tol = 1e-12,
                                     int max_iter = 200000) {
    const Index n = inst.num_nodes(), d = inst.dim();
    const double shift = 2.0 + 2.0 * inst.lambda * symmetric_norm(inst.laplacian).value;
    const auto res = symmetric_power_iteration(
        [&](const Vector& flat) -> Vector {
            Matrix v = Eigen::Map<const Matrix>(flat.data(), n, d);
            Matrix hv = shift * v - hessian_vector_product(inst, x, v);
            return Eigen::Map<Vector>(hv.data(), hv.size());
        },
        n * d, tol, max_iter);
    if (converged) *converged = res.converged;
    return shift - res.value;
}

/// Second-order classification of a critical point.
inline CriticalPointReport classify_critical_point(const EnergyInstance& inst, const Matrix& x,
                                                   double eig_tol = 1e-8) {
    inst.require_theory_regime();
    const double gnorm = inst.gradient(x).norm();
    if (gnorm > 1e-8)
        throw ConfigError("not a critical point: gradient norm " + std::to_string(gnorm));
    CriticalPointReport r;
    r.min_eigenvalue = hessian_min_eigenvalue(inst, x, &r.converged);
    if (!r.converged) return r;
    if (r.min_eigenvalue > eig_tol) r.kind = CriticalPointKind::strict_local_min;
    else if (r.min_eigenvalue < -eig_tol) r.kind = CriticalPointKind::strict_saddle;
    return r;
}

// ---------------------------------------------------------------------------
// Instance generators for the verification suite.

/// Erdős–Rényi graph with a ring added so every node has degree ≥ 1.
inline Graph random_graph(Index n, double edge_prob, Rng& rng) {
    std::bernoulli_distribution coin(edge_prob);
    std::vector<std::pair<Index, Index>> raw;
    for (Index u = 0; u < n; ++u) {
        if (n > 1) raw.emplace_back(u, (u + 1) % n);
        for (Index v = u + 1; v < n; ++v)
            if (coin(rng)) raw.emplace_back(u, v);
    }
    Graph g;
    g.num_nodes = n;
    g.edges = symmetrize_edges(std::move(raw));
    g.features = Matrix::Zero(n, 1);
    g.labels.assign(n, -1);
    g.split.assign(n, Split::none);
    return g;
}

/// Random instance; when target_product > 0 the patterns are rescaled so that
/// β‖M‖²_σ equals it.
inline EnergyInstance random_instance(Rng& rng, Index n, Index d, Index k, double beta,
                                      double lambda, double target_product = 0.0,
                                      bool self_loops = true) {
    EnergyInstance inst;
    inst.patterns = random_normal(k, d, rng);
    inst.beta = beta;
    inst.lambda = lambda;
    inst.laplacian = normalized_laplacian(random_graph(n, 0.3, rng), self_loops);
    if (target_product > 0.0) {
        const double s = spectral_norm(inst.patterns);
        inst.patterns *= std::sqrt(target_product / beta) / s;
    }
    return inst;
}

/// max over sampled simplex points of ‖Σ(p)‖; Dirichlet(1) samples with K in [2, max_k].
struct CovarianceSample {
    double max_norm = 0.0;
    int samples = 0;
};

inline CovarianceSample sample_covariance_norms(int samples, Rng& rng, int max_k = 6) {
    std::uniform_int_distribution<int> kdist(2, max_k);
    std::exponential_distribution<double> ex(1.0);
    CovarianceSample out;
    for (int s = 0; s < samples; ++s) {
        Vector p(kdist(rng));
        for (Index i = 0; i < p.size(); ++i) p(i) = ex(rng);
        p /= p.sum();
        out.max_norm = std::max(out.max_norm, softmax_covariance_norm(p));
        ++out.samples;
    }
    return out;
}

/// sup over random pairs of ‖S(x) - S(y)‖ / ‖x - y‖ for the row retrieval map.
inline double retrieval_lipschitz_estimate(const Matrix& m, double beta, int pairs, Rng& rng,
                                           double spread = 1.0) {
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const Matrix x = random_normal(1, m.cols(), rng, spread);
        const Matrix y = x + random_normal(1, m.cols(), rng, spread * 0.1);
        const double num = (retrieval_map(x, m, beta) - retrieval_map(y, m, beta)).norm();
        worst = std::max(worst, num / (x - y).norm());
    }
    return worst;
}

} // namespace ghn
