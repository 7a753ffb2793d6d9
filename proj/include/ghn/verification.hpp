#pragma once

#include <functional>

#include "theory.hpp"

namespace ghn {

/// Size of the randomized verification suite. The defaults finish in a few
/// seconds on one core.
struct VerifyOptions {
    std::uint64_t seed = 0;
    int gradient_instances = 50;
    int laplacian_graphs = 100;
    int covariance_samples = 10000;
    int descent_instances = 100;
    int descent_steps = 50;
    int contraction_instances = 20;
    int convexity_instances = 10;
    int convexity_steps = 100;
    int hessian_instances = 10;
    int lipschitz_pairs = 2000;
};

namespace detail {
    inline Certificate make_cert(std::string name) {
        return {std::move(name), true, std::numeric_limits<double>::infinity(), "", {}};
    }

    /// Records one measured margin; the first negative margin sets the detail.
    inline void note(Certificate& c, double slack, const std::string& where) {
        c.slack = std::min(c.slack, slack);
        if (slack < 0.0 && c.passed) {
            c.passed = false;
            c.detail = where + " (slack " + format_double(slack) + ")";
        }
    }

    inline Index uniform_index(Rng& rng, Index lo, Index hi) {
        return std::uniform_int_distribution<Index>(lo, hi)(rng);
    }
}

/// Central-difference check of the analytic energy gradient.
inline Certificate verify_gradient(int instances, Rng& rng, double tol = 1e-6) {
    Certificate c = detail::make_cert("gradient_finite_difference");
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const Index n = detail::uniform_index(rng, 2, 10), d = detail::uniform_index(rng, 1, 8),
                    k = detail::uniform_index(rng, 1, 6);
        std::uniform_real_distribution<double> beta(0.2, 2.0), lambda(0.0, 1.0);
        const EnergyInstance inst = random_instance(rng, n, d, k, beta(rng), lambda(rng));
        Matrix x = random_normal(n, d, rng);
        const Matrix g = inst.gradient(x);
        Matrix fd(n, d);
        const double h = 1e-5;
        for (Index j = 0; j < x.size(); ++j) {
            const double orig = x.data()[j];
            x.data()[j] = orig + h;
            const double ep = inst.energy(x);
            x.data()[j] = orig - h;
            const double em = inst.energy(x);
            x.data()[j] = orig;
            fd.data()[j] = (ep - em) / (2 * h);
        }
        const double err = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff());
        worst = std::max(worst, err);
        detail::note(c, tol - err, "instance " + std::to_string(i));
    }
    c.constants = {{"max_relative_error", worst}, {"tolerance", tol}};
    return c;
}

/// tr(XᵀLX) against the edge-wise sum, and ‖L‖ ≤ 2.
inline Certificate verify_laplacian(int graphs, Rng& rng) {
    Certificate c = detail::make_cert("laplacian_identity");
    double worst_rel = 0.0, worst_norm = 0.0;
    for (int i = 0; i < graphs; ++i) {
        const Index n = detail::uniform_index(rng, 2, 50);
        std::uniform_real_distribution<double> prob(0.02, 0.5);
        const Graph g = random_graph(n, prob(rng), rng);
        const bool loops = i % 2 == 0;
        const CsrMatrix lap = normalized_laplacian(g, loops);
        const Matrix x = random_normal(n, detail::uniform_index(rng, 1, 4), rng);
        const auto deg = g.degrees();
        const double s = loops ? 1.0 : 0.0;
        double pairwise = 0.0;
        for (auto [u, v] : g.edges)
            pairwise += (x.row(u) / std::sqrt(deg[u] + s) - x.row(v) / std::sqrt(deg[v] + s))
                            .squaredNorm();
        const double quad = laplacian_quadratic(lap, x);
        const double rel = std::abs(quad - pairwise) / std::max(1e-300, std::abs(pairwise));
        worst_rel = std::max(worst_rel, rel);
        detail::note(c, 1e-10 - rel, "graph " + std::to_string(i) + " trace identity");
        const double norm = symmetric_norm(lap).value;
        worst_norm = std::max(worst_norm, norm);
        detail::note(c, 2.0 + 1e-8 - norm, "graph " + std::to_string(i) + " norm");
    }
    c.constants = {{"max_relative_error", worst_rel}, {"max_laplacian_norm", worst_norm}};
    return c;
}

/// ‖Σ(p)‖ ≤ ½ over random simplex points, with the bound nearly attained.
inline Certificate verify_covariance(int samples, Rng& rng) {
    Certificate c = detail::make_cert("softmax_covariance_bound");
    const CovarianceSample s = sample_covariance_norms(samples, rng);
    detail::note(c, 0.5 + 1e-12 - s.max_norm, "upper bound");
    detail::note(c, s.max_norm - 0.499, "tightness");
    c.constants = {{"max_norm", s.max_norm}, {"samples", static_cast<double>(s.samples)}};
    return c;
}

/// Runs `make` over several instances and folds the certificates into one.
inline Certificate fold_certificates(const std::string& name, int count,
                                     const std::function<Certificate(int)>& make) {
    Certificate c = detail::make_cert(name);
    for (int i = 0; i < count; ++i) {
        const Certificate one = make(i);
        c.slack = std::min(c.slack, one.slack);
        if (!one.passed && c.passed) {
            c.passed = false;
            c.detail = "instance " + std::to_string(i) + ": " + one.detail;
        }
    }
    c.constants = {{"instances", static_cast<double>(count)}};
    return c;
}

/// Instance whose undamped map contracts: (β/2)‖M‖² + 2λ‖L‖ < 1.
inline EnergyInstance contractive_instance(Rng& rng) {
    const Index n = detail::uniform_index(rng, 3, 12), d = detail::uniform_index(rng, 2, 6),
                k = detail::uniform_index(rng, 1, 5);
    std::uniform_real_distribution<double> product(0.1, 0.8), lambda(0.0, 0.05);
    const double beta = 0.5;
    return random_instance(rng, n, d, k, beta, lambda(rng), product(rng));
}

/// Smallest Hessian eigenvalue at random points ≥ μ + 2λ λ_min(L).
inline Certificate verify_hessian_bound(int instances, Rng& rng) {
    Certificate c = detail::make_cert("hessian_lower_bound");
    for (int i = 0; i < instances; ++i) {
        std::uniform_real_distribution<double> product(0.2, 1.8), lambda(0.0, 0.5);
        const EnergyInstance inst = random_instance(rng, detail::uniform_index(rng, 2, 8),
                                                    detail::uniform_index(rng, 1, 4),
                                                    detail::uniform_index(rng, 2, 5), 1.0,
                                                    lambda(rng), product(rng));
        const TheoryReport rep = analyze(inst);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inst.laplacian.to_dense(),
                                                          Eigen::EigenvaluesOnly);
        const double bound = rep.mu + 2.0 * inst.lambda * es.eigenvalues().minCoeff();
        const Matrix x = random_normal(inst.num_nodes(), inst.dim(), rng);
        const double eig = hessian_min_eigenvalue(inst, x);
        detail::note(c, eig - bound + 1e-8, "instance " + std::to_string(i));
    }
    return c;
}

/// Empirical Lipschitz constant of the retrieval map ≤ (β/2)‖M‖².
inline Certificate verify_retrieval_lipschitz(int pairs, Rng& rng) {
    Certificate c = detail::make_cert("retrieval_lipschitz");
    double worst_ratio = 0.0;
    for (double product : {0.5, 2.0, 8.0}) {
        Matrix m = random_normal(5, 4, rng);
        m *= std::sqrt(product) / spectral_norm(m);
        const double bound = 0.5 * product;
        for (double spread : {0.1, 1.0}) {
            const double est = retrieval_lipschitz_estimate(m, 1.0, pairs, rng, spread);
            worst_ratio = std::max(worst_ratio, est / bound);
            detail::note(c, bound + 1e-8 - est, "beta*||M||^2=" + detail::format_double(product));
        }
    }
    c.constants = {{"max_estimate_over_bound", worst_ratio}};
    return c;
}

/// L_lip and ρ agree with their constituents.
inline Certificate verify_report_identities(Rng& rng) {
    Certificate c = detail::make_cert("report_identities");
    for (int i = 0; i < 10; ++i) {
        std::uniform_real_distribution<double> beta(0.1, 3.0), lambda(0.0, 1.0);
        const TheoryReport r = analyze(random_instance(rng, 6, 3, 4, beta(rng), lambda(rng)));
        detail::note(c, 1e-12 - std::abs(r.L_lip - r.lipschitz_from_parts()), "L_lip");
        detail::note(c, 1e-12 - std::abs(r.rho + 1.0 - r.L_lip), "rho");
    }
    return c;
}

/// Coercivity at the origin (tight) and far out.
inline Certificate verify_coercivity(Rng& rng) {
    Certificate c = detail::make_cert("coercivity");
    for (int i = 0; i < 10; ++i) {
        const EnergyInstance inst = random_instance(rng, 5, 3, detail::uniform_index(rng, 1, 6),
                                                    1.0, 0.3);
        for (double scale : {0.0, 1.0, 1e3}) {
            Matrix x = random_normal(inst.num_nodes(), inst.dim(), rng);
            if (scale == 0.0) x.setZero();
            else x *= scale / x.norm();
            const CoercivityBound b = coercivity_lower_bound(inst, x);
            detail::note(c, b.energy - b.bound + 1e-9 * std::max(1.0, std::abs(b.bound)),
                         "scale " + detail::format_double(scale));
        }
    }
    return c;
}

/// Two antipodal patterns with β‖m‖² > 2 make the origin a strict saddle; a
/// strongly convex instance has only a strict minimum.
inline Certificate verify_critical_points(Rng& rng) {
    Certificate c = detail::make_cert("critical_points");
    EnergyInstance sym;
    sym.patterns = Matrix(2, 2);
    sym.patterns << 2.0, 0.0, -2.0, 0.0;
    sym.beta = 1.0;
    sym.lambda = 0.0;
    sym.laplacian = normalized_laplacian(random_graph(1, 0.0, rng), true);
    const CriticalPointReport saddle = classify_critical_point(sym, Matrix::Zero(1, 2));
    // Oracle: along m the curvature is 1 - β‖m‖² = -3.
    detail::note(c, saddle.kind == CriticalPointKind::strict_saddle ? 0.0 : -1.0, "saddle kind");
    detail::note(c, 1e-6 - std::abs(saddle.min_eigenvalue + 3.0), "saddle curvature");

    const EnergyInstance convex = random_instance(rng, 4, 3, 3, 1.0, 0.2, 1.0);
    const Matrix star = minimize_energy(convex, Matrix::Zero(4, 3), 1.0 / analyze(convex).L_lip,
                                        1e-10);
    const CriticalPointReport min = classify_critical_point(convex, star);
    detail::note(c, min.kind == CriticalPointKind::strict_local_min ? 0.0 : -1.0, "minimum kind");
    c.constants = {{"saddle_eigenvalue", saddle.min_eigenvalue},
                   {"minimum_eigenvalue", min.min_eigenvalue}};
    return c;
}

/// The whole suite, deterministic in `opt.seed`.
inline std::vector<Certificate> verify_theory(const VerifyOptions& opt = {}) {
    Rng rng(opt.seed);
    std::vector<Certificate> out;
    out.push_back(verify_gradient(opt.gradient_instances, rng));
    out.push_back(verify_laplacian(opt.laplacian_graphs, rng));
    out.push_back(verify_covariance(opt.covariance_samples, rng));
    out.push_back(fold_certificates("descent", opt.descent_instances, [&](int) {
        std::uniform_real_distribution<double> beta(0.2, 4.0), lambda(0.0, 1.0);
        const EnergyInstance inst = random_instance(rng, detail::uniform_index(rng, 2, 12),
                                                    detail::uniform_index(rng, 1, 6),
                                                    detail::uniform_index(rng, 1, 6), beta(rng),
                                                    lambda(rng));
        const Matrix x0 = random_normal(inst.num_nodes(), inst.dim(), rng, 2.0);
        return certify_descent(inst, x0, 1.0 / analyze(inst).L_lip, opt.descent_steps);
    }));
    out.push_back(fold_certificates("contraction", opt.contraction_instances, [&](int i) {
        return certify_contraction(contractive_instance(rng), 1.0, 10, opt.seed + i);
    }));
    for (double alpha : {0.3, 0.7})
        out.push_back(fold_certificates(
            "damped_contraction_alpha_" + detail::format_double(alpha), opt.contraction_instances,
            [&](int i) { return certify_contraction(contractive_instance(rng), alpha, 10, opt.seed + i); }));
    out.push_back(fold_certificates("strong_convexity", opt.convexity_instances, [&](int) {
        const EnergyInstance inst = random_instance(rng, detail::uniform_index(rng, 3, 10),
                                                    detail::uniform_index(rng, 2, 5),
                                                    detail::uniform_index(rng, 2, 5), 1.0, 0.3, 1.0);
        const Matrix x0 = random_normal(inst.num_nodes(), inst.dim(), rng, 2.0);
        return certify_strong_convexity(inst, x0, 1.0 / analyze(inst).L_lip, opt.convexity_steps);
    }));
    out.push_back(verify_coercivity(rng));
    out.push_back(verify_hessian_bound(opt.hessian_instances, rng));
    out.push_back(verify_retrieval_lipschitz(opt.lipschitz_pairs, rng));
    out.push_back(verify_report_identities(rng));
    out.push_back(verify_critical_points(rng));
    return out;
}

} // namespace ghn
