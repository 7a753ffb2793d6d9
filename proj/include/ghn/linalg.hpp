#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "errors.hpp"

namespace ghn {

using Index = Eigen::Index;
// Row-major so that node rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Rng = std::mt19937_64;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError("shape mismatch: " + what);
}

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline Matrix random_normal(Index rows, Index cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * dist(rng);
    return m;
}

inline Matrix random_uniform(Index rows, Index cols, Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

/// Numerically stable row-wise softmax.
inline Matrix softmax_rows(const Matrix& z) {
    Matrix p(z.rows(), z.cols());
    for (Index r = 0; r < z.rows(); ++r) {
        const double mx = z.row(r).maxCoeff();
        double s = 0.0;
        for (Index c = 0; c < z.cols(); ++c) {
            p(r, c) = std::exp(z(r, c) - mx);
            s += p(r, c);
        }
        p.row(r) /= s;
    }
    return p;
}

/// log(sum(exp(row))) per row, as a column vector.
inline Vector logsumexp_rows(const Matrix& z) {
    if (z.cols() == 0) throw ShapeError("logsumexp over empty axis");
    Vector out(z.rows());
    for (Index r = 0; r < z.rows(); ++r) {
        const double mx = z.row(r).maxCoeff();
        double s = 0.0;
        for (Index c = 0; c < z.cols(); ++c) s += std::exp(z(r, c) - mx);
        out(r) = mx + std::log(s);
    }
    return out;
}

/// Σ(p) = diag(p) - p pᵀ, the covariance of a one-hot categorical variable.
inline Eigen::MatrixXd softmax_covariance(const Vector& p) {
    Eigen::MatrixXd s = -p * p.transpose();
    s.diagonal() += p;
    return s;
}

} // namespace ghn
