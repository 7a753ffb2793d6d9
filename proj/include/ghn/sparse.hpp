#pragma once

#include <cstdint>
#include <vector>

#include "linalg.hpp"

namespace ghn {

/// Row-compressed real matrix. Column indices are strictly increasing within a row.
class CsrMatrix {
public:
    CsrMatrix() = default;

    CsrMatrix(Index rows, Index cols, std::vector<Index> offsets, std::vector<Index> indices,
              std::vector<double> values)
        : rows_(rows), cols_(cols), offsets_(std::move(offsets)), indices_(std::move(indices)),
          values_(std::move(values)) {
        require_shape(offsets_.size() == static_cast<std::size_t>(rows_) + 1, "csr offsets");
        require_shape(indices_.size() == values_.size(), "csr indices/values");
        for (Index r = 0; r < rows_; ++r) {
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                require_shape(indices_[k] >= 0 && indices_[k] < cols_, "csr column index");
                require_shape(k == offsets_[r] || indices_[k - 1] < indices_[k],
                              "csr columns must be strictly increasing");
            }
        }
    }

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }
    const std::vector<Index>& offsets() const noexcept { return offsets_; }
    const std::vector<Index>& indices() const noexcept { return indices_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// this · x for dense x with matching row count.
    Matrix multiply(const Matrix& x) const {
        require_shape(x.rows() == cols_, "csr multiply " + std::to_string(rows_) + "x" +
                                             std::to_string(cols_) + " by " + shape_str(x));
        Matrix out = Matrix::Zero(rows_, x.cols());
        for (Index r = 0; r < rows_; ++r)
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k)
                out.row(r).noalias() += values_[k] * x.row(indices_[k]);
        return out;
    }

    /// thisᵀ · x.
    Matrix multiply_transposed(const Matrix& x) const {
        require_shape(x.rows() == rows_, "csr transposed multiply");
        Matrix out = Matrix::Zero(cols_, x.cols());
        for (Index r = 0; r < rows_; ++r)
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k)
                out.row(indices_[k]).noalias() += values_[k] * x.row(r);
        return out;
    }

    Matrix to_dense() const {
        Matrix d = Matrix::Zero(rows_, cols_);
        for (Index r = 0; r < rows_; ++r)
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) d(r, indices_[k]) = values_[k];
        return d;
    }

    /// max |A - Aᵀ| over all entries; 0 for an exactly symmetric matrix.
    double asymmetry() const {
        if (rows_ != cols_) return std::numeric_limits<double>::infinity();
        double worst = 0.0;
        for (Index r = 0; r < rows_; ++r)
            for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k)
                worst = std::max(worst, std::abs(values_[k] - at(indices_[k], r)));
        return worst;
    }

    double at(Index r, Index c) const {
        const auto first = indices_.begin() + offsets_[r];
        const auto last = indices_.begin() + offsets_[r + 1];
        const auto it = std::lower_bound(first, last, c);
        return (it != last && *it == c) ? values_[it - indices_.begin()] : 0.0;
    }

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Index> offsets_{0};
    std::vector<Index> indices_;
    std::vector<double> values_;
};

struct PowerIterationResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest-magnitude eigenvalue estimate of a symmetric operator given as a
/// matrix-free product. Stops when the Rayleigh quotient changes by < tol (relative).
template <class Apply>
PowerIterationResult symmetric_power_iteration(Apply&& apply, Index n, double tol, int max_iter,
                                               std::uint64_t seed = 0x5eedULL) {
    Rng rng(seed);
    Vector v = random_normal(n, 1, rng);
    PowerIterationResult res;
    if (n == 0) {
        res.converged = true;
        return res;
    }
    v.normalize();
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = apply(v);
        const double rq = v.dot(w);
        const double nrm = w.norm();
        res.iterations = it;
        res.value = std::abs(rq);
        if (nrm == 0.0) {
            res.value = 0.0;
            res.converged = true;
            return res;
        }
        if (it > 1 && std::abs(rq - prev) <= tol * std::max(1.0, std::abs(rq))) {
            res.converged = true;
            return res;
        }
        prev = rq;
        v = w / nrm;
    }
    return res;
}

/// Spectral norm of a symmetric sparse matrix (largest |eigenvalue|).
inline PowerIterationResult symmetric_norm(const CsrMatrix& a, double tol = 1e-12,
                                           int max_iter = 20000) {
    require_shape(a.rows() == a.cols(), "symmetric_norm of non-square matrix");
    return symmetric_power_iteration(
        [&](const Vector& v) -> Vector {
            Matrix m = a.multiply(Matrix(v));
            return Eigen::Map<Vector>(m.data(), m.size());
        },
        a.rows(), tol, max_iter);
}

} // namespace ghn
