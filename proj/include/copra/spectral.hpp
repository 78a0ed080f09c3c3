#pragma once

// SVD computation and the significant/trivial singular-value split driven by
// the threshold c * mean(sigma_i^2), c in (0,1).

#include <cmath>

#include "copra/errors.hpp"
#include "copra/types.hpp"

namespace copra::spectral {

struct SvdFactors {
    Matrix u;      // m x n, orthonormal columns
    Vector sigma;  // length n, descending
    Matrix v;      // n x n, orthogonal

    Index rows() const { return u.rows(); }
    Index cols() const { return v.rows(); }
};

struct SpectralPartition {
    Index n1 = 0;            // significant count
    Index n2 = 0;            // trivial count, n2 = n - n1
    double threshold = 0.0;  // on sigma^2
    double c = 0.0;
    double beta = 0.0;       // n / n1
};

/// Thin SVD of a dense m x n matrix, m >= n.
inline SvdFactors compute_svd(const Matrix& a) {
    if (a.rows() < a.cols())
        throw InvalidDimension("compute_svd requires m >= n");
    if (!a.allFinite()) throw InvalidMatrix("matrix has non-finite entries");
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw FactorizationFailed("SVD did not converge");
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Split at threshold = c * mean(sigma^2); ties (sigma^2 == threshold) count
/// as significant so that n1 >= 1 always holds.
inline SpectralPartition partition(const SvdFactors& svd, double c) {
    if (!(c > 0.0 && c < 1.0))
        throw InvalidThresholdConstant("partition constant c must lie in (0,1)");
    const Index n = svd.sigma.size();
    const double mean_sq = svd.sigma.squaredNorm() / static_cast<double>(n);
    const double threshold = c * mean_sq;
    Index n1 = 0;
    for (Index i = 0; i < n; ++i)
        if (svd.sigma[i] * svd.sigma[i] >= threshold) ++n1;
    if (n1 < 1) n1 = 1;
    return {n1, n - n1, threshold, c,
            static_cast<double>(n) / static_cast<double>(n1)};
}

}  // namespace copra::spectral
