#pragma once

// Oracle and verification computations: the exact MSE curve of the spectral
// Tikhonov estimator, the rank-one worst-case perturbation, the two
// perturbation-bound expressions whose agreement the harness measures, and
// the error-bound report (mu_x, mu_a, lower bound on the minimal regularizer).
// Oracles take the true covariance / noise variance explicitly; nothing here
// feeds the selector path.

#include <cmath>
#include <optional>
#include <variant>

#include "copra/errors.hpp"
#include "copra/spectral.hpp"
#include "copra/types.hpp"

namespace copra::diagnostics {

struct MseCurve {
    Vector gammas;
    Vector mse;
    double minimizer = 0.0;
};

namespace detail {

/// diag(V^T R V) for the spectral MSE sums.
inline Vector vt_r_v_diag(const Matrix& v, const Matrix& r) {
    const Matrix rv = r * v;
    Vector d(v.cols());
    for (Index i = 0; i < v.cols(); ++i) d[i] = v.col(i).dot(rv.col(i));
    return d;
}

inline double mse_value(double rho, const Vector& sigma, const Vector& w,
                        double sigma_z2) {
    long double acc = 0.0L;
    const long double r = rho;
    for (Index i = 0; i < sigma.size(); ++i) {
        const long double s2 = static_cast<long double>(sigma[i]) * sigma[i];
        const long double d = s2 + r;
        acc += (sigma_z2 * s2 + r * r * static_cast<long double>(w[i])) / (d * d);
    }
    return static_cast<double>(acc);
}

inline double mse_derivative(double rho, const Vector& sigma, const Vector& w,
                             double sigma_z2) {
    long double acc = 0.0L;
    const long double r = rho;
    for (Index i = 0; i < sigma.size(); ++i) {
        const long double s2 = static_cast<long double>(sigma[i]) * sigma[i];
        const long double d = s2 + r;
        acc += (-2.0L * sigma_z2 * s2 + 2.0L * r * s2 * static_cast<long double>(w[i])) /
               (d * d * d);
    }
    return static_cast<double>(acc);
}

}  // namespace detail

/// Exact MSE(rho) = sigma_z^2 Tr(S^2 (S^2+rho)^-2) + rho^2 Tr((S^2+rho)^-2
/// V^T R V) on the grid; the minimizer is polished by bisection on the
/// analytic derivative inside the bracketing cells.
inline MseCurve mse_oracle(const spectral::SvdFactors& svd, const Matrix& r_x0,
                           double sigma_z2, const Vector& gammas) {
    const Vector w = detail::vt_r_v_diag(svd.v, r_x0);
    MseCurve out;
    out.gammas = gammas;
    out.mse.resize(gammas.size());
    Index best = 0;
    for (Index k = 0; k < gammas.size(); ++k) {
        out.mse[k] = detail::mse_value(gammas[k], svd.sigma, w, sigma_z2);
        if (out.mse[k] < out.mse[best]) best = k;
    }
    // bracket the argmin by its value-order neighbours, then bisect the
    // analytic derivative (the curve is convex in rho)
    double left = 0.0, right = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < gammas.size(); ++k) {
        if (gammas[k] < gammas[best] && gammas[k] > left) left = gammas[k];
        if (gammas[k] > gammas[best] && gammas[k] < right) right = gammas[k];
    }
    out.minimizer = gammas[best];
    if (left > 0.0 && std::isfinite(right)) {
        double a = left, c = right;
        if (detail::mse_derivative(a, svd.sigma, w, sigma_z2) < 0.0 &&
            detail::mse_derivative(c, svd.sigma, w, sigma_z2) > 0.0) {
            for (int it = 0; it < 200 && (c - a) > 1e-15 * c; ++it) {
                const double mid = std::sqrt(a * c);
                if (detail::mse_derivative(mid, svd.sigma, w, sigma_z2) < 0.0) a = mid;
                else c = mid;
            }
            out.minimizer = std::sqrt(a * c);
        }
    }
    return out;
}

/// rho_o ~= sigma_z^2 / (Tr(R)/n).
inline double suboptimal_rho(const Matrix& r_x0, double sigma_z2) {
    const double tr = r_x0.trace();
    if (!(tr > 0.0)) throw DegenerateCovariance("Tr(R) must be positive");
    return sigma_z2 * static_cast<double>(r_x0.rows()) / tr;
}

/// Rank-one worst-case perturbation dA = (A x - y) x^T delta /
/// (||y - A x|| ||x||); attains ||dA||_2 = delta and
/// ||y - (A+dA) x|| = ||y - A x|| + delta ||x||.
inline Matrix worst_case_perturbation(const Matrix& a, const Vector& x,
                                      const Vector& y, double delta) {
    if (delta < 0.0) throw OutOfDomain("delta must be >= 0");
    const double xnorm = x.norm();
    if (xnorm == 0.0) throw Undefined("x = 0");
    const Vector resid = a * x - y;
    const double rnorm = resid.norm();
    if (rnorm == 0.0) throw Undefined("zero residual");
    return (delta / (rnorm * xnorm)) * resid * x.transpose();
}

/// Perturbation bound with the true parameters:
/// delta^2 = [sz2 Tr(S1^2 D^-2) + Tr(S1^2 D^-2 S1^2 W)] /
///           [sz2 Tr(D^-2) + n2 sz2 / rho^2 + Tr(D^-2 S1^2 W)],
/// D = S1^2 + rho I over the significant block, W = V_n1^T R V_n1.
inline double delta_bound_exact(double rho, const spectral::SvdFactors& svd,
                                const spectral::SpectralPartition& part,
                                const Matrix& r_x0, double sigma_z2) {
    if (!(rho > 0.0)) throw OutOfDomain("delta_bound_exact requires rho > 0");
    const Vector w = detail::vt_r_v_diag(svd.v, r_x0);
    long double num = 0.0L, den = 0.0L;
    for (Index i = 0; i < part.n1; ++i) {
        const long double s2 = static_cast<long double>(svd.sigma[i]) * svd.sigma[i];
        const long double d = s2 + rho;
        const long double d2 = d * d;
        num += (sigma_z2 * s2 + s2 * s2 * static_cast<long double>(w[i])) / d2;
        den += (sigma_z2 + s2 * static_cast<long double>(w[i])) / d2;
    }
    den += static_cast<long double>(part.n2) * sigma_z2 /
           (static_cast<long double>(rho) * rho);
    return std::sqrt(static_cast<double>(num / den));
}

/// Parameter-free counterpart:
/// delta^2 = Tr(S1^2 D^-2 (beta S1^2 + rho)) /
///           [Tr(D^-2 (beta S1^2 + rho)) + n2/rho].
inline double delta_bound_approx(double rho, const spectral::SvdFactors& svd,
                                 const spectral::SpectralPartition& part) {
    if (!(rho > 0.0)) throw OutOfDomain("delta_bound_approx requires rho > 0");
    long double num = 0.0L, den = 0.0L;
    for (Index i = 0; i < part.n1; ++i) {
        const long double s2 = static_cast<long double>(svd.sigma[i]) * svd.sigma[i];
        const long double d = s2 + rho;
        const long double q = (part.beta * s2 + rho) / (d * d);
        num += s2 * q;
        den += q;
    }
    den += static_cast<long double>(part.n2) / static_cast<long double>(rho);
    return std::sqrt(static_cast<double>(num / den));
}

/// How the x0 covariance enters the mu_x part of the error bound.
struct WhiteCovariance {
    double sigma_x2 = 1.0;
};
struct DeterministicX0 {
    Index n = 0;
};
using CovarianceSpec = std::variant<WhiteCovariance, DeterministicX0, Matrix>;

struct ErrorBoundReport {
    std::optional<double> mu_x;
    double mu_a = 0.0;
    double mu = 0.0;  // min of the available bounds
    double rho_min_lower = 0.0;
};

/// mu_a for h_ii = 1/(sigma_i^2 + rho)^2:
/// max[1 - h_min/h_avg, h_max/h_avg - 1].
inline double mu_a_bound(double rho, const Vector& sigma) {
    const Index n = sigma.size();
    long double avg = 0.0L;
    for (Index i = 0; i < n; ++i) {
        const long double d = static_cast<long double>(sigma[i]) * sigma[i] + rho;
        avg += 1.0L / (d * d);
    }
    avg /= static_cast<long double>(n);
    const long double d1 = static_cast<long double>(sigma[0]) * sigma[0] + rho;
    const long double dn = static_cast<long double>(sigma[n - 1]) * sigma[n - 1] + rho;
    const double lo_term = static_cast<double>(1.0L - (1.0L / (d1 * d1)) / avg);
    const double hi_term = static_cast<double>((1.0L / (dn * dn)) / avg - 1.0L);
    return std::max(lo_term, hi_term);
}

/// Appendix-level error bounds: mu_x from the covariance class (0 for white,
/// n-1 for deterministic, eigenvalue ratios for a general R), mu_a from the
/// spectrum at rho, and rho_min^l = sigma_n1^2 / SNR_max.
inline ErrorBoundReport error_bounds(const spectral::SvdFactors& svd,
                                     const spectral::SpectralPartition& part,
                                     double rho,
                                     const std::optional<CovarianceSpec>& cov,
                                     double snr_max_db = 40.0) {
    if (!(rho > 0.0)) throw OutOfDomain("error_bounds requires rho > 0");
    ErrorBoundReport out;
    out.mu_a = mu_a_bound(rho, svd.sigma);
    if (cov) {
        if (std::holds_alternative<WhiteCovariance>(*cov)) {
            out.mu_x = 0.0;
        } else if (std::holds_alternative<DeterministicX0>(*cov)) {
            out.mu_x = static_cast<double>(std::get<DeterministicX0>(*cov).n - 1);
        } else {
            const Matrix& r = std::get<Matrix>(*cov);
            Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
            if (es.info() != Eigen::Success)
                throw InvalidCovariance("eigendecomposition of R failed");
            const double lmin = es.eigenvalues().minCoeff();
            const double lmax = es.eigenvalues().maxCoeff();
            const double lavg = r.trace() / static_cast<double>(r.rows());
            if (!(lavg > 0.0)) throw DegenerateCovariance("Tr(R) must be positive");
            out.mu_x = std::max(1.0 - lmin / lavg, lmax / lavg - 1.0);
        }
    }
    out.mu = out.mu_x ? std::min(*out.mu_x, out.mu_a) : out.mu_a;
    const double sig_n1 = svd.sigma[part.n1 - 1];
    out.rho_min_lower = sig_n1 * sig_n1 / std::pow(10.0, snr_max_db / 10.0);
    return out;
}

}  // namespace copra::diagnostics
