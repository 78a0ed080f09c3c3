#pragma once

// Reference parameter-selection methods: OLS, GCV, L-curve corner,
// quasi-optimality, and the LMMSE oracle. Every selector works on the SVD
// spectrum and returns a gamma from its grid; the final estimate is always
// rls_solve(svd, y, gamma) so selection and solving stay decoupled.

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "copra/errors.hpp"
#include "copra/selector.hpp"
#include "copra/spectral.hpp"
#include "copra/types.hpp"

namespace copra::baselines {

enum class MethodId { ols, gcv, lcurve, quasiopt, lmmse, copra };

inline const char* to_string(MethodId m) {
    switch (m) {
        case MethodId::ols: return "ols";
        case MethodId::gcv: return "gcv";
        case MethodId::lcurve: return "lcurve";
        case MethodId::quasiopt: return "quasiopt";
        case MethodId::lmmse: return "lmmse";
        case MethodId::copra: return "copra";
    }
    return "?";
}

inline MethodId method_from_string(const std::string& s) {
    if (s == "ols") return MethodId::ols;
    if (s == "gcv") return MethodId::gcv;
    if (s == "lcurve") return MethodId::lcurve;
    if (s == "quasiopt" || s == "quasi") return MethodId::quasiopt;
    if (s == "lmmse") return MethodId::lmmse;
    if (s == "copra") return MethodId::copra;
    throw Error("unknown method: " + s);
}

/// Log-spaced descending gamma grid.
struct GammaGrid {
    Vector values;

    static GammaGrid standard(double sigma1, Index count = 200) {
        if (count < 16) throw Error("gamma grid needs at least 16 points");
        const double top = sigma1 * sigma1;
        const double bottom = 1e-16 * top;
        GammaGrid g;
        g.values.resize(count);
        const double l0 = std::log(top), l1 = std::log(bottom);
        for (Index k = 0; k < count; ++k)
            g.values[k] = std::exp(l0 + (l1 - l0) * k / double(count - 1));
        return g;
    }
};

struct OlsResult {
    Vector x_hat;
    bool pseudo_inverse = false;  // true when zero singular values were dropped
};

/// x = V Sigma^+ U^T y; exact inverse when sigma_n > 0, otherwise the
/// pseudo-inverse dropping sigma_i < 1e-14 sigma_1 (flagged).
inline OlsResult ols_solve(const spectral::SvdFactors& svd, const Vector& y) {
    const Vector b = svd.u.transpose() * y;
    const Index n = svd.sigma.size();
    OlsResult out;
    Vector coef(n);
    if (svd.sigma[n - 1] > 0.0) {
        for (Index i = 0; i < n; ++i) coef[i] = b[i] / svd.sigma[i];
    } else {
        out.pseudo_inverse = true;
        const double cut = 1e-14 * svd.sigma[0];
        for (Index i = 0; i < n; ++i)
            coef[i] = svd.sigma[i] < cut ? 0.0 : b[i] / svd.sigma[i];
    }
    out.x_hat = svd.v * coef;
    return out;
}

namespace detail {

inline double gcv_value(double gamma, const Vector& sigma, const Vector& b,
                        double y2, Index m) {
    long double resid = 0.0L, tr = static_cast<long double>(m);
    for (Index i = 0; i < sigma.size(); ++i) {
        const long double s2 = static_cast<long double>(sigma[i]) * sigma[i];
        const long double d = s2 + gamma;
        const long double ri = gamma / d * b[i];
        resid += ri * ri;
        tr -= s2 / d;
    }
    resid += std::max(y2 - b.squaredNorm(), 0.0);
    return static_cast<double>(static_cast<long double>(m) * resid / (tr * tr));
}

}  // namespace detail

/// GCV: grid minimizer of V(gamma) = m ||(I - A A_gamma^+) y||^2 / Tr(...)^2,
/// refined by golden-section (in log gamma) inside the bracketing cells.
inline double gcv_select(const spectral::SvdFactors& svd, const Vector& y,
                         const GammaGrid& grid) {
    const Vector b = svd.u.transpose() * y;
    const double y2 = y.squaredNorm();
    const Index m = svd.u.rows();
    const Index k = grid.values.size();
    Index best = 0;
    double vbest = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i) {
        const double v = detail::gcv_value(grid.values[i], svd.sigma, b, y2, m);
        if (v < vbest) {
            vbest = v;
            best = i;
        }
    }
    // golden-section on the bracketing cell (grid is descending)
    double hi = grid.values[best > 0 ? best - 1 : best];
    double lo = grid.values[best + 1 < k ? best + 1 : best];
    if (lo >= hi) return grid.values[best];
    double a = std::log(lo), d = std::log(hi);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = d - gr * (d - a), x2 = a + gr * (d - a);
    double f1 = detail::gcv_value(std::exp(x1), svd.sigma, b, y2, m);
    double f2 = detail::gcv_value(std::exp(x2), svd.sigma, b, y2, m);
    for (int it = 0; it < 80 && d - a > 1e-12; ++it) {
        if (f1 <= f2) {
            d = x2;
            x2 = x1;
            f2 = f1;
            x1 = d - gr * (d - a);
            f1 = detail::gcv_value(std::exp(x1), svd.sigma, b, y2, m);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (d - a);
            f2 = detail::gcv_value(std::exp(x2), svd.sigma, b, y2, m);
        }
    }
    return std::exp(0.5 * (a + d));
}

/// L-curve corner: maximize the curvature of
/// (log ||A x_g - y||^2, log ||x_g||^2) over the grid. The norms and their
/// gamma-derivatives come from spectral sums; eta' = d||x||^2/dgamma,
/// drho = -gamma * eta'.
inline double lcurve_select(const spectral::SvdFactors& svd, const Vector& y,
                            const GammaGrid& grid) {
    const Vector b = svd.u.transpose() * y;
    const double yperp = std::max(y.squaredNorm() - b.squaredNorm(), 0.0);
    double kbest = -std::numeric_limits<double>::infinity();
    double gbest = 0.0;
    bool found = false;
    for (Index k = 0; k < grid.values.size(); ++k) {
        const double g = grid.values[k];
        long double eta = 0.0L, deta = 0.0L, ddeta = 0.0L, rs = yperp;
        for (Index i = 0; i < svd.sigma.size(); ++i) {
            const long double s2 = static_cast<long double>(svd.sigma[i]) * svd.sigma[i];
            const long double d = s2 + g;
            const long double bb = static_cast<long double>(b[i]) * b[i];
            eta += s2 * bb / (d * d);
            deta += -2.0L * s2 * bb / (d * d * d);
            ddeta += 6.0L * s2 * bb / (d * d * d * d);
            const long double ri = g / d;
            rs += ri * ri * bb;
        }
        if (!(eta > 0.0L) || !(rs > 0.0L)) continue;
        const long double drho = -g * deta;
        const long double ddrho = -deta - g * ddeta;
        const long double up = drho / rs, vp = deta / eta;
        const long double upp = ddrho / rs - up * up;
        const long double vpp = ddeta / eta - vp * vp;
        const long double den = std::pow(static_cast<double>(up * up + vp * vp), 1.5);
        if (!(den > 0.0L)) continue;
        const double kappa = static_cast<double>((up * vpp - vp * upp) / den);
        if (std::isfinite(kappa) && kappa > kbest) {
            kbest = kappa;
            gbest = g;
            found = true;
        }
    }
    if (!found || !(kbest > 0.0))
        throw NoCorner("L-curve has no curvature maximum on the grid");
    return gbest;
}

struct QuasiChoice {
    double gamma = 0.0;
    bool endpoint_selection = false;  // argmin fell on a grid end
};

/// Quasi-optimality: minimize Q(gamma)^2 = sum_i (gamma sigma_i b_i /
/// (sigma_i^2+gamma)^2)^2 over the grid.
inline QuasiChoice quasiopt_select(const spectral::SvdFactors& svd, const Vector& y,
                                   const GammaGrid& grid) {
    const Vector b = svd.u.transpose() * y;
    const Index k = grid.values.size();
    Index best = 0;
    double qbest = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < k; ++j) {
        const double g = grid.values[j];
        long double q = 0.0L;
        for (Index i = 0; i < svd.sigma.size(); ++i) {
            const long double s = svd.sigma[i];
            const long double d = s * s + g;
            const long double t = g * s * b[i] / (d * d);
            q += t * t;
        }
        if (static_cast<double>(q) < qbest) {
            qbest = static_cast<double>(q);
            best = j;
        }
    }
    return {grid.values[best], best == 0 || best == k - 1};
}

/// LMMSE oracle x = (A^T A + sigma_z^2 R^{-1})^{-1} A^T y; test-only, takes
/// the true covariance.
inline Vector lmmse_oracle(const spectral::SvdFactors& svd, const Vector& y,
                           const Matrix& r_x0, double sigma_z2) {
    const Index n = svd.sigma.size();
    if (r_x0.rows() != n || r_x0.cols() != n)
        throw InvalidCovariance("covariance shape mismatch");
    Eigen::LDLT<Matrix> rldlt(r_x0);
    if (rldlt.info() != Eigen::Success || !rldlt.isPositive())
        throw InvalidCovariance("covariance must be positive definite");
    const Matrix rinv = rldlt.solve(Matrix::Identity(n, n));
    // rebuild A^T A and A^T y from the factors
    const Matrix at_a =
        svd.v * svd.sigma.array().square().matrix().asDiagonal() * svd.v.transpose();
    const Vector at_y = svd.v * (svd.sigma.asDiagonal() * (svd.u.transpose() * y));
    const Matrix lhs = at_a + sigma_z2 * rinv;
    Eigen::LDLT<Matrix> solver(lhs);
    if (solver.info() != Eigen::Success)
        throw SingularSystem("LMMSE normal matrix not factorizable");
    return solver.solve(at_y);
}

}  // namespace copra::baselines
