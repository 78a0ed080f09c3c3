#pragma once

// The COPRA regularizer selector: characteristic function G(rho) in scalar-sum
// form, the root-existence condition, the near-zero epsilon root, safeguarded
// Newton iteration, and the final regularized estimate.
//
// G(rho) = s1(rho) * [t2(rho) + n2/rho] - s0(rho) * t3(rho), with
//   s1 = sum_j sigma_j^2 b_j^2 / (sigma_j^2 + rho)^2        (all n modes)
//   s0 = sum_j b_j^2 / (sigma_j^2 + rho)^2
//   t2 = sum_{i<=n1} (beta sigma_i^2 + rho) / (sigma_i^2 + rho)^2
//   t3 = sum_{i<=n1} sigma_i^2 (beta sigma_i^2 + rho) / (sigma_i^2 + rho)^2
// and beta = n/n1. Positive and negative contributions are accumulated
// separately in extended precision before the final subtraction; the
// catastrophic cancellation near the root is confined to one operation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "copra/errors.hpp"
#include "copra/spectral.hpp"
#include "copra/types.hpp"

namespace copra {

struct CopraConfig {
    double c = 0.1;              // spectral partition constant
    double xi = 1e-9;            // Newton stop: |G| < xi * (G1 + G2) at the iterate
    double rho_init = 0.0;       // 0 = auto (10 * epsilon)
    int max_iter = 100;
    double epsilon_floor = 0.0;  // 0 = auto (1e-12 * sigma_1^2)
};

enum class Branch { newton_root, epsilon_fallback };

inline const char* to_string(Branch b) {
    return b == Branch::newton_root ? "newton-root" : "epsilon-fallback";
}

struct CopraResult {
    double rho = 0.0;
    Vector x_hat;
    Branch branch = Branch::epsilon_fallback;
    int iters = 0;
    double g_residual = 0.0;
    bool condition_satisfied = false;
    double delta = 0.0;        // implied perturbation bound rho*|x|/|y - A x|
    double epsilon = 0.0;      // near-zero root / fallback value used
    bool newton_failed = false;  // fell back to epsilon after a Newton failure
};

/// G evaluated together with its cancellation scale G1 + G2 (both halves are
/// sums of positive terms; |G| << scale means the root is resolved).
struct GEval {
    double value = 0.0;
    double scale = 0.0;
};

namespace detail {

struct GParts {
    long double s1, s0, t2, t3, n2_over_rho;
};

inline GParts g_parts(double rho, const Vector& sigma,
                      const spectral::SpectralPartition& part, const Vector& b) {
    const Index n = sigma.size();
    const long double r = rho;
    const long double beta = part.beta;
    long double s1 = 0.0L, s0 = 0.0L, t2 = 0.0L, t3 = 0.0L;
    for (Index j = 0; j < n; ++j) {
        const long double s2 = static_cast<long double>(sigma[j]) * sigma[j];
        const long double d = s2 + r;
        const long double bb = static_cast<long double>(b[j]) * b[j];
        const long double w = bb / (d * d);
        s0 += w;
        s1 += s2 * w;
    }
    for (Index i = 0; i < part.n1; ++i) {
        const long double s2 = static_cast<long double>(sigma[i]) * sigma[i];
        const long double d = s2 + r;
        const long double q = (beta * s2 + r) / (d * d);
        t2 += q;
        t3 += s2 * q;
    }
    return {s1, s0, t2, t3, static_cast<long double>(part.n2) / r};
}

}  // namespace detail

inline GEval characteristic_g_eval(double rho, const Vector& sigma,
                                   const spectral::SpectralPartition& part,
                                   const Vector& b) {
    if (!(rho > 0.0)) throw OutOfDomain("characteristic_g requires rho > 0");
    const auto p = detail::g_parts(rho, sigma, part, b);
    const long double g1 = p.s1 * p.t2 + p.n2_over_rho * p.s1;
    const long double g2 = p.s0 * p.t3;
    return {static_cast<double>(g1 - g2), static_cast<double>(g1 + g2)};
}

/// G(rho), Eq.-level contract: positive-sum and negative-sum halves
/// accumulated separately in extended precision.
inline double characteristic_g(double rho, const Vector& sigma,
                               const spectral::SpectralPartition& part,
                               const Vector& b) {
    return characteristic_g_eval(rho, sigma, part, b).value;
}

/// Analytic dG/drho (term-wise differentiation of the sum form).
inline double characteristic_g_prime(double rho, const Vector& sigma,
                                     const spectral::SpectralPartition& part,
                                     const Vector& b) {
    if (!(rho > 0.0)) throw OutOfDomain("characteristic_g_prime requires rho > 0");
    const Index n = sigma.size();
    const long double r = rho;
    const long double beta = part.beta;
    long double s1 = 0.0L, s0 = 0.0L, ds1 = 0.0L, ds0 = 0.0L;
    long double t2 = 0.0L, t3 = 0.0L, dt2 = 0.0L, dt3 = 0.0L;
    for (Index j = 0; j < n; ++j) {
        const long double s2 = static_cast<long double>(sigma[j]) * sigma[j];
        const long double d = s2 + r;
        const long double bb = static_cast<long double>(b[j]) * b[j];
        const long double w = bb / (d * d);
        s0 += w;
        s1 += s2 * w;
        ds0 += -2.0L * bb / (d * d * d);
        ds1 += -2.0L * s2 * bb / (d * d * d);
    }
    for (Index i = 0; i < part.n1; ++i) {
        const long double s2 = static_cast<long double>(sigma[i]) * sigma[i];
        const long double d = s2 + r;
        const long double q = (beta * s2 + r) / (d * d);
        const long double dq = ((1.0L - 2.0L * beta) * s2 - r) / (d * d * d);
        t2 += q;
        t3 += s2 * q;
        dt2 += dq;
        dt3 += s2 * dq;
    }
    const long double n2r = static_cast<long double>(part.n2) / r;
    const long double out = ds1 * (t2 + n2r) + s1 * (dt2 - n2r / r) - ds0 * t3 - s0 * dt3;
    return static_cast<double>(out);
}

/// Sufficient root-existence condition:
/// n * sum_j sigma_j^2 b_j^2  >  (sum_{i<=n1} sigma_i^2) * sum_j b_j^2.
inline bool root_condition(const Vector& sigma,
                           const spectral::SpectralPartition& part,
                           const Vector& b) {
    const Index n = sigma.size();
    long double lhs = 0.0L, bsum = 0.0L, sig1 = 0.0L;
    for (Index j = 0; j < n; ++j) {
        const long double s2 = static_cast<long double>(sigma[j]) * sigma[j];
        const long double bb = static_cast<long double>(b[j]) * b[j];
        lhs += s2 * bb;
        bsum += bb;
    }
    for (Index i = 0; i < part.n1; ++i)
        sig1 += static_cast<long double>(sigma[i]) * sigma[i];
    return static_cast<long double>(n) * lhs > sig1 * bsum;
}

enum class EpsilonStatus { formula, not_applicable, fallback_floor };

struct EpsilonRoot {
    double value = 0.0;
    EpsilonStatus status = EpsilonStatus::formula;
};

/// Closed-form near-zero root
///   eps = n2 S2 / (beta (n1 S4 - S2 P)),  S2 = sum sigma_i^-2 b_i^2,
///   S4 = sum sigma_i^-4 b_i^2, P = sum_{i<=n1} sigma_i^-2,
/// floored at epsilon_floor. Returns the floor (flagged) when n2 = 0 or the
/// denominator is not positive/finite.
inline EpsilonRoot epsilon_root(const Vector& sigma,
                                const spectral::SpectralPartition& part,
                                const Vector& b, double epsilon_floor) {
    if (part.n2 == 0) return {epsilon_floor, EpsilonStatus::not_applicable};
    const Index n = sigma.size();
    long double s2sum = 0.0L, s4sum = 0.0L, psum = 0.0L;
    for (Index j = 0; j < n; ++j) {
        const long double s2 = static_cast<long double>(sigma[j]) * sigma[j];
        const long double bb = static_cast<long double>(b[j]) * b[j];
        s2sum += bb / s2;
        s4sum += bb / (s2 * s2);
    }
    for (Index i = 0; i < part.n1; ++i)
        psum += 1.0L / (static_cast<long double>(sigma[i]) * sigma[i]);
    const long double den =
        part.beta * (static_cast<long double>(part.n1) * s4sum - s2sum * psum);
    const long double num = static_cast<long double>(part.n2) * s2sum;
    if (!std::isfinite(static_cast<double>(num)) ||
        !std::isfinite(static_cast<double>(den)) || den <= 0.0L)
        return {epsilon_floor, EpsilonStatus::fallback_floor};
    const double eps = static_cast<double>(num / den);
    if (!std::isfinite(eps) || eps <= 0.0)
        return {epsilon_floor, EpsilonStatus::fallback_floor};
    return {std::max(eps, epsilon_floor), EpsilonStatus::formula};
}

struct NewtonOptions {
    double rho_init = 0.0;
    double xi = 1e-9;      // relative to the cancellation scale at the iterate
    int max_iter = 100;
    double domain_lo = 0.0;  // search domain (epsilon side)
    double domain_hi = 0.0;  // upper guard, e.g. 1e15 * sigma_1^2
    int grid_points = 64;    // up-front safeguard grid
};

struct NewtonResult {
    double rho = 0.0;
    int iters = 0;
    double g_residual = 0.0;
    bool converged = false;
    bool bracket_found = false;
};

/// Safeguarded Newton root finder for G. A coarse log-grid over
/// [domain_lo, domain_hi] locates the last sign change (the root the selector
/// wants); Newton steps that leave the bracket, hit a vanishing derivative, or
/// fail to stay finite are replaced by log-space bisection of the bracket.
inline NewtonResult newton_solve(const std::function<GEval(double)>& g,
                                 const std::function<double(double)>& g_prime,
                                 const NewtonOptions& opt) {
    NewtonResult res;
    const double lo_d = opt.domain_lo, hi_d = opt.domain_hi;
    const int np = opt.grid_points;
    double lo = 0.0, hi = 0.0;
    {
        const double llo = std::log(lo_d), lhi = std::log(hi_d);
        double prev_rho = 0.0, prev_g = 0.0;
        bool have_prev = false;
        for (int k = 0; k < np; ++k) {
            const double r = std::exp(llo + (lhi - llo) * k / double(np - 1));
            const double gv = g(r).value;
            if (have_prev && prev_g < 0.0 && gv >= 0.0) {
                lo = prev_rho;
                hi = r;  // keep scanning: the last sign change wins
            }
            prev_rho = r;
            prev_g = gv;
            have_prev = true;
        }
    }
    if (lo == 0.0 && hi == 0.0) return res;  // no bracket on the domain
    res.bracket_found = true;

    double rho = opt.rho_init > 0.0 ? opt.rho_init : lo;
    for (int it = 1; it <= opt.max_iter; ++it) {
        res.iters = it;
        const GEval e = g(rho);
        res.rho = rho;
        res.g_residual = std::abs(e.value);
        if (std::abs(e.value) <= opt.xi * e.scale) {
            res.converged = true;
            return res;
        }
        if (rho > lo && rho < hi) {
            if (e.value < 0.0) lo = rho;
            else hi = rho;
        }
        double next = 0.0;
        const double gp = g_prime(rho);
        bool take_bisection = true;
        if (gp != 0.0 && std::isfinite(gp)) {
            next = rho - e.value / gp;
            if (std::isfinite(next) && next > lo && next < hi) take_bisection = false;
        }
        if (take_bisection) next = std::sqrt(lo * hi);
        if (hi - lo <= 1e-15 * hi) {
            rho = std::sqrt(lo * hi);
            const GEval ef = g(rho);
            res.rho = rho;
            res.g_residual = std::abs(ef.value);
            res.converged = true;  // bracket exhausted at double resolution
            return res;
        }
        rho = next;
    }
    return res;  // max_iter exceeded; caller decides the fallback
}

/// Spectral Tikhonov solve x = V diag(sigma/(sigma^2+rho)) U^T y.
inline Vector rls_solve(const spectral::SvdFactors& svd, const Vector& y, double rho) {
    if (rho < 0.0) throw OutOfDomain("rls_solve requires rho >= 0");
    if (rho == 0.0 && svd.sigma[svd.sigma.size() - 1] == 0.0)
        throw SingularSystem("rho = 0 with a singular spectrum");
    const Vector b = svd.u.transpose() * y;
    Vector coef(svd.sigma.size());
    for (Index i = 0; i < svd.sigma.size(); ++i) {
        const double s = svd.sigma[i];
        coef[i] = s / (s * s + rho) * b[i];
    }
    return svd.v * coef;
}

/// b = U^T y.
inline Vector projected_observation(const spectral::SvdFactors& svd, const Vector& y) {
    return svd.u.transpose() * y;
}

namespace detail {

/// ||y - A x_rho||^2 evaluated spectrally: the out-of-range part of y plus the
/// filtered in-range residual.
inline double residual_norm2(const Vector& sigma, const Vector& b, double y2,
                             double rho) {
    long double acc = 0.0L;
    for (Index i = 0; i < sigma.size(); ++i) {
        const long double d = static_cast<long double>(sigma[i]) * sigma[i] + rho;
        const long double ri = rho / d * b[i];
        acc += ri * ri;
    }
    const double perp = std::max(y2 - b.squaredNorm(), 0.0);
    return perp + static_cast<double>(acc);
}

}  // namespace detail

/// Algorithm: check the root condition; if it fails, rho = epsilon; otherwise
/// run safeguarded Newton (falling back to epsilon on failure, flagged); then
/// solve the regularized system and report the implied perturbation bound.
inline CopraResult estimate(const spectral::SvdFactors& svd, const Vector& y,
                            const CopraConfig& cfg = {}) {
    if (svd.u.rows() != y.size())
        throw InvalidDimension("estimate: y length does not match U");
    const Vector b = projected_observation(svd, y);
    const auto part = spectral::partition(svd, cfg.c);
    const Vector& sigma = svd.sigma;
    const double sigma1_sq = sigma[0] * sigma[0];

    CopraResult out;
    const double floor_eps =
        cfg.epsilon_floor > 0.0 ? cfg.epsilon_floor : 1e-12 * sigma1_sq;
    const EpsilonRoot eps = epsilon_root(sigma, part, b, floor_eps);
    out.epsilon = eps.value;
    out.condition_satisfied = root_condition(sigma, part, b);

    if (!out.condition_satisfied || sigma1_sq == 0.0) {
        out.branch = Branch::epsilon_fallback;
        out.rho = eps.value;
    } else {
        auto g = [&](double r) { return characteristic_g_eval(r, sigma, part, b); };
        auto gp = [&](double r) { return characteristic_g_prime(r, sigma, part, b); };
        NewtonOptions opt;
        opt.rho_init = cfg.rho_init > 0.0 ? cfg.rho_init : 10.0 * eps.value;
        opt.xi = cfg.xi;
        opt.max_iter = cfg.max_iter;
        opt.domain_lo = std::max(10.0 * eps.value, 1e-15 * sigma1_sq);
        opt.domain_hi = 1e15 * sigma1_sq;
        const NewtonResult nr = newton_solve(g, gp, opt);
        if (nr.converged) {
            out.branch = Branch::newton_root;
            out.rho = nr.rho;
            out.iters = nr.iters;
            out.g_residual = nr.g_residual;
        } else {
            out.branch = Branch::epsilon_fallback;
            out.rho = eps.value;
            out.iters = nr.iters;
            out.g_residual = nr.g_residual;
            out.newton_failed = true;
        }
    }

    out.x_hat = rls_solve(svd, y, out.rho);
    const double rnorm =
        std::sqrt(detail::residual_norm2(sigma, b, y.squaredNorm(), out.rho));
    const double xnorm = out.x_hat.norm();
    out.delta = rnorm > 0.0 ? out.rho * xnorm / rnorm : 0.0;
    return out;
}

}  // namespace copra
