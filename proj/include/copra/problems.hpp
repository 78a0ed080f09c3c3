#pragma once

// Test-problem generators for linear discrete ill-posed systems y = A x0 + z.
//
// The eight kernel problems are the classical Fredholm/Volterra test cases in
// their standard discretizations:
//
//   shaw      K(s,t) = (cos s + cos t)^2 (sin u / u)^2, u = pi (sin s + sin t),
//             s,t in [-pi/2, pi/2], midpoint quadrature; x(t) sum of two
//             Gaussians. n even.
//   baart     K(s,t) = exp(s cos t), s in [0, pi/2], t in [0, pi]; Galerkin
//             with box functions, exact s-integral, Simpson rule in t;
//             x(t) = sin t. n even.
//   foxgood   K(s,t) = sqrt(s^2 + t^2) on [0,1]^2, midpoint; x(t) = t.
//   heat      Volterra kernel k(s-t), k(t) = t^{-3/2}/(2 kappa sqrt(pi))
//             * exp(-1/(4 kappa^2 t)) on [0,1], midpoint; lower-triangular
//             Toeplitz; piecewise hat/decay solution on the first half.
//             n even.
//   deriv2    Green's function for the second derivative on [0,1],
//             K(s,t) = s(t-1) for s<t, t(s-1) otherwise; Galerkin with box
//             functions (exact); x(t) = t.
//   wing      K(s,t) = t exp(-s t^2) on [0,1]^2, midpoint; x = indicator of
//             (1/3, 2/3) (discontinuous).
//   spikes    Gaussian convolution on [0, 5], kernel width 1/2, midpoint;
//             x = unit step at t=1/2 plus a decaying pulse train at
//             t = 1/2, 3/2, 5/2, ...
//   ilaplace  inverse Laplace transform, K(s,t) = exp(-s t), t in [0, inf),
//             s_i = 10 i / n; Gauss-Laguerre quadrature with barycentric
//             weights w_j e^{t_j} computed through the scaled recurrence
//             l_k = e^{-t/2} L_k(t); x(t) = exp(-t/2).
//
// rank_deficient builds A = (1/m) B B^T with B m-by-r standard Gaussian, and
// tomo builds the ray-pixel intersection-length operator for random chords of
// the unit square.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "copra/errors.hpp"
#include "copra/rng.hpp"
#include "copra/types.hpp"

namespace copra::problems {

struct IllPosedProblem {
    std::string name;
    Matrix a;                            // m x n, m >= n
    Vector x0;                           // length n
    std::map<std::string, double> meta;  // generator parameters

    Index rows() const { return a.rows(); }
    Index cols() const { return a.cols(); }
};

struct NoisyObservation {
    Vector y;
    double sigma_z2 = 0.0;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
};

enum class X0Dist { gaussian, uniform01 };

namespace detail {

inline void require_even(Index n, const char* name) {
    if (n % 2 != 0)
        throw InvalidDimension(std::string(name) + " requires even n, got " + std::to_string(n));
}

inline IllPosedProblem shaw(Index n) {
    require_even(n, "shaw");
    const double h = M_PI / static_cast<double>(n);
    Vector t(n), co(n), psi(n);
    for (Index i = 0; i < n; ++i) {
        t[i] = -M_PI / 2.0 + (static_cast<double>(i) + 0.5) * h;
        co[i] = std::cos(t[i]);
        psi[i] = M_PI * std::sin(t[i]);
    }
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double ss = psi[i] + psi[j];
            const double sinc = (ss == 0.0) ? 1.0 : std::sin(ss) / ss;
            const double v = (co[i] + co[j]) * sinc;
            a(i, j) = h * v * v;
        }
    }
    Vector x(n);
    for (Index i = 0; i < n; ++i)
        x[i] = 2.0 * std::exp(-6.0 * (t[i] - 0.8) * (t[i] - 0.8)) +
               std::exp(-2.0 * (t[i] + 0.5) * (t[i] + 0.5));
    return {"shaw", std::move(a), std::move(x), {{"n", double(n)}}};
}

inline IllPosedProblem baart(Index n) {
    require_even(n, "baart");
    const double hs = M_PI / (2.0 * static_cast<double>(n));
    const double ht = M_PI / static_cast<double>(n);
    const double c = 1.0 / (3.0 * std::sqrt(2.0));
    Vector ihs(n + 1);
    for (Index i = 0; i <= n; ++i) ihs[i] = static_cast<double>(i) * hs;

    // F(cos th)_i = integral of exp(s cos th) over the i-th s-cell
    auto col = [&](double costh, Vector& out) {
        if (costh == 0.0) {
            out.setConstant(n, hs);
            return;
        }
        for (Index i = 0; i < n; ++i)
            out[i] = (std::exp(ihs[i + 1] * costh) - std::exp(ihs[i] * costh)) / costh;
    };

    Matrix a(n, n);
    Vector f1(n), f2(n), f3(n);
    col(1.0, f3);
    for (Index j = 1; j <= n; ++j) {
        f1 = f3;
        col(std::cos((static_cast<double>(j) - 0.5) * ht), f2);
        col(std::cos(static_cast<double>(j) * ht), f3);
        a.col(j - 1) = c * (f1 + 4.0 * f2 + f3);
    }
    Vector x(n);
    for (Index j = 0; j < n; ++j)
        x[j] = (std::cos(static_cast<double>(j) * ht) -
                std::cos(static_cast<double>(j + 1) * ht)) / std::sqrt(ht);
    return {"baart", std::move(a), std::move(x), {{"n", double(n)}}};
}

inline IllPosedProblem foxgood(Index n) {
    const double h = 1.0 / static_cast<double>(n);
    Vector t(n);
    for (Index i = 0; i < n; ++i) t[i] = (static_cast<double>(i) + 0.5) * h;
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            a(i, j) = h * std::sqrt(t[i] * t[i] + t[j] * t[j]);
    return {"foxgood", std::move(a), t, {{"n", double(n)}}};
}

inline IllPosedProblem heat(Index n, double kappa) {
    require_even(n, "heat");
    const double h = 1.0 / static_cast<double>(n);
    const double c = h / (2.0 * kappa * std::sqrt(M_PI));
    const double d = 1.0 / (4.0 * kappa * kappa);
    Vector k(n);
    for (Index i = 0; i < n; ++i) {
        const double ti = (static_cast<double>(i) + 0.5) * h;
        k[i] = c * std::pow(ti, -1.5) * std::exp(-d / ti);
    }
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j <= i; ++j) a(i, j) = k[i - j];
    Vector x = Vector::Zero(n);
    for (Index i = 1; i <= n / 2; ++i) {
        const double ti = static_cast<double>(i) * 20.0 / static_cast<double>(n);
        if (ti < 2.0)
            x[i - 1] = 0.75 * ti * ti / 4.0;
        else if (ti < 3.0)
            x[i - 1] = 0.75 + (ti - 2.0) * (3.0 - ti);
        else
            x[i - 1] = 0.75 * std::exp(-(ti - 3.0) * 2.0);
    }
    return {"heat", std::move(a), std::move(x), {{"n", double(n)}, {"kappa", kappa}}};
}

inline IllPosedProblem deriv2(Index n) {
    const double h = 1.0 / static_cast<double>(n);
    const double h2 = h * h;
    Matrix a(n, n);
    for (Index ii = 1; ii <= n; ++ii) {
        const double i = static_cast<double>(ii);
        a(ii - 1, ii - 1) = h2 * ((i * i - i + 0.25) * h - (i - 2.0 / 3.0));
        for (Index jj = 1; jj < ii; ++jj) {
            const double j = static_cast<double>(jj);
            const double v = h2 * (j - 0.5) * ((i - 0.5) * h - 1.0);
            a(ii - 1, jj - 1) = v;
            a(jj - 1, ii - 1) = v;
        }
    }
    Vector x(n);
    for (Index i = 0; i < n; ++i)
        x[i] = std::pow(h, 1.5) * (static_cast<double>(i) + 0.5);
    return {"deriv2", std::move(a), std::move(x), {{"n", double(n)}}};
}

inline IllPosedProblem wing(Index n, double t1, double t2) {
    const double h = 1.0 / static_cast<double>(n);
    Vector t(n);
    for (Index i = 0; i < n; ++i) t[i] = (static_cast<double>(i) + 0.5) * h;
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            a(i, j) = h * t[j] * std::exp(-t[i] * t[j] * t[j]);
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = (t1 < t[i] && t[i] < t2) ? 1.0 : 0.0;
    return {"wing", std::move(a), std::move(x),
            {{"n", double(n)}, {"t1", t1}, {"t2", t2}}};
}

inline IllPosedProblem spikes(Index n, double t_max) {
    const double del = t_max / static_cast<double>(n);
    const double width = t_max / 10.0;
    Vector t(n);
    for (Index i = 0; i < n; ++i) t[i] = (static_cast<double>(i) + 0.5) * del;
    Matrix a(n, n);
    const double norm = del / (width * std::sqrt(2.0 * M_PI));
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            const double u = (t[i] - t[j]) / width;
            a(i, j) = norm * std::exp(-0.5 * u * u);
        }
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = (t[i] >= 0.5) ? 1.0 : 0.0;
    double pos = 0.5;
    double amp = 2.0;
    while (pos < t_max) {
        const Index idx = static_cast<Index>(std::floor(pos / del));
        if (idx < n) x[idx] += amp;
        pos += 1.0;
        amp *= 0.5;
    }
    return {"spikes", std::move(a), std::move(x),
            {{"n", double(n)}, {"t_max", t_max}}};
}

/// Gauss-Laguerre nodes via Golub-Welsch on the symmetric Jacobi matrix.
inline Vector gauss_laguerre_nodes(Index n) {
    Matrix j = Matrix::Zero(n, n);
    for (Index k = 1; k <= n; ++k) {
        j(k - 1, k - 1) = 2.0 * static_cast<double>(k) - 1.0;
        if (k < n) {
            j(k - 1, k) = static_cast<double>(k);
            j(k, k - 1) = static_cast<double>(k);
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(j, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw FactorizationFailed("Gauss-Laguerre node computation failed");
    return es.eigenvalues();
}

/// e^{-t/2} L_k(t) by the Laguerre three-term recurrence; the scaling keeps
/// every intermediate within double range for the node magnitudes used here.
inline double scaled_laguerre(Index k, double t) {
    double l0 = std::exp(-t / 2.0);
    if (k == 0) return l0;
    double l1 = (1.0 - t) * l0;
    for (Index m = 1; m < k; ++m) {
        const double dm = static_cast<double>(m);
        const double l2 = ((2.0 * dm + 1.0 - t) * l1 - dm * l0) / (dm + 1.0);
        l0 = l1;
        l1 = l2;
    }
    return l1;
}

inline IllPosedProblem ilaplace(Index n) {
    Vector t = gauss_laguerre_nodes(n);
    Vector lam(n);
    const double np1 = static_cast<double>(n + 1);
    for (Index j = 0; j < n; ++j) {
        const double l = scaled_laguerre(n + 1, t[j]);
        lam[j] = t[j] / (np1 * np1 * l * l);
    }
    Matrix a(n, n);
    for (Index i = 0; i < n; ++i) {
        const double s = 10.0 * static_cast<double>(i + 1) / static_cast<double>(n);
        for (Index j = 0; j < n; ++j) a(i, j) = lam[j] * std::exp(-s * t[j]);
    }
    Vector x(n);
    for (Index j = 0; j < n; ++j) x[j] = std::exp(-t[j] / 2.0);
    return {"ilaplace", std::move(a), std::move(x), {{"n", double(n)}}};
}

}  // namespace detail

/// Deterministic generator for the named kernel problems (square, m = n).
/// `meta` overrides: heat kappa ("kappa"), wing interval ("t1"/"t2"),
/// spikes interval length ("t_max").
inline IllPosedProblem generate(const std::string& name, Index n,
                                const std::map<std::string, double>& meta = {}) {
    if (n < 2) throw InvalidDimension("problem size must be >= 2");
    auto get = [&](const char* key, double dflt) {
        auto it = meta.find(key);
        return it == meta.end() ? dflt : it->second;
    };
    if (name == "shaw") return detail::shaw(n);
    if (name == "baart") return detail::baart(n);
    if (name == "foxgood") return detail::foxgood(n);
    if (name == "heat") return detail::heat(n, get("kappa", 1.0));
    if (name == "deriv2") return detail::deriv2(n);
    if (name == "wing") return detail::wing(n, get("t1", 1.0 / 3.0), get("t2", 2.0 / 3.0));
    if (name == "spikes") return detail::spikes(n, get("t_max", 5.0));
    if (name == "ilaplace") return detail::ilaplace(n);
    throw UnknownProblem(name);
}

inline const std::vector<std::string>& kernel_problem_names() {
    static const std::vector<std::string> names = {
        "shaw", "baart", "foxgood", "heat", "deriv2", "wing", "spikes", "ilaplace"};
    return names;
}

/// A = (1/m) B B^T with B m-by-r standard Gaussian; rank(A) = r < m.
/// B is filled row-major from the seed, then x0 is drawn (length m).
inline IllPosedProblem rank_deficient(Index m, Index r, std::uint64_t seed,
                                      X0Dist dist = X0Dist::gaussian) {
    if (m <= r || r < 1)
        throw InvalidDimension("rank_deficient requires m > r >= 1");
    Rng rng(derive_seed(seed, 0x5eed0001ULL));
    Matrix b(m, r);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < r; ++j) b(i, j) = rng.gaussian();
    Matrix a = (b * b.transpose()) / static_cast<double>(m);
    Vector x(m);
    for (Index i = 0; i < m; ++i)
        x[i] = dist == X0Dist::gaussian ? rng.gaussian() : rng.uniform();
    return {"rankdef", std::move(a), std::move(x),
            {{"m", double(m)}, {"r", double(r)}, {"seed", double(seed)},
             {"x0_uniform", dist == X0Dist::uniform01 ? 1.0 : 0.0}}};
}

/// Deterministic test image: two rectangles and a disk of distinct
/// intensities on a zero background. Cell (r, c) covers
/// [c, c+1]/n_side x [r, r+1]/n_side with r counted from the bottom edge.
inline Matrix phantom(Index n_side) {
    Matrix img = Matrix::Zero(n_side, n_side);
    for (Index r = 0; r < n_side; ++r)
        for (Index c = 0; c < n_side; ++c) {
            const double x = (static_cast<double>(c) + 0.5) / static_cast<double>(n_side);
            const double y = (static_cast<double>(r) + 0.5) / static_cast<double>(n_side);
            if (x >= 0.15 && x <= 0.45 && y >= 0.2 && y <= 0.8) img(r, c) = 0.5;
            if (x >= 0.2 && x <= 0.35 && y >= 0.55 && y <= 0.7) img(r, c) = 0.8;
            const double dx = x - 0.68, dy = y - 0.38;
            if (dx * dx + dy * dy <= 0.18 * 0.18) img(r, c) = 1.0;
        }
    return img;
}

/// Column-stacks an image: entry (r, c) lands at index c * n_side + r.
inline Vector stack_columns(const Matrix& img) {
    Vector x(img.rows() * img.cols());
    Index k = 0;
    for (Index c = 0; c < img.cols(); ++c)
        for (Index r = 0; r < img.rows(); ++r) x[k++] = img(r, c);
    return x;
}

inline Matrix unstack_columns(const Vector& x, Index n_side) {
    Matrix img(n_side, n_side);
    Index k = 0;
    for (Index c = 0; c < n_side; ++c)
        for (Index r = 0; r < n_side; ++r) img(r, c) = x[k++];
    return img;
}

/// Random-ray tomography operator. Each ray starts at a uniformly random
/// point on the boundary of the unit square and travels in a uniformly
/// random inward direction until it exits; entry (i, j) is the length of
/// the intersection of ray i with pixel j (column-stacked grid).
inline IllPosedProblem tomo(Index n_side, Index n_rays, std::uint64_t seed) {
    if (n_side < 2) throw InvalidDimension("tomo requires n_side >= 2");
    const Index n = n_side * n_side;
    if (n_rays < n)
        throw InvalidDimension("tomo requires n_rays >= n_side^2 (m >= n)");
    Rng rng(derive_seed(seed, 0x5eed0002ULL));
    Matrix a = Matrix::Zero(n_rays, n);
    const double ns = static_cast<double>(n_side);
    std::vector<double> ts;
    for (Index i = 0; i < n_rays; ++i) {
        // boundary point: parameterize the perimeter by u in [0, 4)
        const double u = rng.uniform(0.0, 4.0);
        const int edge = static_cast<int>(u);
        const double f = u - edge;
        double px, py, base;
        switch (edge) {
            case 0: px = f; py = 0.0; base = 0.0; break;                     // bottom
            case 1: px = 1.0; py = f; base = M_PI / 2.0; break;              // right
            case 2: px = 1.0 - f; py = 1.0; base = M_PI; break;              // top
            default: px = 0.0; py = 1.0 - f; base = 3.0 * M_PI / 2.0; break; // left
        }
        // inward direction spans a half-plane anchored at the edge normal
        const double th = base + rng.uniform(0.0, M_PI);
        const double dx = -std::sin(th), dy = std::cos(th);
        double tmax = std::numeric_limits<double>::infinity();
        if (dx > 1e-15) tmax = std::min(tmax, (1.0 - px) / dx);
        else if (dx < -1e-15) tmax = std::min(tmax, -px / dx);
        if (dy > 1e-15) tmax = std::min(tmax, (1.0 - py) / dy);
        else if (dy < -1e-15) tmax = std::min(tmax, -py / dy);
        if (!std::isfinite(tmax) || tmax <= 0.0) continue;  // grazing corner ray

        ts.clear();
        ts.push_back(0.0);
        ts.push_back(tmax);
        for (Index k = 1; k < n_side; ++k) {
            const double g = static_cast<double>(k) / ns;
            if (std::abs(dx) > 1e-15) {
                const double t = (g - px) / dx;
                if (t > 0.0 && t < tmax) ts.push_back(t);
            }
            if (std::abs(dy) > 1e-15) {
                const double t = (g - py) / dy;
                if (t > 0.0 && t < tmax) ts.push_back(t);
            }
        }
        std::sort(ts.begin(), ts.end());
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            const double len = ts[k + 1] - ts[k];
            if (len < 1e-14) continue;
            const double tm = 0.5 * (ts[k] + ts[k + 1]);
            const double x = px + tm * dx, y = py + tm * dy;
            Index c = std::min(static_cast<Index>(x * ns), n_side - 1);
            Index r = std::min(static_cast<Index>(y * ns), n_side - 1);
            a(i, c * n_side + r) += len;
        }
    }
    Vector x0 = stack_columns(phantom(n_side));
    return {"tomo", std::move(a), std::move(x0),
            {{"n_side", double(n_side)}, {"n_rays", double(n_rays)},
             {"seed", double(seed)}}};
}

/// y = A x0 + z at the requested SNR; sigma_z2 = ||A x0||^2 / (n 10^(snr/10)).
inline NoisyObservation observe(const IllPosedProblem& p, double snr_db,
                                std::uint64_t seed) {
    if (!std::isfinite(snr_db)) throw OutOfDomain("snr_db must be finite");
    const Vector ax = p.a * p.x0;
    const double power = ax.squaredNorm();
    if (!(power > 0.0)) throw DegenerateSignal("A x0 = 0, SNR undefined");
    const double n = static_cast<double>(p.cols());
    const double sigma_z2 = power / (n * std::pow(10.0, snr_db / 10.0));
    const double sd = std::sqrt(sigma_z2);
    Rng rng(derive_seed(seed, 0x5eed0003ULL));
    Vector y(p.rows());
    for (Index i = 0; i < p.rows(); ++i) y[i] = ax[i] + sd * rng.gaussian();
    return {std::move(y), sigma_z2, snr_db, seed};
}

}  // namespace copra::problems
