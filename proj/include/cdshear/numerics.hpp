#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cdshear/errors.hpp"

namespace cdshear {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Real roots of the monic cubic x^3 + a2 x^2 + a1 x + a0, with
/// multiplicities. Closed form: trigonometric branch for three real
/// roots, Cardano otherwise; near-zero discriminants collapse to the
/// exact double/triple-root formulas, which stay accurate where the
/// split roots of the rounded coefficients would not.
struct CubicRoots {
    std::array<double, 3> root{};
    std::array<int, 3> multiplicity{};
    int count = 0;  // number of distinct real roots stored
    double discriminant = 0.0;

    void push(double r, int m) {
        root[static_cast<std::size_t>(count)] = r;
        multiplicity[static_cast<std::size_t>(count)] = m;
        ++count;
    }
};

inline double eval_cubic(double a2, double a1, double a0, double x) {
    return ((x + a2) * x + a1) * x + a0;
}

inline double polish_cubic_root(double a2, double a1, double a0, double x) {
    // two guarded Newton steps; only used for simple roots
    for (int it = 0; it < 2; ++it) {
        const double f = eval_cubic(a2, a1, a0, x);
        const double df = (3.0 * x + 2.0 * a2) * x + a1;
        if (df == 0.0) break;
        const double step = f / df;
        if (!std::isfinite(step)) break;
        x -= step;
    }
    return x;
}

inline CubicRoots solve_cubic_monic(double a2, double a1, double a0) {
    CubicRoots out;
    // depressed form t^3 + p t + q,  x = t - a2/3
    const double shift = a2 / 3.0;
    const double p = a1 - a2 * a2 / 3.0;
    const double q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
    const double disc = -4.0 * p * p * p - 27.0 * q * q;
    out.discriminant = disc;

    const double scale = std::max({std::sqrt(std::fabs(p)), std::cbrt(std::fabs(q))});
    const double s6 = scale > 0.0 ? std::pow(scale, 6) : 0.0;
    const double tol_disc = 1e-12 * std::max(s6, 1e-300);

    if (scale == 0.0) {
        out.push(-shift, 3);
        return out;
    }

    if (std::fabs(disc) <= tol_disc) {
        if (std::fabs(p) * scale <= tol_disc) {
            // p ~ 0 and q ~ 0: triple root
            out.push(-shift, 3);
            return out;
        }
        // double root t2 = -3q/2p, simple root t1 = 3q/p
        const double t2 = -1.5 * q / p;
        const double t1 = 3.0 * q / p;
        const double x1 = polish_cubic_root(a2, a1, a0, t1 - shift);
        const double x2 = t2 - shift;
        if (x1 >= x2) {
            out.push(x1, 1);
            out.push(x2, 2);
        } else {
            out.push(x2, 2);
            out.push(x1, 1);
        }
        return out;
    }

    if (disc > 0.0) {
        // three distinct real roots, trigonometric form
        const double m = 2.0 * std::sqrt(-p / 3.0);
        double arg = 3.0 * q / (p * m);
        arg = std::clamp(arg, -1.0, 1.0);
        const double phi = std::acos(arg);
        std::array<double, 3> r{};
        for (int k = 0; k < 3; ++k) {
            const double t = m * std::cos((phi - 2.0 * M_PI * k) / 3.0);
            r[static_cast<std::size_t>(k)] = polish_cubic_root(a2, a1, a0, t - shift);
        }
        std::sort(r.begin(), r.end(), std::greater<double>());
        for (double x : r) out.push(x, 1);
        return out;
    }

    // one real root, Cardano with cancellation-safe branch
    const double w = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    double u;
    if (q <= 0.0) {
        u = std::cbrt(-q / 2.0 + w);
    } else {
        u = std::cbrt(-q / 2.0 - w);
    }
    const double t = (u == 0.0) ? 0.0 : u - p / (3.0 * u);
    out.push(polish_cubic_root(a2, a1, a0, t - shift), 1);
    return out;
}

/// Real roots of a general polynomial sum_k c[k] x^k via the companion
/// matrix of the monic normalization. Complex pairs are discarded; real
/// candidates are Newton-polished and deduplicated.
inline std::vector<double> polynomial_real_roots(const std::vector<double>& coeffs) {
    std::vector<double> c = coeffs;
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    if (c.size() <= 1) return {};
    const int n = static_cast<int>(c.size()) - 1;
    if (n == 1) return {-c[0] / c[1]};

    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<std::size_t>(i)] / c[static_cast<std::size_t>(n)];

    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
    const auto eig = es.eigenvalues();

    auto peval = [&](double x, double& f, double& df) {
        f = 0.0;
        df = 0.0;
        for (int k = n; k >= 0; --k) {
            df = df * x + f;
            f = f * x + c[static_cast<std::size_t>(k)];
        }
    };

    std::vector<double> roots;
    for (int i = 0; i < eig.size(); ++i) {
        const double re = eig[i].real();
        const double im = eig[i].imag();
        if (std::fabs(im) > 1e-8 * (1.0 + std::fabs(re))) continue;
        double x = re;
        for (int it = 0; it < 3; ++it) {
            double f, df;
            peval(x, f, df);
            if (df == 0.0) break;
            const double step = f / df;
            if (!std::isfinite(step)) break;
            x -= step;
        }
        roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end(), std::greater<double>());
    // merge numerically identical candidates
    std::vector<double> out;
    for (double r : roots) {
        if (out.empty() || std::fabs(out.back() - r) > 1e-9 * (1.0 + std::fabs(r))) out.push_back(r);
    }
    return out;
}

/// Bisection with Newton acceleration on a bracketing interval.
/// f(lo) and f(hi) must have opposite signs.
template <class F, class DF>
double refine_root(F f, DF df, double lo, double hi, double flo, double fhi,
                   double xtol = 0.0, int max_iter = 200) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx < 0.0) == (flo < 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        const double d = df(x);
        double xn = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        const double tol = xtol > 0.0 ? xtol : 1e-15 * (1.0 + std::fabs(xn));
        if (std::fabs(xn - x) <= tol) return xn;
        x = xn;
    }
    return x;
}

template <class F>
double refine_root_bisect(F f, double lo, double hi, double flo, double fhi, int max_iter = 200) {
    auto dzero = [](double) { return 0.0; };
    return refine_root(f, dzero, lo, hi, flo, fhi, 0.0, max_iter);
}

/// Counter-based stream: value i of stream `seed` is splitmix64(seed, i).
/// Deterministic regardless of evaluation order or worker count.
inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + counter * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(splitmix64(seed, counter) >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::uint64_t seed, std::uint64_t counter, double lo, double hi) {
    return lo + (hi - lo) * uniform01(seed, counter);
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_diff2(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// Eigenvalues of a symmetric 2x2 matrix, descending.
inline std::array<double, 2> sym_eigs_2x2(double a00, double a01, double a11) {
    const double tr = a00 + a11;
    const double dd = a00 - a11;
    const double r = std::sqrt(dd * dd / 4.0 + a01 * a01);
    return {tr / 2.0 + r, tr / 2.0 - r};
}

inline std::vector<double> sym_eigs(const std::vector<double>& a, int n) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a[static_cast<std::size_t>(i * n + j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()[n - 1 - i];
    return out;
}

}  // namespace cdshear
