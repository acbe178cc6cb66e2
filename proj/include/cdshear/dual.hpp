#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "cdshear/errors.hpp"
#include "cdshear/materials.hpp"
#include "cdshear/numerics.hpp"

namespace cdshear {

enum class BranchLabel { GlobalMin, LocalMin, LocalMax, Degenerate, Undetermined };

inline const char* to_string(BranchLabel l) {
    switch (l) {
        case BranchLabel::GlobalMin: return "GlobalMin";
        case BranchLabel::LocalMin: return "LocalMin";
        case BranchLabel::LocalMax: return "LocalMax";
        case BranchLabel::Degenerate: return "Degenerate";
        case BranchLabel::Undetermined: return "Undetermined";
    }
    return "?";
}

/// One root zeta_k of the dual algebraic equation
///     4 alpha zeta^2 (dV*(zeta) - beta) = tau^2
/// at a point, with the recovered strain gamma = tau / (2 alpha zeta)
/// (convention: tau taken along e1, tau = (sqrt(tau_sq), 0)), its triality
/// label, and the primal/dual energy densities
///     P(gamma)   = V(Lambda(gamma)) - gamma . tau
///     P^d(zeta)  = beta zeta - V*(zeta) - tau^2 / (4 alpha zeta).
struct DualBranch {
    double zeta = 0.0;
    std::array<double, 2> gamma{0.0, 0.0};
    double gamma_sq = 0.0;
    double xi = 0.0;  // dV*(zeta); for Degenerate roots the measure value at zero stress
    BranchLabel label = BranchLabel::Undetermined;
    double P_primal = 0.0;
    double P_dual = 0.0;
    double residual = 0.0;
    int multiplicity = 1;
};

struct DualSolveOptions {
    int dim = 2;            // spatial dimension of gamma, for classification
    int scan_samples = 512; // negative-branch sign-change scan resolution
    double neg_bracket = 0; // 0 = auto: 10 (|beta|+1) max(1, dV(xi_ref))
};

/// V*(zeta) for any kind. Affine laws have a point conjugate: V*(A) = 3A - B,
/// and zeta is required to equal A.
inline double vstar_at(const CanonicalMaterial& m, double zeta) {
    if (m.is_affine()) {
        return 3.0 * m.affine_A() - m.affine_B();
    }
    return legendre_conjugate(m, zeta).vstar;
}

inline double dual_energy(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                          double zeta, double tau_sq) {
    if (zeta == 0.0) throw DegenerateBranch("dual energy undefined at zeta = 0");
    return meas.beta * zeta - vstar_at(m, zeta) - tau_sq / (4.0 * meas.alpha * zeta);
}

inline double primal_energy_density(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                    const std::array<double, 2>& gamma,
                                    const std::array<double, 2>& tau) {
    const double gsq = gamma[0] * gamma[0] + gamma[1] * gamma[1];
    return m.V(meas.lam(gsq)) - (gamma[0] * tau[0] + gamma[1] * tau[1]);
}

/// Eigenvalues of the gamma-space Hessian of W(gamma) = V(Lambda(gamma)):
/// {2 alpha zeta (multiplicity dim-1), 2 alpha zeta + 4 alpha^2 h |gamma|^2}.
inline std::array<double, 2> hessian_eigs(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                          double zeta, double gamma_sq) {
    const double e_perp = 2.0 * meas.alpha * zeta;
    const double h = m.ddV(meas.lam(gamma_sq));
    const double e_par = e_perp + 4.0 * meas.alpha * meas.alpha * h * gamma_sq;
    return {e_perp, e_par};
}

inline BranchLabel classify_branch(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                   double zeta, double gamma_sq, int dim = 2) {
    if (zeta >= 0.0) return BranchLabel::GlobalMin;
    const auto [e_perp, e_par] = hessian_eigs(m, meas, zeta, gamma_sq);
    const double tol = 1e-9 * (1.0 + std::fabs(2.0 * meas.alpha * zeta));
    if (std::fabs(e_par) < tol || (dim > 1 && std::fabs(e_perp) < tol))
        return BranchLabel::Undetermined;
    const bool par_pos = e_par > 0.0;
    if (dim == 1) return par_pos ? BranchLabel::LocalMin : BranchLabel::LocalMax;
    const bool perp_pos = e_perp > 0.0;
    if (par_pos && perp_pos) return BranchLabel::LocalMin;
    if (!par_pos && !perp_pos) return BranchLabel::LocalMax;
    return BranchLabel::Undetermined;
}

inline BranchLabel classify_branch(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                   const DualBranch& b, int dim = 2) {
    if (b.label == BranchLabel::Degenerate) return BranchLabel::Degenerate;
    return classify_branch(m, meas, b.zeta, b.gamma_sq, dim);
}

namespace detail {

inline DualBranch make_branch(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                              double zeta, double xi_conj, double tau_sq, int multiplicity,
                              int dim) {
    DualBranch b;
    b.zeta = zeta;
    b.multiplicity = multiplicity;
    b.xi = xi_conj;
    const double tau = std::sqrt(tau_sq);
    b.gamma = {tau / (2.0 * meas.alpha * zeta), 0.0};
    b.gamma_sq = tau_sq / (4.0 * meas.alpha * meas.alpha * zeta * zeta);
    b.residual = std::fabs(4.0 * meas.alpha * zeta * zeta * (xi_conj - meas.beta) - tau_sq);
    double xi_g = meas.lam(b.gamma_sq);
    if (xi_g < m.domain_lo()) xi_g = m.domain_lo();  // clip round-off at the domain edge
    b.P_primal = m.V(xi_g) - b.gamma[0] * tau;
    b.P_dual = meas.beta * zeta - (xi_conj * zeta - m.V(xi_conj)) - tau_sq / (4.0 * meas.alpha * zeta);
    b.label = classify_branch(m, meas, zeta, b.gamma_sq, dim);
    return b;
}

inline DualBranch make_degenerate_branch(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                         double xi_star, int multiplicity) {
    // zeta = 0 root (only at tau = 0). The stationary measure value is
    // xi* = dV*(0); a representative gamma on the degenerate set is stored.
    DualBranch b;
    b.zeta = 0.0;
    b.multiplicity = multiplicity;
    b.label = BranchLabel::Degenerate;
    b.xi = xi_star;
    b.gamma_sq = std::max(0.0, (xi_star - meas.beta) / meas.alpha);
    b.gamma = {std::sqrt(b.gamma_sq), 0.0};
    b.P_primal = m.V(xi_star);
    b.P_dual = m.V(xi_star);  // limit of beta z - V*(z) as z -> 0 is -V*(0) = V(xi*)
    b.residual = 0.0;
    return b;
}

inline DualBranch make_affine_branch(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                     double tau_sq, int dim) {
    const double A = m.affine_A();
    DualBranch b;
    b.zeta = A;
    b.multiplicity = 1;
    const double tau = std::sqrt(tau_sq);
    b.gamma = {tau / (2.0 * meas.alpha * A), 0.0};
    b.gamma_sq = tau_sq / (4.0 * meas.alpha * meas.alpha * A * A);
    b.xi = meas.lam(b.gamma_sq);
    b.residual = std::fabs(4.0 * meas.alpha * A * A * (b.xi - meas.beta) - tau_sq);
    b.P_primal = primal_energy_density(m, meas, b.gamma, {tau, 0.0});
    b.P_dual = meas.beta * A - (3.0 * A - m.affine_B()) - tau_sq / (4.0 * meas.alpha * A);
    b.label = classify_branch(m, meas, A, b.gamma_sq, dim);
    return b;
}

// Roots for Quadratic V: the dual equation is the monic cubic
//   zeta^3 + h0 (xi0 - beta) zeta^2 - h0 tau^2 / (4 alpha) = 0.
inline CubicRoots quadratic_dual_cubic(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                       double tau_sq) {
    const double h0 = m.quadratic_h0();
    const double a2 = h0 * (m.quadratic_xi0() - meas.beta);
    const double a0 = -h0 * tau_sq / (4.0 * meas.alpha);
    return solve_cubic_monic(a2, 0.0, a0);
}

// Generic route for materials without a polynomial dual equation:
// unique positive root by bracketed Newton (P^d is strictly concave on
// zeta > 0), negative roots by sign-change scanning.
inline std::vector<std::pair<double, double>> generic_dual_roots(const CanonicalMaterial& m,
                                                                 const QuadraticMeasure& meas,
                                                                 double tau_sq,
                                                                 const DualSolveOptions& opt) {
    auto conj_xi = [&](double zeta) -> std::optional<double> {
        try {
            return legendre_conjugate(m, zeta).xi;
        } catch (const RangeError&) {
            return std::nullopt;
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };
    auto g = [&](double zeta) -> std::optional<double> {
        const auto xi = conj_xi(zeta);
        if (!xi) return std::nullopt;
        return 4.0 * meas.alpha * zeta * zeta * (*xi - meas.beta) - tau_sq;
    };
    auto dg = [&](double zeta) {
        const auto xi = conj_xi(zeta);
        if (!xi) return 0.0;
        const double h = m.ddV(*xi);
        const double dxi = h > 0.0 ? 1.0 / h : 0.0;
        return 8.0 * meas.alpha * zeta * (*xi - meas.beta) + 4.0 * meas.alpha * zeta * zeta * dxi;
    };

    std::vector<std::pair<double, double>> roots;  // (zeta, xi)

    const double xi_ref = std::isfinite(m.domain_lo())
                              ? std::max(m.domain_lo() + 1.0, std::fabs(meas.beta) + 1.0)
                              : std::fabs(meas.beta) + 1.0;
    const double B_neg = opt.neg_bracket > 0.0
                             ? opt.neg_bracket
                             : 10.0 * (std::fabs(meas.beta) + 1.0) * std::max(1.0, m.dV(xi_ref));

    // positive root: geometric scan for a bracket, then Newton refinement
    if (tau_sq > 0.0) {
        double prev_z = 0.0;
        std::optional<double> prev_g;
        double found_lo = 0.0, found_hi = 0.0, flo = 0.0, fhi = 0.0;
        bool bracketed = false;
        const double z_start = std::min(1e-12 * B_neg, 1e-6 * std::sqrt(tau_sq) + 1e-18);
        for (double z = z_start; z <= 1e6 * B_neg; z *= 1.6) {
            const auto gz = g(z);
            if (gz) {
                if (prev_g && ((*prev_g < 0.0) != (*gz < 0.0))) {
                    found_lo = prev_z;
                    found_hi = z;
                    flo = *prev_g;
                    fhi = *gz;
                    bracketed = true;
                    break;
                }
                if (!prev_g && *gz > 0.0) break;  // already past the root region
                prev_z = z;
                prev_g = gz;
            }
        }
        if (bracketed) {
            auto gval = [&](double z) { return g(z).value_or(kNaN); };
            const double z = refine_root(gval, dg, found_lo, found_hi, flo, fhi);
            const auto xi = conj_xi(z);
            if (xi) roots.emplace_back(z, *xi);
        }
    } else {
        // tau = 0: the non-degenerate stationary value is zeta = dV(beta)
        if (meas.beta >= m.domain_lo()) {
            const double z = m.dV(meas.beta);
            if (z != 0.0) roots.emplace_back(z, meas.beta);
        }
    }

    // negative roots: scan [-B_neg, -eps]
    const double eps = 1e-12;
    const int n = std::max(2, opt.scan_samples);
    double prev_z = 0.0;
    std::optional<double> prev_g;
    for (int i = 0; i <= n; ++i) {
        const double z = -B_neg + (B_neg - eps) * static_cast<double>(i) / n;
        const auto gz = g(z);
        if (gz && prev_g && ((*prev_g < 0.0) != (*gz < 0.0))) {
            auto gval = [&](double zz) { return g(zz).value_or(kNaN); };
            const double zr = refine_root(gval, dg, prev_z, z, *prev_g, *gz);
            const auto xi = conj_xi(zr);
            if (xi && zr < 0.0) roots.emplace_back(zr, *xi);
        }
        if (gz) {
            prev_z = z;
            prev_g = gz;
        }
    }

    std::sort(roots.begin(), roots.end(), std::greater<>());
    std::vector<std::pair<double, double>> dedup;
    for (auto& r : roots) {
        if (dedup.empty() || std::fabs(dedup.back().first - r.first) > 1e-10 * (1.0 + std::fabs(r.first)))
            dedup.push_back(r);
    }
    return dedup;
}

}  // namespace detail

/// All real branches of the canonical dual algebraic equation
/// 4 alpha zeta^2 (dV*(zeta) - beta) = tau^2, sorted by zeta descending.
/// Roots whose conjugate point leaves the material domain are discarded;
/// zeta = 0 roots (possible only at tau = 0) are emitted as Degenerate
/// branches. Throws NoBranch when tau_sq > 0 yields no admissible root.
inline std::vector<DualBranch> solve_dual_equation(const CanonicalMaterial& m,
                                                   const QuadraticMeasure& meas, double tau_sq,
                                                   const DualSolveOptions& opt = {}) {
    if (!(tau_sq >= 0.0)) throw InvalidParameter("tau_sq must be >= 0");
    if (!(meas.alpha > 0.0)) throw InvalidParameter("measure alpha must be > 0");

    std::vector<DualBranch> out;

    if (m.is_affine()) {
        out.push_back(detail::make_affine_branch(m, meas, tau_sq, opt.dim));
        return out;
    }

    if (m.kind() == MaterialKind::Quadratic) {
        const CubicRoots r = detail::quadratic_dual_cubic(m, meas, tau_sq);
        for (int i = 0; i < r.count; ++i) {
            const double z = r.root[static_cast<std::size_t>(i)];
            const int mult = r.multiplicity[static_cast<std::size_t>(i)];
            if (z == 0.0 || (tau_sq == 0.0 && std::fabs(z) < 1e-14)) {
                const double xi_star = m.quadratic_xi0();
                if (xi_star >= m.domain_lo())
                    out.push_back(detail::make_degenerate_branch(m, meas, xi_star, mult));
                continue;
            }
            const double xi_conj = m.quadratic_xi0() + z / m.quadratic_h0();
            if (xi_conj < m.domain_lo()) continue;
            out.push_back(detail::make_branch(m, meas, z, xi_conj, tau_sq, mult, opt.dim));
        }
    } else if (m.kind() == MaterialKind::PolynomialConvex) {
        // polynomial in xi: 4 alpha dV(xi)^2 (xi - beta) - tau^2 = 0
        const std::vector<double> d = m.dV_coeffs();
        std::vector<double> d2(2 * d.size() - 1, 0.0);
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = 0; j < d.size(); ++j) d2[i + j] += d[i] * d[j];
        std::vector<double> p(d2.size() + 1, 0.0);
        for (std::size_t i = 0; i < d2.size(); ++i) {
            p[i + 1] += 4.0 * meas.alpha * d2[i];
            p[i] -= 4.0 * meas.alpha * meas.beta * d2[i];
        }
        p[0] -= tau_sq;
        std::vector<double> xi_roots = polynomial_real_roots(p);
        std::vector<std::pair<double, double>> pairs;  // (zeta, xi)
        for (double xi : xi_roots) {
            if (xi < m.domain_lo()) continue;
            // residual filter against spurious companion candidates
            double f = 0.0;
            for (std::size_t k = p.size(); k-- > 0;) f = f * xi + p[k];
            if (std::fabs(f) > 1e-7 * (1.0 + tau_sq)) continue;
            pairs.emplace_back(m.dV(xi), xi);
        }
        std::sort(pairs.begin(), pairs.end(), std::greater<>());
        for (auto& [z, xi] : pairs) {
            if (std::fabs(z) < 1e-13 * (1.0 + std::fabs(meas.beta))) {
                if (tau_sq == 0.0) out.push_back(detail::make_degenerate_branch(m, meas, xi, 2));
                continue;
            }
            out.push_back(detail::make_branch(m, meas, z, xi, tau_sq, 1, opt.dim));
        }
    } else {
        auto pairs = detail::generic_dual_roots(m, meas, tau_sq, opt);
        for (auto& [z, xi] : pairs)
            out.push_back(detail::make_branch(m, meas, z, xi, tau_sq, 1, opt.dim));
        if (tau_sq == 0.0) {
            try {
                const ConjugatePair c = legendre_conjugate(m, 0.0);
                out.push_back(detail::make_degenerate_branch(m, meas, c.xi, 2));
            } catch (const RangeError&) {
            }
        }
    }

    std::sort(out.begin(), out.end(),
              [](const DualBranch& a, const DualBranch& b) { return a.zeta > b.zeta; });
    if (out.empty() && tau_sq > 0.0) {
        std::ostringstream os;
        os << "no admissible dual branch for tau_sq = " << tau_sq;
        throw NoBranch(os.str());
    }
    return out;
}

using Mat3 = std::array<std::array<double, 3>, 3>;

inline double frobenius_sq(const Mat3& t) {
    double s = 0.0;
    for (const auto& row : t)
        for (double v : row) s += v * v;
    return s;
}

inline double det3(const Mat3& f) {
    return f[0][0] * (f[1][1] * f[2][2] - f[1][2] * f[2][1]) -
           f[0][1] * (f[1][0] * f[2][2] - f[1][2] * f[2][0]) +
           f[0][2] * (f[1][0] * f[2][1] - f[1][1] * f[2][0]);
}

/// A branch of the homogeneous 3-D problem: constant stress tensor T,
/// measure Lambda(F) = tr(F^T F), deformation gradient F_k = T / (2 zeta_k)
/// and affine deformation x -> F_k x. det F > 0 admissibility is reported
/// as a flag, not enforced.
struct HomogeneousBranch {
    double zeta = 0.0;
    Mat3 F{};
    double det_F = 0.0;
    bool admissible = false;
    BranchLabel label = BranchLabel::Undetermined;
    double P_primal = 0.0;
    double P_dual = 0.0;
    double residual = 0.0;
    int multiplicity = 1;
};

inline std::vector<HomogeneousBranch> solve_homogeneous_3d(const CanonicalMaterial& m,
                                                           const Mat3& T) {
    const QuadraticMeasure meas{1.0, 0.0};
    const double tau_sq = frobenius_sq(T);
    DualSolveOptions opt;
    opt.dim = 9;  // Hessian acts on R^{3x3}
    const std::vector<DualBranch> scalar = solve_dual_equation(m, meas, tau_sq, opt);

    std::vector<HomogeneousBranch> out;
    out.reserve(scalar.size());
    for (const DualBranch& b : scalar) {
        HomogeneousBranch hb;
        hb.zeta = b.zeta;
        hb.label = b.label;
        hb.multiplicity = b.multiplicity;
        hb.residual = b.residual;
        hb.P_dual = b.P_dual;
        if (b.label == BranchLabel::Degenerate) {
            hb.P_primal = b.P_primal;
            out.push_back(hb);
            continue;
        }
        double fdot = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                hb.F[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    T[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / (2.0 * b.zeta);
                fdot += hb.F[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                        T[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
        hb.det_F = det3(hb.F);
        hb.admissible = hb.det_F > 0.0;
        hb.P_primal = m.V(frobenius_sq(hb.F)) - fdot;
        out.push_back(hb);
    }
    return out;
}

}  // namespace cdshear
