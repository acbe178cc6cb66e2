#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cdshear/errors.hpp"
#include "cdshear/numerics.hpp"

namespace cdshear {

enum class MaterialKind { Affine, Quadratic, PolynomialConvex, NumericConvex };

inline const char* to_string(MaterialKind k) {
    switch (k) {
        case MaterialKind::Affine: return "affine";
        case MaterialKind::Quadratic: return "quadratic";
        case MaterialKind::PolynomialConvex: return "polynomial";
        case MaterialKind::NumericConvex: return "numeric";
    }
    return "?";
}

/// Stored-energy density V(xi) on the scalar measure xi, dimensionless per
/// unit reference volume. dV is the stress-like dual variable zeta, ddV the
/// constitutive stiffness h(xi).
///
/// Kinds:
///   Affine(A, B)               V = A (xi - 3) + B,  A > 0
///   Quadratic(h0, xi0, c0)     V = h0 (xi - xi0)^2 / 2 + c0,  h0 > 0
///   PolynomialConvex(coeffs)   V = sum_k c_k xi^k, convexity spot-checked
///   NumericConvex(callables)   user V (and optional dV), derivatives by
///                              central differences when not supplied
class CanonicalMaterial {
public:
    static CanonicalMaterial affine(double A, double B, double domain_lo = 0.0) {
        if (!(A > 0.0)) throw InvalidParameter("affine material requires A > 0");
        CanonicalMaterial m;
        m.kind_ = MaterialKind::Affine;
        m.a_ = A;
        m.b_ = B;
        m.domain_lo_ = domain_lo;
        return m;
    }

    static CanonicalMaterial quadratic(double h0, double xi0, double c0,
                                       double domain_lo = -kInf) {
        if (!(h0 > 0.0)) throw InvalidParameter("quadratic material requires h0 > 0");
        CanonicalMaterial m;
        m.kind_ = MaterialKind::Quadratic;
        m.h0_ = h0;
        m.xi0_ = xi0;
        m.c0_ = c0;
        m.domain_lo_ = domain_lo;
        return m;
    }

    static CanonicalMaterial polynomial(std::vector<double> coeffs, double domain_lo = 0.0) {
        if (coeffs.size() < 2) throw InvalidParameter("polynomial material needs degree >= 1");
        CanonicalMaterial m;
        m.kind_ = MaterialKind::PolynomialConvex;
        m.coeffs_ = std::move(coeffs);
        m.domain_lo_ = domain_lo;
        m.check_convexity_by_sampling();
        return m;
    }

    static CanonicalMaterial numeric(std::function<double(double)> V, double domain_lo,
                                     std::function<double(double)> dV = nullptr) {
        if (!V) throw InvalidParameter("numeric material needs a V callable");
        CanonicalMaterial m;
        m.kind_ = MaterialKind::NumericConvex;
        m.fV_ = std::move(V);
        m.fdV_ = std::move(dV);
        m.domain_lo_ = domain_lo;
        m.check_convexity_by_sampling();
        return m;
    }

    MaterialKind kind() const { return kind_; }
    double domain_lo() const { return domain_lo_; }
    bool is_affine() const { return kind_ == MaterialKind::Affine; }

    // Affine parameters (valid for the Affine kind only).
    double affine_A() const { return a_; }
    double affine_B() const { return b_; }

    // Quadratic parameters (valid for the Quadratic kind only).
    double quadratic_h0() const { return h0_; }
    double quadratic_xi0() const { return xi0_; }
    double quadratic_c0() const { return c0_; }

    double V(double xi) const {
        require_in_domain(xi);
        switch (kind_) {
            case MaterialKind::Affine: return a_ * (xi - 3.0) + b_;
            case MaterialKind::Quadratic: {
                const double d = xi - xi0_;
                return 0.5 * h0_ * d * d + c0_;
            }
            case MaterialKind::PolynomialConvex: {
                double v = 0.0;
                for (std::size_t k = coeffs_.size(); k-- > 0;) v = v * xi + coeffs_[k];
                return v;
            }
            case MaterialKind::NumericConvex: return fV_(xi);
        }
        return kNaN;
    }

    double dV(double xi) const {
        require_in_domain(xi);
        switch (kind_) {
            case MaterialKind::Affine: return a_;
            case MaterialKind::Quadratic: return h0_ * (xi - xi0_);
            case MaterialKind::PolynomialConvex: {
                double v = 0.0;
                for (std::size_t k = coeffs_.size(); k-- > 1;)
                    v = v * xi + static_cast<double>(k) * coeffs_[k];
                return v;
            }
            case MaterialKind::NumericConvex:
                if (fdV_) return fdV_(xi);
                return central_diff(fV_, xi, fd_step(xi));
        }
        return kNaN;
    }

    double ddV(double xi) const {
        require_in_domain(xi);
        switch (kind_) {
            case MaterialKind::Affine: return 0.0;
            case MaterialKind::Quadratic: return h0_;
            case MaterialKind::PolynomialConvex: {
                double v = 0.0;
                for (std::size_t k = coeffs_.size(); k-- > 2;)
                    v = v * xi + static_cast<double>(k * (k - 1)) * coeffs_[k];
                return v;
            }
            case MaterialKind::NumericConvex:
                if (fdV_) return central_diff(fdV_, xi, fd_step(xi));
                return central_diff2(fV_, xi, std::sqrt(fd_step(xi)) * 1e-1);
        }
        return kNaN;
    }

    /// Coefficients of dV as a polynomial in xi (PolynomialConvex only).
    std::vector<double> dV_coeffs() const {
        std::vector<double> d;
        for (std::size_t k = 1; k < coeffs_.size(); ++k)
            d.push_back(static_cast<double>(k) * coeffs_[k]);
        return d;
    }

private:
    void require_in_domain(double xi) const {
        if (xi < domain_lo_ || !std::isfinite(xi)) {
            std::ostringstream os;
            os << "xi = " << xi << " below material domain bound " << domain_lo_;
            throw DomainError(os.str());
        }
    }

    double fd_step(double xi) const { return 1e-6 * (1.0 + std::fabs(xi)); }

    void check_convexity_by_sampling() {
        const double lo = std::isfinite(domain_lo_) ? domain_lo_ : -8.0;
        for (int i = 0; i <= 64; ++i) {
            const double xi = lo + (8.0 + std::fabs(lo)) * i / 64.0 + 1e-9;
            if (ddV(xi) < -1e-9 * (1.0 + std::fabs(dV(xi)))) {
                std::ostringstream os;
                os << "material declared convex but ddV(" << xi << ") = " << ddV(xi) << " < 0";
                throw InvalidParameter(os.str());
            }
        }
    }

    MaterialKind kind_ = MaterialKind::Affine;
    double domain_lo_ = 0.0;
    double a_ = 1.0, b_ = 0.0;           // affine
    double h0_ = 1.0, xi0_ = 0.0, c0_ = 0.0;  // quadratic
    std::vector<double> coeffs_;         // polynomial
    std::function<double(double)> fV_, fdV_;  // numeric
};

/// A point on the graph of the Legendre transform: xi = dV*(zeta) solving
/// zeta = dV(xi), and vstar = V*(zeta) = xi zeta - V(xi). fenchel_gap is the
/// duality-relation residual |zeta - dV(xi)| of the solved pair.
struct ConjugatePair {
    double zeta = 0.0;
    double xi = 0.0;
    double vstar = 0.0;
    double fenchel_gap = 0.0;
};

namespace detail {

inline ConjugatePair conjugate_numeric(const CanonicalMaterial& m, double zeta) {
    // bracketed monotone root-find on dV(xi) = zeta; dV is nondecreasing
    const double lo_bound = m.domain_lo();
    double x0 = std::isfinite(lo_bound) ? lo_bound + 1.0 : 0.0;
    auto g = [&](double xi) { return m.dV(xi) - zeta; };

    double lo = x0, hi = x0;
    double glo = g(lo), ghi = glo;
    double step = 1.0;
    for (int it = 0; it < 200 && glo > 0.0; ++it) {
        const double cand = lo - step;
        if (std::isfinite(lo_bound) && cand <= lo_bound) {
            lo = lo_bound + 1e-14 * (1.0 + std::fabs(lo_bound));
            glo = g(lo);
            break;
        }
        lo = cand;
        glo = g(lo);
        step *= 2.0;
    }
    step = 1.0;
    for (int it = 0; it < 200 && ghi < 0.0; ++it) {
        hi += step;
        ghi = g(hi);
        step *= 2.0;
    }
    if (glo > 0.0 || ghi < 0.0) {
        std::ostringstream os;
        os << "zeta = " << zeta << " outside the range of dV";
        throw RangeError(os.str());
    }
    auto dg = [&](double xi) { return m.ddV(xi); };
    double xi = refine_root(g, dg, lo, hi, glo, ghi);
    // drive the residual to the 1e-12 absolute target
    for (int it = 0; it < 8 && std::fabs(g(xi)) > 1e-12; ++it) {
        const double d = m.ddV(xi);
        if (d <= 0.0) break;
        xi -= g(xi) / d;
    }
    ConjugatePair p;
    p.zeta = zeta;
    p.xi = xi;
    p.vstar = xi * zeta - m.V(xi);
    p.fenchel_gap = std::fabs(g(xi));
    return p;
}

}  // namespace detail

/// Legendre conjugate point of a strictly convex material at zeta.
/// Throws DegenerateConjugate for the Affine kind and RangeError when zeta
/// lies outside the range of dV on the material domain.
inline ConjugatePair legendre_conjugate(const CanonicalMaterial& m, double zeta) {
    switch (m.kind()) {
        case MaterialKind::Affine:
            throw DegenerateConjugate(
                "affine material has constant dV; its conjugate is an indicator");
        case MaterialKind::Quadratic: {
            ConjugatePair p;
            p.zeta = zeta;
            p.xi = m.quadratic_xi0() + zeta / m.quadratic_h0();
            if (p.xi < m.domain_lo()) {
                std::ostringstream os;
                os << "zeta = " << zeta << " maps below the material domain";
                throw RangeError(os.str());
            }
            p.vstar = p.xi * zeta - m.V(p.xi);
            p.fenchel_gap = std::fabs(zeta - m.dV(p.xi));
            return p;
        }
        case MaterialKind::PolynomialConvex: {
            std::vector<double> d = m.dV_coeffs();
            d[0] -= zeta;
            const std::vector<double> roots = polynomial_real_roots(d);
            for (double xi : roots) {
                if (xi >= m.domain_lo() && std::fabs(m.dV(xi) - zeta) <= 1e-9 * (1.0 + std::fabs(zeta))) {
                    ConjugatePair p;
                    p.zeta = zeta;
                    p.xi = xi;
                    p.vstar = xi * zeta - m.V(xi);
                    p.fenchel_gap = std::fabs(zeta - m.dV(xi));
                    return p;
                }
            }
            std::ostringstream os;
            os << "zeta = " << zeta << " outside the range of dV on the domain";
            throw RangeError(os.str());
        }
        case MaterialKind::NumericConvex:
            return detail::conjugate_numeric(m, zeta);
    }
    throw Error("unreachable");
}

/// Geometric measure Lambda(gamma) = alpha |gamma|^2 + beta.
/// Anti-plane shear with pre-stretch lambda: alpha = 1, beta = lambda_1 =
/// lambda^2 + 2/lambda >= 3. The shifted double-well measure uses
/// alpha = 1/2, beta = -1.
struct QuadraticMeasure {
    double alpha = 1.0;
    double beta = 3.0;

    double lam(double gamma_sq) const { return alpha * gamma_sq + beta; }

    static QuadraticMeasure anti_plane(double lambda) {
        if (!(lambda > 0.0)) throw InvalidParameter("prestretch lambda must be > 0");
        return {1.0, lambda * lambda + 2.0 / lambda};
    }

    static QuadraticMeasure double_well() { return {0.5, -1.0}; }
};

inline double lambda1_of(double lambda) { return lambda * lambda + 2.0 / lambda; }
inline double lambda2_of(double lambda) { return 1.0 / (lambda * lambda) + 2.0 * lambda; }

/// Reduce a Mooney-Rivlin law c1 (I1 - 3) + c2 (I2 - 3) to its equivalent
/// affine generalized neo-Hookean form A (I1 - 3) + B on the anti-plane
/// manifold I2 = I1/lambda + lambda_2 - lambda_1/lambda.
inline CanonicalMaterial mooney_rivlin_reduce(double c1, double c2, double lambda) {
    if (!(lambda > 0.0)) throw InvalidParameter("prestretch lambda must be > 0");
    const double A = c1 + c2 / lambda;
    if (!(A > 0.0)) throw InvalidParameter("mooney_rivlin reduction requires c1 + c2/lambda > 0");
    const double B =
        c2 * (3.0 / lambda - 3.0 + lambda2_of(lambda) - lambda1_of(lambda) / lambda);
    return CanonicalMaterial::affine(A, B);
}

}  // namespace cdshear
