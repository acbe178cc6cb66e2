#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "cdshear/dual.hpp"
#include "cdshear/materials.hpp"
#include "cdshear/numerics.hpp"

namespace testsupport {

using cdshear::CanonicalMaterial;
using cdshear::QuadraticMeasure;

// W(gamma) = V(alpha |gamma|^2 + beta) as a plain callable, for
// finite-difference oracles independent of the analytic Hessian path.
inline std::function<double(std::array<double, 2>)> w_of_gamma(const CanonicalMaterial& m,
                                                               const QuadraticMeasure& meas) {
    return [m, meas](std::array<double, 2> g) {
        return m.V(meas.lam(g[0] * g[0] + g[1] * g[1]));
    };
}

// Central-difference Hessian of W(gamma) with one Richardson step,
// restricted to n in {1, 2}. Returns eigenvalues sorted descending.
inline std::vector<double> fd_hessian_eigs(const CanonicalMaterial& m, const QuadraticMeasure& meas,
                                           std::array<double, 2> g, int dim) {
    auto W = w_of_gamma(m, meas);
    const double h = 1e-3 * (1.0 + std::sqrt(g[0] * g[0] + g[1] * g[1]));
    auto at = [&](double dx, double dy) {
        return W({g[0] + dx, g[1] + dy});
    };
    auto dxx_h = [&](double hh) { return (at(hh, 0) - 2.0 * at(0, 0) + at(-hh, 0)) / (hh * hh); };
    auto dyy_h = [&](double hh) { return (at(0, hh) - 2.0 * at(0, 0) + at(0, -hh)) / (hh * hh); };
    auto dxy_h = [&](double hh) {
        return (at(hh, hh) - at(hh, -hh) - at(-hh, hh) + at(-hh, -hh)) / (4.0 * hh * hh);
    };
    auto rich = [&](auto f) { return (4.0 * f(h / 2.0) - f(h)) / 3.0; };
    if (dim == 1) return {rich(dxx_h)};
    const auto e = cdshear::sym_eigs_2x2(rich(dxx_h), rich(dxy_h), rich(dyy_h));
    return {e[0], e[1]};
}

// V -> c V for the scaling-invariance property.
inline CanonicalMaterial scale_material(const CanonicalMaterial& m, double c) {
    switch (m.kind()) {
        case cdshear::MaterialKind::Affine:
            return CanonicalMaterial::affine(c * m.affine_A(), c * m.affine_B(), m.domain_lo());
        case cdshear::MaterialKind::Quadratic:
            return CanonicalMaterial::quadratic(c * m.quadratic_h0(), m.quadratic_xi0(),
                                                c * m.quadratic_c0(), m.domain_lo());
        default: {
            const CanonicalMaterial base = m;
            return CanonicalMaterial::numeric(
                [base, c](double xi) { return c * base.V(xi); }, m.domain_lo(),
                [base, c](double xi) { return c * base.dV(xi); });
        }
    }
}

struct RandomDraw {
    CanonicalMaterial material;
    QuadraticMeasure measure;
    double tau_sq;
};

// Deterministic draw k of a convex material / measure / load triple.
inline RandomDraw draw_case(std::uint64_t seed, std::uint64_t k) {
    using cdshear::uniform_in;
    const int kind = static_cast<int>(cdshear::splitmix64(seed, 7919 * k) % 3);
    QuadraticMeasure meas{uniform_in(seed, 10 * k + 1, 0.2, 2.0),
                          uniform_in(seed, 10 * k + 2, -2.0, 4.0)};
    const double tau_sq = uniform_in(seed, 10 * k + 3, 0.0, 6.0);
    if (kind == 0) {
        auto m = CanonicalMaterial::quadratic(uniform_in(seed, 10 * k + 4, 0.2, 3.0),
                                              uniform_in(seed, 10 * k + 5, -2.0, 2.0),
                                              uniform_in(seed, 10 * k + 6, -1.0, 1.0),
                                              -cdshear::kInf);
        return {m, meas, tau_sq};
    }
    if (kind == 1) {
        // V = c1 xi + c2 xi^2 + c4 xi^4, convex on all of R
        std::vector<double> c = {0.0, uniform_in(seed, 10 * k + 4, -1.0, 1.0),
                                 uniform_in(seed, 10 * k + 5, 0.1, 2.0), 0.0,
                                 uniform_in(seed, 10 * k + 6, 0.0, 0.5)};
        return {CanonicalMaterial::polynomial(c, -cdshear::kInf), meas, tau_sq};
    }
    return {CanonicalMaterial::affine(uniform_in(seed, 10 * k + 4, 0.2, 3.0),
                                      uniform_in(seed, 10 * k + 5, -1.0, 1.0), -cdshear::kInf),
            meas, tau_sq};
}

}  // namespace testsupport
