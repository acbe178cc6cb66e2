#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "cdshear/dual.hpp"
#include "support.hpp"

using namespace cdshear;

namespace {
const CanonicalMaterial dw_mat = CanonicalMaterial::quadratic(1.0, 0.0, 0.0);
const QuadraticMeasure dw_meas = QuadraticMeasure::double_well();
}  // namespace

TEST_CASE("double-well branch structure at the factorization point") {
    // 2 zeta^2 (zeta + 1) = 8/27 factors as (zeta - 1/3)(zeta + 2/3)^2 = 0
    const auto br = solve_dual_equation(dw_mat, dw_meas, 8.0 / 27.0);
    REQUIRE(br.size() == 2);
    CHECK(br[0].zeta == Catch::Approx(1.0 / 3.0).margin(1e-9));
    CHECK(br[0].multiplicity == 1);
    CHECK(br[1].zeta == Catch::Approx(-2.0 / 3.0).margin(1e-9));
    CHECK(br[1].multiplicity == 2);
}

TEST_CASE("double-well at zero load") {
    const auto br = solve_dual_equation(dw_mat, dw_meas, 0.0);
    REQUIRE(br.size() == 2);
    CHECK(br[0].zeta == Catch::Approx(0.0).margin(1e-12));
    CHECK(br[0].label == BranchLabel::Degenerate);
    CHECK(br[0].multiplicity == 2);
    CHECK(br[1].zeta == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("double-well above the uniqueness threshold") {
    for (double tau_sq : {0.3, 1.0, 10.0}) {
        const auto br = solve_dual_equation(dw_mat, dw_meas, tau_sq);
        REQUIRE(br.size() == 1);
        CHECK(br[0].zeta > 0.0);
        CHECK(br[0].label == BranchLabel::GlobalMin);
    }
}

TEST_CASE("double-well below the uniqueness threshold has three branches") {
    for (double tau_sq : {0.1, 0.2, 0.29}) {
        const auto br = solve_dual_equation(dw_mat, dw_meas, tau_sq);
        REQUIRE(br.size() == 3);
        CHECK(br[0].zeta >= 0.0);
        CHECK(0.0 >= br[1].zeta);
        CHECK(br[1].zeta >= br[2].zeta);
    }
}

TEST_CASE("affine laws produce the single constitutive branch") {
    const auto m = CanonicalMaterial::affine(1.3, 0.2, -kInf);
    for (double tau_sq : {0.0, 0.5, 4.0}) {
        const auto br = solve_dual_equation(m, dw_meas, tau_sq);
        REQUIRE(br.size() == 1);
        CHECK(br[0].zeta == Catch::Approx(1.3));
        CHECK(br[0].label == BranchLabel::GlobalMin);
        CHECK(br[0].residual <= 1e-12);
    }
}

TEST_CASE("classification of the golden global branch") {
    const auto br = solve_dual_equation(dw_mat, dw_meas, 8.0 / 27.0);
    CHECK(br[0].gamma_sq == Catch::Approx(8.0 / 3.0).margin(1e-9));
    const auto eigs = hessian_eigs(dw_mat, dw_meas, br[0].zeta, br[0].gamma_sq);
    CHECK(eigs[0] == Catch::Approx(1.0 / 3.0).margin(1e-9));
    CHECK(eigs[1] == Catch::Approx(3.0).margin(1e-8));
    CHECK(br[0].label == BranchLabel::GlobalMin);
    // the double root has a singular Hessian: boundary of the trichotomy
    CHECK(br[1].label == BranchLabel::Undetermined);
}

TEST_CASE("zero-load negative branch is the hat apex, a local max") {
    const auto br = solve_dual_equation(dw_mat, dw_meas, 0.0);
    const auto& apex = br[1];
    CHECK(apex.gamma_sq == Catch::Approx(0.0).margin(1e-12));
    const auto eigs = hessian_eigs(dw_mat, dw_meas, apex.zeta, apex.gamma_sq);
    CHECK(eigs[0] == Catch::Approx(-1.0).margin(1e-12));
    CHECK(eigs[1] == Catch::Approx(-1.0).margin(1e-12));
    CHECK(apex.label == BranchLabel::LocalMax);
}

TEST_CASE("golden energies at tau_sq = 8/27") {
    // independent arithmetic for the dual density: beta z - V*(z) - tau^2/(4 a z)
    const double z = 1.0 / 3.0;
    const double tau_sq = 8.0 / 27.0;
    const double oracle = -1.0 * z - 0.5 * z * z - tau_sq / (4.0 * 0.5 * z);
    REQUIRE(oracle == Catch::Approx(-5.0 / 6.0).margin(1e-15));

    CHECK(dual_energy(dw_mat, dw_meas, z, tau_sq) == Catch::Approx(-5.0 / 6.0).margin(1e-12));

    const double tau = std::sqrt(tau_sq);
    const std::array<double, 2> gamma{3.0 * tau, 0.0};  // gamma = tau / (2 a z)
    CHECK(primal_energy_density(dw_mat, dw_meas, gamma, {tau, 0.0}) ==
          Catch::Approx(-5.0 / 6.0).margin(1e-12));

    const auto br = solve_dual_equation(dw_mat, dw_meas, tau_sq);
    CHECK(br[0].P_primal == Catch::Approx(-5.0 / 6.0).margin(1e-9));
    CHECK(br[0].P_dual == Catch::Approx(-5.0 / 6.0).margin(1e-9));
}

TEST_CASE("affine hand-computed energy") {
    const auto m = CanonicalMaterial::affine(1.0, 0.0);
    const QuadraticMeasure meas = QuadraticMeasure::anti_plane(1.0);
    const auto br = solve_dual_equation(m, meas, 1.0);
    REQUIRE(br.size() == 1);
    CHECK(br[0].gamma[0] == Catch::Approx(0.5));
    CHECK(br[0].xi == Catch::Approx(3.25));
    CHECK(br[0].P_primal == Catch::Approx(-0.25).margin(1e-12));
    CHECK(br[0].P_dual == Catch::Approx(-0.25).margin(1e-12));
}

TEST_CASE("dual energy rejects the degenerate point") {
    CHECK_THROWS_AS(dual_energy(dw_mat, dw_meas, 0.0, 1.0), DegenerateBranch);
}

TEST_CASE("strong duality across random draws") {
    int branches_seen = 0;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const auto d = testsupport::draw_case(101, k);
        const auto br = solve_dual_equation(d.material, d.measure, d.tau_sq);
        for (const auto& b : br) {
            if (b.label == BranchLabel::Degenerate) continue;
            ++branches_seen;
            CHECK(std::fabs(b.P_primal - b.P_dual) <=
                  1e-8 * std::max(1.0, std::fabs(b.P_primal)));
            CHECK(b.residual <= 1e-9 * std::max(1.0, d.tau_sq));
            if (b.label == BranchLabel::GlobalMin) CHECK(b.zeta >= 0.0);
            if (b.label == BranchLabel::LocalMin || b.label == BranchLabel::LocalMax)
                CHECK(b.zeta < 0.0);
        }
    }
    CHECK(branches_seen > 1100);
}

TEST_CASE("analytic Hessian eigenvalues match finite differences") {
    for (std::uint64_t k = 0; k < 400; ++k) {
        const auto d = testsupport::draw_case(211, k);
        const int dim = 1 + static_cast<int>(splitmix64(211, k + 7) % 2);
        DualSolveOptions opt;
        opt.dim = dim;
        const auto br = solve_dual_equation(d.material, d.measure, d.tau_sq, opt);
        for (const auto& b : br) {
            if (b.label == BranchLabel::Degenerate) continue;
            const auto fd = testsupport::fd_hessian_eigs(d.material, d.measure, b.gamma, dim);
            const auto an = hessian_eigs(d.material, d.measure, b.zeta, b.gamma_sq);
            if (dim == 1) {
                CHECK(fd[0] == Catch::Approx(an[1]).margin(1e-5 * (1.0 + std::fabs(an[1]))));
            } else {
                const double hi = std::max(an[0], an[1]);
                const double lo = std::min(an[0], an[1]);
                CHECK(fd[0] == Catch::Approx(hi).margin(1e-5 * (1.0 + std::fabs(hi))));
                CHECK(fd[1] == Catch::Approx(lo).margin(1e-5 * (1.0 + std::fabs(lo))));
            }
        }
    }
}

TEST_CASE("triality energy ordering in the scalar case") {
    DualSolveOptions opt;
    opt.dim = 1;
    int full_triples = 0;
    for (std::uint64_t k = 0; k < 2000; ++k) {
        const double tau_sq = uniform_in(307, 2 * k, 0.0, 0.25);
        const auto br = solve_dual_equation(dw_mat, dw_meas, tau_sq, opt);
        std::map<BranchLabel, double> p;
        for (const auto& b : br) p[b.label] = b.P_primal;
        if (p.count(BranchLabel::GlobalMin) && p.count(BranchLabel::LocalMin) &&
            p.count(BranchLabel::LocalMax)) {
            ++full_triples;
            CHECK(p[BranchLabel::GlobalMin] <= p[BranchLabel::LocalMin] + 1e-12);
            CHECK(p[BranchLabel::LocalMin] <= p[BranchLabel::LocalMax] + 1e-12);
        }
    }
    CHECK(full_triples > 1000);
}

TEST_CASE("scaling invariance of branches") {
    for (double c : {0.5, 2.0, 10.0}) {
        for (std::uint64_t k = 0; k < 200; ++k) {
            const auto d = testsupport::draw_case(401, k);
            if (d.material.kind() == MaterialKind::PolynomialConvex) continue;
            const auto base = solve_dual_equation(d.material, d.measure, d.tau_sq);
            const auto scaled_m = testsupport::scale_material(d.material, c);
            const auto scaled = solve_dual_equation(scaled_m, d.measure, c * c * d.tau_sq);
            REQUIRE(scaled.size() == base.size());
            for (std::size_t i = 0; i < base.size(); ++i) {
                CHECK(scaled[i].label == base[i].label);
                CHECK(std::fabs(scaled[i].zeta - c * base[i].zeta) <=
                      1e-10 * std::max(1.0, std::fabs(c * base[i].zeta)));
                CHECK(std::fabs(scaled[i].gamma[0] - base[i].gamma[0]) <=
                      1e-10 * std::max(1.0, std::fabs(base[i].gamma[0])));
            }
        }
    }
}

TEST_CASE("dual energy is concave on the positive half-line") {
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto d = testsupport::draw_case(503, k);
        if (d.material.is_affine()) continue;
        for (int i = 1; i <= 8; ++i) {
            const double z = 0.15 * i;
            try {
                const double h = 1e-4;
                const double d2 = (dual_energy(d.material, d.measure, z + h, d.tau_sq) -
                                   2.0 * dual_energy(d.material, d.measure, z, d.tau_sq) +
                                   dual_energy(d.material, d.measure, z - h, d.tau_sq)) /
                                  (h * h);
                CHECK(d2 < 1e-6);
            } catch (const RangeError&) {
            } catch (const DomainError&) {
            }
        }
    }
}

TEST_CASE("polynomial material branches satisfy the dual equation") {
    const auto m = CanonicalMaterial::polynomial({0.0, 0.0, 0.5, 0.0, 0.25}, -kInf);
    const QuadraticMeasure meas{0.5, -1.0};
    for (double tau_sq : {0.05, 0.4, 2.0}) {
        const auto br = solve_dual_equation(m, meas, tau_sq);
        REQUIRE(!br.empty());
        CHECK(br[0].zeta > 0.0);
        for (const auto& b : br) {
            CHECK(b.residual <= 1e-9 * std::max(1.0, tau_sq));
        }
    }
}

TEST_CASE("numeric material agrees with its closed-form twin") {
    // generic loads only: the sign-change scan cannot see the measure-zero
    // double root at the exact discriminant boundary 8/27
    const auto closed = CanonicalMaterial::quadratic(1.0, 0.0, 0.0);
    const auto numeric = CanonicalMaterial::numeric(
        [](double xi) { return 0.5 * xi * xi; }, -kInf, [](double xi) { return xi; });
    for (double tau_sq : {0.1, 0.27, 1.0}) {
        const auto a = solve_dual_equation(closed, dw_meas, tau_sq);
        const auto b = solve_dual_equation(numeric, dw_meas, tau_sq);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(b[i].zeta == Catch::Approx(a[i].zeta).margin(1e-7));
    }
}

TEST_CASE("domain-filtered roots surface as NoBranch") {
    // every root's conjugate point xi = xi0 + zeta/h0 = -5 + zeta stays below
    // the domain bound 0 for this load, so no branch is admissible
    const auto m = CanonicalMaterial::quadratic(1.0, -5.0, 0.0, /*domain_lo=*/0.0);
    const QuadraticMeasure meas{1.0, -6.0};
    CHECK_THROWS_AS(solve_dual_equation(m, meas, 0.1), NoBranch);
}

TEST_CASE("homogeneous 3-D: zero stress tensor") {
    const auto m = CanonicalMaterial::quadratic(1.0, 0.0, 0.0, /*domain_lo=*/0.0);
    const Mat3 T{};
    const auto br = solve_homogeneous_3d(m, T);
    REQUIRE(!br.empty());
    for (const auto& b : br) CHECK(b.label == BranchLabel::Degenerate);
}

TEST_CASE("homogeneous 3-D: rank-one stress reduces to the scalar case") {
    const auto m = CanonicalMaterial::quadratic(1.0, 1.0, 0.0, -kInf);
    Mat3 T{};
    T[0][0] = 0.8;
    const auto br3 = solve_homogeneous_3d(m, T);
    const auto br1 = solve_dual_equation(m, {1.0, 0.0}, 0.64);
    REQUIRE(br3.size() == br1.size());
    for (std::size_t i = 0; i < br3.size(); ++i) {
        CHECK(br3[i].zeta == Catch::Approx(br1[i].zeta).margin(1e-10));
        if (br3[i].label != BranchLabel::Degenerate)
            CHECK(br3[i].F[0][0] == Catch::Approx(0.8 / (2.0 * br3[i].zeta)).margin(1e-10));
    }
}

TEST_CASE("homogeneous 3-D: isotropic stress and the det F flag") {
    const auto m = CanonicalMaterial::quadratic(1.0, 1.0, 0.0, -kInf);
    const double s = 1.2;
    Mat3 T{};
    for (int i = 0; i < 3; ++i) T[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = s;
    const auto br = solve_homogeneous_3d(m, T);
    REQUIRE(!br.empty());
    for (const auto& b : br) {
        if (b.label == BranchLabel::Degenerate) continue;
        const double f = s / (2.0 * b.zeta);
        CHECK(b.F[0][0] == Catch::Approx(f).margin(1e-12));
        CHECK(b.det_F == Catch::Approx(f * f * f).margin(1e-12 * (1.0 + std::fabs(f * f * f))));
        CHECK(b.admissible == (b.det_F > 0.0));
        CHECK(std::fabs(b.P_primal - b.P_dual) <= 1e-8 * std::max(1.0, std::fabs(b.P_primal)));
    }
}

TEST_CASE("cardano and companion routes agree on the dual cubic") {
    for (std::uint64_t k = 0; k < 300; ++k) {
        const double h0 = uniform_in(601, 3 * k, 0.2, 3.0);
        const double xi0 = uniform_in(601, 3 * k + 1, -2.0, 2.0);
        const double beta = uniform_in(601, 3 * k + 2, -2.0, 4.0);
        const double alpha = 0.5;
        const double tau_sq = uniform_in(601, 3 * k + 3, 0.0, 4.0);
        const double a2 = h0 * (xi0 - beta);
        const double a0 = -h0 * tau_sq / (4.0 * alpha);
        const CubicRoots r = solve_cubic_monic(a2, 0.0, a0);
        if (std::fabs(r.discriminant) < 1e-6) continue;
        const auto comp = polynomial_real_roots({a0, 0.0, a2, 1.0});
        REQUIRE(static_cast<int>(comp.size()) == r.count);
        for (int i = 0; i < r.count; ++i)
            CHECK(comp[static_cast<std::size_t>(i)] ==
                  Catch::Approx(r.root[static_cast<std::size_t>(i)]).margin(1e-9));
    }
}

TEST_CASE("root count matches the discriminant sign for the double-well") {
    for (std::uint64_t k = 0; k < 200; ++k) {
        const double tau_sq = uniform_in(701, k, 1e-4, 1.0);
        const auto r = solve_cubic_monic(1.0, 0.0, -tau_sq / 2.0);
        const auto br = solve_dual_equation(dw_mat, dw_meas, tau_sq);
        if (r.discriminant > 1e-9) {
            CHECK(br.size() == 3);
        } else if (r.discriminant < -1e-9) {
            CHECK(br.size() == 1);
        }
    }
}
