#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cdshear/materials.hpp"
#include "support.hpp"

using namespace cdshear;

TEST_CASE("quadratic energy evaluation") {
    const auto m = CanonicalMaterial::quadratic(1.0, 0.0, 0.0);
    CHECK(m.V(1.0 / 3.0) == Catch::Approx(1.0 / 18.0).margin(1e-15));
    CHECK(m.dV(1.0 / 3.0) == Catch::Approx(1.0 / 3.0).margin(1e-15));
    CHECK(m.ddV(1.0 / 3.0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("affine energy evaluation") {
    const auto m = CanonicalMaterial::affine(1.0, 0.0);
    CHECK(m.V(5.0) == Catch::Approx(2.0));
    CHECK(m.dV(5.0) == Catch::Approx(1.0));
    CHECK(m.ddV(5.0) == 0.0);
}

TEST_CASE("polynomial energy evaluation at the expansion point") {
    // V = (xi-3)^2/2 + 2(xi-3) = 0.5 xi^2 - xi - 1.5
    const auto m = CanonicalMaterial::polynomial({-1.5, -1.0, 0.5});
    CHECK(m.V(3.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(m.dV(3.0) == Catch::Approx(2.0).margin(1e-15));
    CHECK(m.ddV(3.0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("domain bound is enforced") {
    const auto m = CanonicalMaterial::quadratic(1.0, 0.0, 0.0, /*domain_lo=*/0.0);
    CHECK_THROWS_AS(m.V(-1.0), DomainError);
    CHECK_THROWS_AS(m.dV(-0.5), DomainError);
    CHECK_NOTHROW(m.V(0.0));
}

TEST_CASE("constructor parameter validation") {
    CHECK_THROWS_AS(CanonicalMaterial::affine(0.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(CanonicalMaterial::quadratic(-1.0, 0.0, 0.0), InvalidParameter);
    // concave polynomial rejected by the sampling check
    CHECK_THROWS_AS(CanonicalMaterial::polynomial({0.0, 0.0, -1.0}), InvalidParameter);
}

TEST_CASE("legendre conjugate of quadratic laws") {
    const auto m = CanonicalMaterial::quadratic(1.0, 0.0, 0.0);
    const ConjugatePair p = legendre_conjugate(m, 1.0 / 3.0);
    CHECK(p.xi == Catch::Approx(1.0 / 3.0).margin(1e-14));
    CHECK(p.vstar == Catch::Approx(1.0 / 18.0).margin(1e-14));
    CHECK(p.fenchel_gap <= 1e-10);

    // shifted quadratic: zeta = xi - 3 solved directly
    const auto m2 = CanonicalMaterial::quadratic(1.0, 3.0, 0.0);
    const ConjugatePair p2 = legendre_conjugate(m2, 2.0);
    CHECK(p2.xi == Catch::Approx(5.0).margin(1e-14));
    CHECK(p2.vstar == Catch::Approx(8.0).margin(1e-14));
}

TEST_CASE("affine conjugate is degenerate") {
    const auto m = CanonicalMaterial::affine(1.0, 0.0);
    CHECK_THROWS_AS(legendre_conjugate(m, 1.0), DegenerateConjugate);
}

TEST_CASE("conjugate range errors") {
    const auto m = CanonicalMaterial::polynomial({0.0, 0.0, 0.5}, /*domain_lo=*/0.0);
    CHECK_THROWS_AS(legendre_conjugate(m, -1.0), RangeError);
}

TEST_CASE("numeric conjugate hits the residual target") {
    const auto m = CanonicalMaterial::numeric(
        [](double xi) { return 0.5 * xi * xi + 0.25 * xi * xi * xi * xi; }, -kInf);
    for (double zeta : {-2.0, -0.3, 0.1, 1.0, 4.0}) {
        const ConjugatePair p = legendre_conjugate(m, zeta);
        CHECK(p.fenchel_gap <= 1e-10);
        CHECK(m.dV(p.xi) == Catch::Approx(zeta).margin(1e-7));
    }
}

TEST_CASE("mooney-rivlin reduction to the affine law") {
    const auto m1 = mooney_rivlin_reduce(1.0, 1.0, 1.0);
    CHECK(m1.affine_A() == Catch::Approx(2.0));
    CHECK(m1.affine_B() == Catch::Approx(0.0).margin(1e-14));

    const auto m2 = mooney_rivlin_reduce(1.0, 0.0, 2.0);
    CHECK(m2.affine_A() == Catch::Approx(1.0));
    CHECK(m2.affine_B() == Catch::Approx(0.0).margin(1e-14));

    const auto m3 = mooney_rivlin_reduce(1.0, 1.0, 2.0);
    CHECK(m3.affine_A() == Catch::Approx(1.5));
    CHECK(m3.affine_B() == Catch::Approx(0.25).margin(1e-14));

    CHECK_THROWS_AS(mooney_rivlin_reduce(1.0, -3.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(mooney_rivlin_reduce(1.0, 1.0, -1.0), InvalidParameter);
}

TEST_CASE("mooney-rivlin reduction reproduces the two-invariant energy") {
    // oracle: evaluate c1 (I1-3) + c2 (I2-3) on the anti-plane manifold and
    // compare with A (I1-3) + B for every sampled shear magnitude
    for (std::uint64_t k = 0; k < 200; ++k) {
        const double c1 = uniform_in(5, 4 * k, 0.1, 2.0);
        const double c2 = uniform_in(5, 4 * k + 1, 0.0, 2.0);
        const double lambda = uniform_in(5, 4 * k + 2, 0.4, 2.5);
        const double Rsq = uniform_in(5, 4 * k + 3, 0.0, 9.0);
        const double I1 = lambda1_of(lambda) + Rsq;
        const double I2 = lambda2_of(lambda) + Rsq / lambda;
        const double w_direct = c1 * (I1 - 3.0) + c2 * (I2 - 3.0);
        const auto m = mooney_rivlin_reduce(c1, c2, lambda);
        CHECK(m.V(I1) == Catch::Approx(w_direct).margin(1e-12 * (1.0 + std::fabs(w_direct))));
    }
}

TEST_CASE("legendre involution at sampled points") {
    const auto quad = CanonicalMaterial::quadratic(1.7, -0.4, 0.3);
    const auto poly = CanonicalMaterial::polynomial({0.0, -0.5, 1.0, 0.0, 0.1}, -kInf);
    for (const auto& m : {quad, poly}) {
        for (std::uint64_t k = 0; k < 100; ++k) {
            const double xi = uniform_in(17, k, -3.0, 3.0);
            const double zeta = m.dV(xi);
            const ConjugatePair p = legendre_conjugate(m, zeta);
            CHECK(p.xi == Catch::Approx(xi).epsilon(1e-8));
            // conjugating the conjugate recovers V
            CHECK(p.xi * zeta - p.vstar == Catch::Approx(m.V(xi)).margin(1e-8 * (1.0 + std::fabs(m.V(xi)))));
        }
    }
}

TEST_CASE("duality relations hold for random draws") {
    for (std::uint64_t k = 0; k < 300; ++k) {
        const auto d = testsupport::draw_case(23, k);
        if (d.material.is_affine()) continue;
        const double xi = uniform_in(29, k, -2.5, 3.5);
        const double zeta = d.material.dV(xi);
        const ConjugatePair p = legendre_conjugate(d.material, zeta);
        const double tol = d.material.kind() == MaterialKind::NumericConvex ? 1e-7 : 1e-10;
        CHECK(std::fabs(p.xi - xi) <= tol * (1.0 + std::fabs(xi)));
        CHECK(std::fabs(d.material.V(xi) + p.vstar - xi * zeta) <=
              tol * (1.0 + std::fabs(xi * zeta)));
    }
}

TEST_CASE("derivatives match central differences") {
    const auto quad = CanonicalMaterial::quadratic(1.3, 0.7, -0.2);
    const auto poly = CanonicalMaterial::polynomial({1.0, -0.5, 0.8, 0.0, 0.05}, -kInf);
    const auto aff = CanonicalMaterial::affine(1.1, 0.4, -kInf);
    for (const auto& m : {quad, poly, aff}) {
        for (std::uint64_t k = 0; k < 50; ++k) {
            const double xi = uniform_in(31, k, -2.0, 4.0);
            const double h = 1e-5;
            const double d1 = (m.V(xi + h) - m.V(xi - h)) / (2.0 * h);
            const double d2 = (m.V(xi + h) - 2.0 * m.V(xi) + m.V(xi - h)) / (h * h);
            CHECK(m.dV(xi) == Catch::Approx(d1).margin(1e-5 * (1.0 + std::fabs(d1))));
            CHECK(m.ddV(xi) == Catch::Approx(d2).margin(1e-4 * (1.0 + std::fabs(d2))));
        }
    }
}

TEST_CASE("anti-plane measure") {
    const auto meas = QuadraticMeasure::anti_plane(1.0);
    CHECK(meas.alpha == 1.0);
    CHECK(meas.beta == Catch::Approx(3.0));
    CHECK(QuadraticMeasure::anti_plane(2.0).beta == Catch::Approx(5.0));
    // minimum of lambda_1 over lambda > 0 is 3, at lambda = 1
    for (double l : {0.3, 0.8, 1.0, 1.7, 3.0})
        CHECK(QuadraticMeasure::anti_plane(l).beta >= 3.0 - 1e-12);
    CHECK_THROWS_AS(QuadraticMeasure::anti_plane(-1.0), InvalidParameter);
    const auto dw = QuadraticMeasure::double_well();
    CHECK(dw.lam(2.0) == Catch::Approx(0.0).margin(1e-15));
}
