#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "cdshear/errors.hpp"
#include "cdshear/materials.hpp"
#include "cdshear/numerics.hpp"

namespace cdshear {

// All analyzers in this header are sampling-based falsifiers: a passing
// verdict means "no violation found at this sample count", never a proof.

using ScalarField2 = std::function<double(std::array<double, 2>)>;

struct Box2 {
    std::array<double, 2> lo{-3.0, -3.0};
    std::array<double, 2> hi{3.0, 3.0};
};

struct GqcViolation {
    std::array<double, 2> a{};
    std::array<double, 2> b{};
    double theta = 0.0;
    double margin = 0.0;  // P(mix) - max(P(a), P(b))
};

struct GqcResult {
    bool violation_found = false;
    GqcViolation violation;
    long samples_checked = 0;
    double worst_margin = -kInf;  // largest P(mix) - max over all samples
};

/// Sample pairs uniformly in the box and mixing weights on the fixed grid
/// {0.1, ..., 0.9}; report the first pair where P(theta a + (1-theta) b)
/// exceeds max(P(a), P(b)) by more than 1e-10. Samples are a counter-based
/// stream of the seed, so enlarging n_samples only extends the prefix.
inline GqcResult check_g_quasiconvex(const ScalarField2& P, const Box2& box, long n_samples,
                                     std::uint64_t seed) {
    if (n_samples < 1) throw InvalidParameter("n_samples must be >= 1");
    GqcResult res;
    for (long k = 0; k < n_samples; ++k) {
        const std::uint64_t c = 4 * static_cast<std::uint64_t>(k);
        const std::array<double, 2> a{uniform_in(seed, c, box.lo[0], box.hi[0]),
                                      uniform_in(seed, c + 1, box.lo[1], box.hi[1])};
        const std::array<double, 2> b{uniform_in(seed, c + 2, box.lo[0], box.hi[0]),
                                      uniform_in(seed, c + 3, box.lo[1], box.hi[1])};
        const double pa = P(a);
        const double pb = P(b);
        const double cap = std::max(pa, pb);
        ++res.samples_checked;
        for (int t = 1; t <= 9; ++t) {
            const double theta = 0.1 * t;
            const std::array<double, 2> mix{theta * a[0] + (1.0 - theta) * b[0],
                                            theta * a[1] + (1.0 - theta) * b[1]};
            const double margin = P(mix) - cap;
            res.worst_margin = std::max(res.worst_margin, margin);
            if (margin > 1e-10) {
                res.violation_found = true;
                res.violation = {a, b, theta, margin};
                return res;
            }
        }
    }
    return res;
}

struct GEllipseResult {
    bool is_g_ellipse = false;
    int components = 0;
    bool midpoint_convex = false;
};

/// Rasterize the sub-level set {P <= alpha} on grid_n x grid_n, count its
/// connected components by flood fill, and spot-check convexity by midpoints
/// of random in-set pairs. Throws BoxTooSmall when the set touches the box
/// boundary (the level set cannot be judged closed).
inline GEllipseResult check_g_ellipse(const ScalarField2& P, double alpha_level, const Box2& box,
                                      int grid_n, std::uint64_t seed = 2024) {
    if (grid_n < 32) throw InvalidParameter("grid_n must be >= 32");
    GEllipseResult res;
    std::vector<std::uint8_t> in(static_cast<std::size_t>(grid_n) * grid_n, 0);
    std::vector<std::array<double, 2>> members;
    auto coord = [&](int i, int k) {
        return box.lo[static_cast<std::size_t>(k)] +
               (box.hi[static_cast<std::size_t>(k)] - box.lo[static_cast<std::size_t>(k)]) * i /
                   (grid_n - 1);
    };
    for (int j = 0; j < grid_n; ++j)
        for (int i = 0; i < grid_n; ++i) {
            const std::array<double, 2> x{coord(i, 0), coord(j, 1)};
            if (P(x) <= alpha_level) {
                in[static_cast<std::size_t>(j * grid_n + i)] = 1;
                members.push_back(x);
                if (i == 0 || j == 0 || i == grid_n - 1 || j == grid_n - 1)
                    throw BoxTooSmall("sub-level set touches the sampling box boundary");
            }
        }

    // flood fill, 4-connectivity
    std::vector<std::uint8_t> seen(in.size(), 0);
    for (int j = 0; j < grid_n; ++j)
        for (int i = 0; i < grid_n; ++i) {
            const std::size_t n0 = static_cast<std::size_t>(j * grid_n + i);
            if (!in[n0] || seen[n0]) continue;
            ++res.components;
            std::deque<std::pair<int, int>> queue{{i, j}};
            seen[n0] = 1;
            while (!queue.empty()) {
                const auto [ci, cj] = queue.front();
                queue.pop_front();
                const std::array<std::pair<int, int>, 4> nb{
                    {{ci + 1, cj}, {ci - 1, cj}, {ci, cj + 1}, {ci, cj - 1}}};
                for (const auto& [ni, nj] : nb) {
                    if (ni < 0 || nj < 0 || ni >= grid_n || nj >= grid_n) continue;
                    const std::size_t nn = static_cast<std::size_t>(nj * grid_n + ni);
                    if (in[nn] && !seen[nn]) {
                        seen[nn] = 1;
                        queue.emplace_back(ni, nj);
                    }
                }
            }
        }

    res.midpoint_convex = true;
    if (!members.empty()) {
        const double slack = 1e-10 * (1.0 + std::fabs(alpha_level));
        for (std::uint64_t k = 0; k < 4000; ++k) {
            const auto& a = members[splitmix64(seed, 2 * k) % members.size()];
            const auto& b = members[splitmix64(seed, 2 * k + 1) % members.size()];
            const std::array<double, 2> mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
            if (P(mid) > alpha_level + slack) {
                res.midpoint_convex = false;
                break;
            }
        }
    }
    res.is_g_ellipse = res.components == 1 && res.midpoint_convex && !members.empty();
    return res;
}

using TwoInvariantEnergy = std::function<double(double, double)>;  // W(I1, I2)

struct KnowlesEllipticityResult {
    bool holds = true;
    double first_failure_R = kNaN;
};

/// Scan d/dR [2 R (W1 + W2/lambda)] > 0 on (0, R_max] at n points, with the
/// invariants evaluated on the anti-plane manifold I1 = lambda_1 + R^2,
/// I2 = lambda_2 + R^2/lambda and the partials taken by central differences
/// in each invariant separately.
inline KnowlesEllipticityResult check_knowles_ellipticity(const TwoInvariantEnergy& W,
                                                          double lambda, double R_max, int n) {
    if (!(lambda > 0.0)) throw InvalidParameter("lambda must be > 0");
    if (n < 2 || !(R_max > 0.0)) throw InvalidParameter("need n >= 2 and R_max > 0");
    const double l1 = lambda1_of(lambda);
    const double l2 = lambda2_of(lambda);
    auto slope = [&](double R) {
        const double I1 = l1 + R * R;
        const double I2 = l2 + R * R / lambda;
        const double h1 = 1e-5 * (1.0 + std::fabs(I1));
        const double h2 = 1e-5 * (1.0 + std::fabs(I2));
        const double W1 = (W(I1 + h1, I2) - W(I1 - h1, I2)) / (2.0 * h1);
        const double W2 = (W(I1, I2 + h2) - W(I1, I2 - h2)) / (2.0 * h2);
        return 2.0 * R * (W1 + W2 / lambda);
    };
    KnowlesEllipticityResult res;
    const double hR = R_max / (8.0 * n);
    for (int k = 1; k <= n; ++k) {
        const double R = R_max * k / n;
        const double d = (slope(R + hR) - slope(R - hR)) / (2.0 * hR);
        if (!(d > 0.0)) {
            res.holds = false;
            res.first_failure_R = R;
            break;
        }
    }
    return res;
}

struct KnowlesConstitutiveResult {
    double residual_max = 0.0;
    double b_used = 0.0;
};

/// Residual of b W1 + (b/lambda - 1) W2 with b = lambda/2, where W1 and W2
/// are the partials along the constrained anti-plane manifold: there
/// W2 = lambda W1, so W1 is recovered from the one-dimensional slope
/// dW/dR = 2R (W1 + W2/lambda) = 4 R W1.
inline KnowlesConstitutiveResult check_knowles_constitutive(const TwoInvariantEnergy& W,
                                                            double lambda, int n,
                                                            double R_max = 3.0) {
    if (!(lambda > 0.0)) throw InvalidParameter("lambda must be > 0");
    if (n < 1) throw InvalidParameter("need n >= 1");
    const double l1 = lambda1_of(lambda);
    const double l2 = lambda2_of(lambda);
    auto on_manifold = [&](double R) { return W(l1 + R * R, l2 + R * R / lambda); };
    KnowlesConstitutiveResult res;
    res.b_used = 0.5 * lambda;
    for (int k = 1; k <= n; ++k) {
        const double R = R_max * k / n;
        const double h = 1e-6 * (1.0 + R);
        const double dWdR = (on_manifold(R + h) - on_manifold(R - h)) / (2.0 * h);
        const double W1 = dWdR / (4.0 * R);
        const double W2 = lambda * W1;
        const double r = std::fabs(res.b_used * W1 + (res.b_used / lambda - 1.0) * W2);
        res.residual_max = std::max(res.residual_max, r);
    }
    return res;
}

}  // namespace cdshear
