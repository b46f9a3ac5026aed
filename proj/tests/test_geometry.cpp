#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>

#include "stwave/geometry.hpp"
#include "stwave/quadrature.hpp"

using namespace stwave;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("unit box maps") {
    const GeometryMap g1 = unit_box(1, {1.0, 0.0}, 10.0);
    CHECK(g1.final_time() == doctest::Approx(10.0));
    CHECK(g1.jacobian({0.3, 0.0})[0] == doctest::Approx(1.0));
    CHECK(g1.jacobian_det({0.3, 0.0}) == doctest::Approx(1.0));

    const GeometryMap g2 = unit_box(2, {2.0, 0.5}, 0.375);
    CHECK(g2.jacobian_det({0.1, 0.9}) == doctest::Approx(1.0));  // 2 * 0.5
    const Point x = g2.map({0.5, 0.5});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(0.25));
    const Point eta = g2.inverse(x);
    CHECK(eta[0] == doctest::Approx(0.5));
    CHECK(eta[1] == doctest::Approx(0.5));

    CHECK_THROWS_AS(unit_box(1, {-1.0, 0.0}, 1.0), std::domain_error);
}

TEST_CASE("half annulus endpoints and Jacobian") {
    const GeometryMap g = half_annulus(1.0, 3.0, 6.0);
    const Point a = g.map({0.0, 0.0});
    CHECK(a[0] == doctest::Approx(1.0));
    CHECK(a[1] == doctest::Approx(0.0).epsilon(1e-15));
    const Point b = g.map({1.0, 0.5});
    CHECK(b[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b[1] == doctest::Approx(3.0));

    // det DF = pi (r_out - r_in) r(eta1) > 0
    for (double e1 : {0.0, 0.3, 1.0})
        for (double e2 : {0.1, 0.8}) {
            const double r = 1.0 + 2.0 * e1;
            CHECK(g.jacobian_det({e1, e2}) == doctest::Approx(kPi * 2.0 * r));
        }

    CHECK_THROWS_AS(half_annulus(3.0, 1.0, 6.0), std::domain_error);
}

TEST_CASE("half annulus area by quadrature") {
    const GeometryMap g = half_annulus(1.0, 3.0, 6.0);
    const QuadRule r = gauss_legendre(8);
    double area = 0.0;
    for (int i = 0; i < r.size(); ++i)
        for (int j = 0; j < r.size(); ++j) {
            const Point eta{0.5 + 0.5 * r.nodes[i], 0.5 + 0.5 * r.nodes[j]};
            area += 0.25 * r.weights[i] * r.weights[j] * g.jacobian_det(eta);
        }
    CHECK(area == doctest::Approx(kPi * (9.0 - 1.0) / 2.0).epsilon(1e-10));
}

TEST_CASE("half annulus inverse round-trips") {
    const GeometryMap g = half_annulus(1.0, 3.0, 6.0);
    for (double e1 : {0.0, 0.25, 0.9})
        for (double e2 : {0.05, 0.5, 1.0}) {
            const Point eta = g.inverse(g.map({e1, e2}));
            CHECK(eta[0] == doctest::Approx(e1).epsilon(1e-12));
            CHECK(eta[1] == doctest::Approx(e2).epsilon(1e-12));
        }
}

TEST_CASE("pullback gradient: identity and scaling") {
    const GeometryMap id = unit_box(2, {1.0, 1.0}, 1.0);
    const Point gphys = id.pullback_gradient({0.3, 0.7}, {1.5, -2.0});
    CHECK(gphys[0] == doctest::Approx(1.5));
    CHECK(gphys[1] == doctest::Approx(-2.0));

    const GeometryMap sc = unit_box(2, {4.0, 0.5}, 1.0);
    const Point gs = sc.pullback_gradient({0.3, 0.7}, {1.0, 1.0});
    CHECK(gs[0] == doctest::Approx(0.25));
    CHECK(gs[1] == doctest::Approx(2.0));
}

TEST_CASE("pullback gradient matches finite differences on the annulus") {
    const GeometryMap g = half_annulus(1.0, 3.0, 6.0);
    auto psi = [](const Point& x) { return std::sin(x[0]) * std::cos(0.7 * x[1]); };
    auto psi_grad = [](const Point& x) -> Point {
        return {std::cos(x[0]) * std::cos(0.7 * x[1]), -0.7 * std::sin(x[0]) * std::sin(0.7 * x[1])};
    };
    const Point eta{0.5, 0.25};
    const double h = 1e-6;
    const Point gp{(psi(g.map({eta[0] + h, eta[1]})) - psi(g.map({eta[0] - h, eta[1]}))) / (2 * h),
                   (psi(g.map({eta[0], eta[1] + h})) - psi(g.map({eta[0], eta[1] - h}))) / (2 * h)};
    const Point phys = g.pullback_gradient(eta, gp);
    const Point exact = psi_grad(g.map(eta));
    CHECK(phys[0] == doctest::Approx(exact[0]).epsilon(1e-6));
    CHECK(phys[1] == doctest::Approx(exact[1]).epsilon(1e-6));
}

TEST_CASE("gradient energy via pullback reproduces analytic values") {
    // phi = sin(pi x / Lx) sin(pi y / Ly) on a scaled box:
    // int |grad phi|^2 = pi^2/4 (Ly/Lx + Lx/Ly).
    const double Lx = 2.0, Ly = 0.5;
    const GeometryMap g = unit_box(2, {Lx, Ly}, 1.0);
    auto grad_param = [&](const Point& eta) -> Point {
        return {kPi * std::cos(kPi * eta[0]) * std::sin(kPi * eta[1]),
                kPi * std::sin(kPi * eta[0]) * std::cos(kPi * eta[1])};
    };
    const QuadRule r = gauss_legendre(12);
    double energy = 0.0;
    for (int i = 0; i < r.size(); ++i)
        for (int j = 0; j < r.size(); ++j) {
            const Point eta{0.5 + 0.5 * r.nodes[i], 0.5 + 0.5 * r.nodes[j]};
            const Point gp = g.pullback_gradient(eta, grad_param(eta));
            energy += 0.25 * r.weights[i] * r.weights[j] * (gp[0] * gp[0] + gp[1] * gp[1]) *
                      g.jacobian_det(eta);
        }
    CHECK(energy == doctest::Approx(kPi * kPi / 4.0 * (Ly / Lx + Lx / Ly)).epsilon(1e-10));
}

TEST_CASE("face data") {
    GeometryMap g = half_annulus(1.0, 3.0, 6.0);
    CHECK(g.face_kind({0, 0}) == BoundaryKind::dirichlet);
    CHECK(g.face_kind({0, 1}) == BoundaryKind::robin);
    CHECK(g.face_kind({1, 0}) == BoundaryKind::neumann);
    // Outer circle: curve measure pi * r_out.
    CHECK(g.face_measure({0, 1}, 0.3) == doctest::Approx(kPi * 3.0));
    // Flat segment: radial tangent length r_out - r_in.
    CHECK(g.face_measure({1, 0}, 0.5) == doctest::Approx(2.0));

    const GeometryMap box = unit_box(1, {1.0, 0.0}, 1.0);
    CHECK(box.face_measure({0, 1}, 0.0) == doctest::Approx(1.0));
}
