#include "stwave/problems.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "stwave/quadrature.hpp"

namespace stwave {
namespace problems {

namespace {
constexpr double kPi = std::numbers::pi;
}

double bump(double s) {
    if (s <= -1.0 || s >= 1.0) return 0.0;
    return std::exp(1.0 + 1.0 / (s * s - 1.0));
}

double bump_derivative(double s) {
    if (s <= -1.0 || s >= 1.0) return 0.0;
    const double d = s * s - 1.0;
    return bump(s) * (-2.0 * s / (d * d));
}

WaveProblem u1() {
    WaveProblem pb;
    pb.name = "u1";
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, 10.0);
    const double w = 1.25 * kPi;
    pb.source = [w](const Point& x, double t) {
        const double s = std::sin(w * t);
        return std::sin(kPi * x[0]) * (2.0 * w * w * std::cos(2.0 * w * t) + kPi * kPi * s * s);
    };
    pb.exact_value = [w](const Point& x, double t) {
        const double s = std::sin(w * t);
        return std::sin(kPi * x[0]) * s * s;
    };
    pb.exact_dt = [w](const Point& x, double t) {
        return std::sin(kPi * x[0]) * w * std::sin(2.0 * w * t);
    };
    pb.exact_gradient = [w](const Point& x, double t) -> Point {
        const double s = std::sin(w * t);
        return {kPi * std::cos(kPi * x[0]) * s * s, 0.0};
    };
    pb.has_exact = true;
    return pb;
}

WaveProblem u2(int k) {
    if (k < 1) throw std::invalid_argument("u2: wavenumber must be positive");
    WaveProblem pb;
    pb.name = "u2";
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, 2.0);
    const double kp = k * kPi;
    pb.initial_velocity = [kp](const Point& x) { return kp * std::sin(kp * x[0]); };
    pb.exact_value = [kp](const Point& x, double t) {
        return std::sin(kp * x[0]) * std::sin(kp * t);
    };
    pb.exact_dt = [kp](const Point& x, double t) {
        return kp * std::sin(kp * x[0]) * std::cos(kp * t);
    };
    pb.exact_gradient = [kp](const Point& x, double t) -> Point {
        return {kp * std::cos(kp * x[0]) * std::sin(kp * t), 0.0};
    };
    pb.has_exact = true;
    return pb;
}

WaveProblem smooth_velocity() {
    WaveProblem pb;
    pb.name = "csmooth";
    pb.geometry = GeometryMap::unit_box(2, {1.0, 1.0}, 0.375);
    for (int i = 0; i < pb.geometry.n_faces(); ++i)
        pb.geometry.set_face_kind(pb.geometry.face(i), BoundaryKind::neumann);

    pb.velocity_is_constant = false;
    pb.velocity = [](const Point& x, double) { return 1.0 + x[1]; };

    auto uval = [](const Point& x, double t) {
        const double g = x[0] - (1.0 + x[1]) * t;
        return std::exp(-64.0 * g * g);
    };
    pb.exact_value = uval;
    pb.exact_dt = [uval](const Point& x, double t) {
        const double g = x[0] - (1.0 + x[1]) * t;
        return 128.0 * (1.0 + x[1]) * g * uval(x, t);
    };
    pb.exact_gradient = [uval](const Point& x, double t) -> Point {
        const double g = x[0] - (1.0 + x[1]) * t;
        const double u = uval(x, t);
        return {-128.0 * g * u, 128.0 * t * g * u};
    };
    pb.has_exact = true;

    pb.source = [uval](const Point& x, double t) {
        const double c = 1.0 + x[1];
        const double g = x[0] - c * t;
        return 128.0 * c * t * uval(x, t) * (c * t * (1.0 - 128.0 * g * g) - 2.0 * g);
    };
    pb.initial_value = [](const Point& x) { return std::exp(-64.0 * x[0] * x[0]); };
    pb.initial_velocity = [](const Point& x) {
        return 128.0 * (1.0 + x[1]) * x[0] * std::exp(-64.0 * x[0] * x[0]);
    };
    pb.neumann_data = [uval](const Point& x, double t) {
        const double c = 1.0 + x[1];
        const double g = x[0] - c * t;
        const double u = uval(x, t);
        const double ux = -128.0 * g * u;
        const double uy = 128.0 * t * g * u;
        // Outward normals of the unit square.
        if (x[0] < 1e-12) return -c * c * ux;
        if (x[0] > 1.0 - 1e-12) return c * c * ux;
        if (x[1] < 1e-12) return -c * c * uy;
        return c * c * uy;
    };
    return pb;
}

WaveProblem discontinuous_velocity() {
    WaveProblem pb;
    pb.name = "cdisc";
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, 1.0);
    for (int i = 0; i < pb.geometry.n_faces(); ++i)
        pb.geometry.set_face_kind(pb.geometry.face(i), BoundaryKind::neumann);

    pb.velocity_is_constant = false;
    pb.velocity = [](const Point& x, double) { return x[0] < 0.5 ? 1.0 : 2.0; };

    pb.initial_value = [](const Point& x) { return bump(5.0 * x[0] - 1.0); };
    pb.initial_velocity = [](const Point& x) { return -5.0 * bump_derivative(5.0 * x[0] - 1.0); };

    // Incident, reflected and transmitted pulses, including the first
    // Neumann boundary reflections; valid through T = 1.
    struct Term {
        double amp, scale, speed, shift;
    };
    static const Term left_terms[] = {{1.0, 5.0, -1.0, -1.0},
                                      {-1.0 / 3.0, 5.0, 1.0, -4.0},
                                      {-1.0 / 3.0, 5.0, -1.0, 4.0},
                                      {8.0 / 9.0, 5.0, 1.0, -6.5}};
    static const Term right_terms[] = {{2.0 / 3.0, 2.5, -2.0, 0.25},
                                       {2.0 / 3.0, 2.5, 2.0, -5.25},
                                       {2.0 / 9.0, 2.5, -2.0, 2.75},
                                       {2.0 / 9.0, 2.5, 2.0, -7.75}};

    auto eval = [](const Point& x, double t, int deriv_x, int deriv_t) {
        const Term* terms = (x[0] < 0.5) ? left_terms : right_terms;
        double out = 0.0;
        for (int i = 0; i < 4; ++i) {
            const Term& tm = terms[i];
            const double arg = tm.scale * (x[0] + tm.speed * t) + tm.shift;
            if (deriv_x == 0 && deriv_t == 0) {
                out += tm.amp * bump(arg);
            } else if (deriv_x == 1) {
                out += tm.amp * tm.scale * bump_derivative(arg);
            } else {
                out += tm.amp * tm.scale * tm.speed * bump_derivative(arg);
            }
        }
        return out;
    };
    pb.exact_value = [eval](const Point& x, double t) { return eval(x, t, 0, 0); };
    pb.exact_dt = [eval](const Point& x, double t) { return eval(x, t, 0, 1); };
    pb.exact_gradient = [eval](const Point& x, double t) -> Point {
        return {eval(x, t, 1, 0), 0.0};
    };
    pb.has_exact = true;
    return pb;
}

WaveProblem energy() {
    WaveProblem pb;
    pb.name = "energy";
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, 10.0);
    pb.initial_value = [](const Point& x) { return std::sin(kPi * x[0]); };
    pb.initial_velocity = [](const Point& x) { return kPi * std::sin(kPi * x[0]); };
    pb.exact_value = [](const Point& x, double t) {
        return (std::cos(kPi * t) + std::sin(kPi * t)) * std::sin(kPi * x[0]);
    };
    pb.exact_dt = [](const Point& x, double t) {
        return kPi * (std::cos(kPi * t) - std::sin(kPi * t)) * std::sin(kPi * x[0]);
    };
    pb.exact_gradient = [](const Point& x, double t) -> Point {
        return {kPi * (std::cos(kPi * t) + std::sin(kPi * t)) * std::cos(kPi * x[0]), 0.0};
    };
    pb.has_exact = true;
    return pb;
}

double energy_exact_value() { return 0.5 * kPi * kPi; }

namespace {

// Rightward transport of an initial profile on the unit circle.
WaveProblem transport_problem(std::string name, SpaceFn u0, SpaceFn du0) {
    WaveProblem pb;
    pb.name = std::move(name);
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, 2.0);
    pb.periodic_space = true;
    pb.initial_value = u0;
    pb.initial_velocity = [du0](const Point& x) { return -du0(x); };
    auto wrap = [](double s) {
        s = std::fmod(s, 1.0);
        return s < 0.0 ? s + 1.0 : s;
    };
    pb.exact_value = [u0, wrap](const Point& x, double t) {
        return u0({wrap(x[0] - t), 0.0});
    };
    pb.exact_dt = [du0, wrap](const Point& x, double t) {
        return -du0({wrap(x[0] - t), 0.0});
    };
    pb.exact_gradient = [du0, wrap](const Point& x, double t) -> Point {
        return {du0({wrap(x[0] - t), 0.0}), 0.0};
    };
    pb.has_exact = true;
    return pb;
}

}  // namespace

WaveProblem tent() {
    SpaceFn u0 = [](const Point& x) {
        if (x[0] < 0.0 || x[0] > 0.5) return 0.0;
        return 1.0 - std::abs(4.0 * x[0] - 1.0);
    };
    SpaceFn du0 = [](const Point& x) {
        if (x[0] < 0.0 || x[0] > 0.5) return 0.0;
        return x[0] < 0.25 ? 4.0 : -4.0;
    };
    return transport_problem("tent", u0, du0);
}

WaveProblem bump_wave() {
    SpaceFn u0 = [](const Point& x) { return bump(4.0 * x[0] - 1.0); };
    SpaceFn du0 = [](const Point& x) { return 4.0 * bump_derivative(4.0 * x[0] - 1.0); };
    return transport_problem("bump", u0, du0);
}

WaveProblem scattering(double final_time) {
    WaveProblem pb;
    pb.name = "scattering";
    pb.geometry = GeometryMap::half_annulus(1.0, 3.0, final_time);
    pb.theta = 1.0;
    pb.source = [](const Point& x, double t) {
        const double tb = bump(t);
        if (tb == 0.0) return 0.0;
        const double r = std::hypot(x[0] - 2.0, x[1]);
        const double sb = bump(r / 0.4);
        if (sb == 0.0) return 0.0;
        return std::cos(2.0 * kPi * t) * tb * sb;
    };
    return pb;
}

WaveProblem linear_time(double final_time) {
    WaveProblem pb;
    pb.name = "tlinear";
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, final_time);
    for (int i = 0; i < pb.geometry.n_faces(); ++i)
        pb.geometry.set_face_kind(pb.geometry.face(i), BoundaryKind::neumann);
    pb.initial_velocity = [](const Point&) { return 1.0; };
    pb.exact_value = [](const Point&, double t) { return t; };
    pb.exact_dt = [](const Point&, double) { return 1.0; };
    pb.exact_gradient = [](const Point&, double) -> Point { return {0.0, 0.0}; };
    pb.has_exact = true;
    return pb;
}

WaveProblem random_source(unsigned seed, double final_time) {
    WaveProblem pb;
    pb.name = "random-source";
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, final_time);

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    constexpr int kModes = 4;
    std::array<std::array<double, kModes>, kModes> a, b;
    for (int j = 0; j < kModes; ++j)
        for (int k = 0; k < kModes; ++k) {
            a[j][k] = unif(rng);
            b[j][k] = unif(rng);
        }
    const double T = final_time;
    pb.source = [a, b, T](const Point& x, double t) {
        double s = 0.0;
        for (int j = 0; j < kModes; ++j)
            for (int k = 0; k < kModes; ++k)
                s += std::sin((j + 1) * kPi * x[0]) *
                     (a[j][k] * std::cos(k * kPi * t / T) + b[j][k] * std::sin(k * kPi * t / T));
        return s;
    };
    return pb;
}

std::complex<double> initial_fourier_coefficient(const SpaceFn& u0, int mode) {
    // Composite Gauss rule fine enough for the C^0 profiles used here.
    const QuadRule rule = gauss_legendre(8);
    const int panels = 2048;
    std::complex<double> c{0.0, 0.0};
    for (int e = 0; e < panels; ++e) {
        auto [xs, ws] = map_to_element(rule, double(e) / panels, double(e + 1) / panels);
        for (int q = 0; q < rule.size(); ++q) {
            const double ph = -2.0 * kPi * mode * xs[q];
            c += ws[q] * u0({xs[q], 0.0}) * std::complex<double>(std::cos(ph), std::sin(ph));
        }
    }
    return c;
}

WaveProblem by_name(const std::string& name, int wavenumber, double final_time) {
    WaveProblem pb;
    if (name == "u1") pb = u1();
    else if (name == "u2") pb = u2(wavenumber);
    else if (name == "csmooth") pb = smooth_velocity();
    else if (name == "cdisc") pb = discontinuous_velocity();
    else if (name == "energy") pb = energy();
    else if (name == "tent") pb = tent();
    else if (name == "bump") pb = bump_wave();
    else if (name == "scattering") pb = scattering(final_time > 0 ? final_time : 2.0);
    else if (name == "tlinear") pb = linear_time(final_time > 0 ? final_time : 1.0);
    else throw std::invalid_argument("unknown problem: " + name);
    return pb;
}

}  // namespace problems
}  // namespace stwave
