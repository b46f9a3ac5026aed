#pragma once

#include <functional>
#include <string>

#include "stwave/geometry.hpp"

namespace stwave {

using SpaceFn = std::function<double(const Point&)>;
using SpaceTimeFn = std::function<double(const Point&, double)>;
using SpaceTimeVecFn = std::function<Point(const Point&, double)>;

/// One acoustic wave initial boundary value problem on Omega x (0,T):
/// velocity field, impedance, source, boundary and initial data, plus the
/// closed-form solution when one is known.  Null std::functions mean zero
/// data; the constant-velocity flag gates the Kronecker assembly path.
struct WaveProblem {
    std::string name;
    GeometryMap geometry;

    SpaceTimeFn velocity;  // consulted only when velocity_is_constant is false
    bool velocity_is_constant = true;
    double constant_velocity = 1.0;

    double theta = 1.0;  // Robin impedance

    SpaceTimeFn source;                    // f
    SpaceFn initial_value;                 // u0
    SpaceFn initial_velocity;              // u1
    SpaceTimeFn neumann_data, robin_data;  // g_N, g_R

    bool periodic_space = false;

    SpaceTimeFn exact_value, exact_dt;
    SpaceTimeVecFn exact_gradient;
    bool has_exact = false;

    double velocity_at(const Point& x, double t) const {
        return velocity_is_constant ? constant_velocity : velocity(x, t);
    }
    double final_time() const { return geometry.final_time(); }
};

}  // namespace stwave
