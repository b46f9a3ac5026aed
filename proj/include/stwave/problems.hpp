#pragma once

#include <complex>
#include <string>

#include "stwave/problem.hpp"

namespace stwave {
namespace problems {

/// Smooth bump supported on (-1,1): exp(1 + 1/(s^2-1)), with bump(0) = 1.
double bump(double s);
double bump_derivative(double s);

/// u = sin(pi x) sin^2(5/4 pi t) on (0,1) x (0,10), Dirichlet, c = 1.
WaveProblem u1();

/// u = sin(k pi x) sin(k pi t) on (0,1) x (0,2), Dirichlet, c = 1.
WaveProblem u2(int wavenumber);

/// Wavefront e^{-64 (x - (1+y) t)^2} on (0,1)^2 x (0,0.375), c = 1+y, Neumann.
WaveProblem smooth_velocity();

/// Bump transmitted across c = 1 / c = 2 at x = 1/2 on (0,1) x (0,1), Neumann.
WaveProblem discontinuous_velocity();

/// u = (cos(pi t) + sin(pi t)) sin(pi x) on (0,1) x (0,10), Dirichlet; the
/// exact energy is pi^2/2 at every time.
WaveProblem energy();
double energy_exact_value();

/// Periodic transport of a C^0 tent / C-infinity bump profile, T = 2.
WaveProblem tent();
WaveProblem bump_wave();

/// Pulse scattering off the unit disk on the half annulus 1 <= |x| <= 3:
/// Dirichlet inner circle, Robin outer, Neumann flat segments, theta = 1.
WaveProblem scattering(double final_time = 2.0);

/// u = t with pure Neumann data (f = 0, u1 = 1); lies in every trial space.
WaveProblem linear_time(double final_time = 1.0);

/// Homogeneous Dirichlet problem driven by a seeded random smooth source
/// (low-order Fourier sum), for stability-bound checks.
WaveProblem random_source(unsigned seed, double final_time = 1.0);

/// Fourier coefficient int_0^1 u0(x) e^{-2 pi i n x} dx by fine quadrature.
std::complex<double> initial_fourier_coefficient(const SpaceFn& u0, int mode);

/// Lookup by the names used in experiment configs.
WaveProblem by_name(const std::string& name, int wavenumber = 1, double final_time = -1.0);

}  // namespace problems
}  // namespace stwave
