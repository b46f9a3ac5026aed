#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "stwave/discretization.hpp"
#include "stwave/problem.hpp"

namespace stwave {

/// Threshold above which a relative error is reported as a blow-up.
inline constexpr double kBlowupThreshold = 1e100;

struct ErrorReport {
    double l2_rel = 0.0, h1_rel = 0.0;      // space-time, weighted seminorm
    double l2_final = 0.0, h1_final = 0.0;  // at t = T
    double l2_abs = 0.0, h1_abs = 0.0;
    bool relative_valid = true;  // false when the exact norm vanishes
    bool diverged = false;
};

/// Relative L2(Q) and weighted H1(Q) seminorm errors plus final-time errors,
/// by per-element Gauss quadrature (degree+3 points per direction unless
/// overridden).  The problem must carry the exact value, time derivative and
/// gradient (analytic, or a wrapped reference solution).
ErrorReport space_time_errors(const DiscreteFunction& uh, const WaveProblem& problem,
                              int n_quad = -1);

/// Pairwise log-ratio slopes of an error-vs-meshsize sequence.
std::vector<double> convergence_rates(std::span<const double> h, std::span<const double> err);

struct EnergyTrace {
    std::vector<double> times;
    std::vector<double> energy;     // E_h(t)
    std::vector<double> rel_error;  // |E_h - E| / E
    std::vector<int> sign;          // +1 where E_h >= E
    double exact_energy = 0.0;
};

/// Discrete energy 1/2 |du_h/dt|^2 + 1/2 |grad u_h|^2 over Omega at uniform
/// sample times, compared against a constant exact energy.
EnergyTrace energy_trace(const DiscreteFunction& uh, const WaveProblem& problem,
                         double exact_energy, int n_samples = 201, int n_quad = -1);

using FourierFn = std::function<std::complex<double>(int mode, double t)>;

struct PhaseErrorTrace {
    std::vector<int> modes;
    std::vector<double> times;
    std::vector<std::vector<double>> phase;  // [mode][time]
    std::vector<bool> skipped;               // exact coefficient vanished
};

/// Phase error |arg((c_n / c_nh) |c_nh| / |c_n|)| of Fourier modes of the
/// solution on a periodic unit interval; discrete coefficients by
/// element-wise Gauss quadrature.
PhaseErrorTrace phase_errors(const DiscreteFunction& uh, const WaveProblem& problem,
                             std::span<const int> modes, std::span<const double> times,
                             const FourierFn& exact_coefficient, int n_quad = -1);

struct StabilityCheck {
    double ratio = 0.0;  // |u_h| / ((4/pi) T^2 |f|)
    double bound_constant = 0.0;
    double norm_uh = 0.0, norm_f = 0.0;
    bool undefined = false;  // |f| = 0
};

/// L2(Q) stability-bound ratio |u_h|_{L2(Q)} / ((4/pi) T^2 |f|_{L2(Q)}).
StabilityCheck stability_bound_check(const DiscreteFunction& uh, const WaveProblem& problem,
                                     int n_quad = -1);

}  // namespace stwave
