#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stwave/analysis.hpp"
#include "stwave/assembly.hpp"
#include "stwave/linsolve.hpp"
#include "stwave/problems.hpp"

namespace stwave {

enum class ExperimentKind {
    convergence,
    cfl_sweep,
    delta_sweep,
    energy,
    dispersion,
    scattering,
    disc_velocity,
    stability_bound,
};

/// One experiment section from a config file (flat key = value format).
struct ExperimentConfig {
    std::string name;
    ExperimentKind kind = ExperimentKind::convergence;
    std::string problem;  // empty: per-kind default
    Method method = Method::iga_stab;
    int p = 2;
    int p_space = -1, p_time = -1;  // -1: use p
    int q_space = -1, q_time = -1;  // -1: maximal regularity
    double delta = -1.0;            // -1: 10^-p_time
    std::vector<int> n_space;       // mesh levels (elements per direction)
    std::vector<int> n_time;        // optional explicit time elements
    double ht_over_hs = -1.0;
    double h_time = -1.0;           // cfl-sweep: fixed physical time mesh
    std::vector<double> ratios;     // cfl-sweep: nominal h_t/h_s values
    std::vector<double> deltas;     // delta-sweep grid
    int wavenumber = 1;
    bool c0_interface = false;      // C^0 knot line at x = 1/2
    std::vector<int> modes{1, 2, 3, 5};
    int samples = 201;
    int n_random = 5;
    double final_time = -1.0;       // problem override where supported
    int reference_n = -1;           // scattering reference mesh
    std::string out;                // CSV file name (default <name>.csv)
};

struct ParseError : std::runtime_error {
    ParseError(int line_number, const std::string& message)
        : std::runtime_error("config line " + std::to_string(line_number) + ": " + message),
          line(line_number) {}
    int line;
};

std::vector<ExperimentConfig> parse_config_text(const std::string& text);
std::vector<ExperimentConfig> parse_config_file(const std::string& path);

struct RunOptions {
    int threads = 1;
    unsigned seed = 12345;
    bool quiet = false;
};

/// One assembled-and-solved mesh case.
struct CaseSpec {
    WaveProblem problem;
    int n_space_x = 8, n_space_y = -1;  // -1: square mesh in 2D
    int n_time = 8;
    int p_space = 2, p_time = 2;
    int q_space = -1, q_time = -1;  // -1: maximal
    bool c0_interface = false;
    Method method = Method::iga_stab;
    double delta = 0.0;
    AssemblyPath path = AssemblyPath::automatic;
};

struct CaseResult {
    DiscreteFunction solution;  // lifting included
    ErrorReport errors;         // meaningful when the problem has an exact solution
    double residual = 0.0;
    bool solver_accurate = true;
    bool singular = false;
    int n_dof = 0;
    double h_space = 0.0, h_time = 0.0;
};

CaseResult solve_case(const CaseSpec& spec, const RunOptions& opts = {});

struct ExperimentResult {
    std::string name;
    std::string file_name;
    std::string csv;
    bool solver_failed = false;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& opts = {});

/// Runs every section of a config file and writes one CSV per experiment
/// into out_dir.  Returns 0 on success, 2 on solver failure (expected
/// blow-up rows in cfl sweeps do not count as failures).
int run_config_file(const std::string& config_path, const std::string& out_dir,
                    const RunOptions& opts = {});

/// 17-significant-digit, locale-independent formatting used in all CSVs.
std::string format_g17(double v);

}  // namespace stwave
