#include "stwave/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace stwave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

ExperimentKind parse_kind(const std::string& v, int line) {
    if (v == "convergence") return ExperimentKind::convergence;
    if (v == "cfl-sweep") return ExperimentKind::cfl_sweep;
    if (v == "delta-sweep") return ExperimentKind::delta_sweep;
    if (v == "energy") return ExperimentKind::energy;
    if (v == "dispersion") return ExperimentKind::dispersion;
    if (v == "scattering") return ExperimentKind::scattering;
    if (v == "disc-velocity") return ExperimentKind::disc_velocity;
    if (v == "stability-bound") return ExperimentKind::stability_bound;
    throw ParseError(line, "unknown experiment kind '" + v + "'");
}

Method parse_method(const std::string& v, int line) {
    if (v == "plain") return Method::plain;
    if (v == "iga-stab") return Method::iga_stab;
    if (v == "fem-stab") return Method::fem_stab;
    throw ParseError(line, "unknown method '" + v + "'");
}

template <class T>
T parse_number(const std::string& v, int line) {
    std::istringstream is(v);
    T out;
    is >> out;
    if (is.fail()) throw ParseError(line, "cannot parse number '" + v + "'");
    std::string rest;
    is >> rest;
    if (!rest.empty()) throw ParseError(line, "trailing characters in '" + v + "'");
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& v, int line) {
    std::vector<T> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_number<T>(item, line));
    }
    return out;
}

bool parse_bool(const std::string& v, int line) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ParseError(line, "expected a boolean, got '" + v + "'");
}

void validate(const ExperimentConfig& c, int line) {
    const int ps = c.p_space > 0 ? c.p_space : c.p;
    const int pt = c.p_time > 0 ? c.p_time : c.p;
    if (ps < 1 || pt < 1) throw ParseError(line, "degrees must be at least 1");
    if (c.q_space > ps - 1 || c.q_time > pt - 1)
        throw ParseError(line, "regularity exceeds degree - 1 in section [" + c.name + "]");
    if (c.delta == 0.0) throw ParseError(line, "delta must be positive");
    const bool needs_meshes = c.kind == ExperimentKind::convergence ||
                              c.kind == ExperimentKind::disc_velocity ||
                              c.kind == ExperimentKind::delta_sweep ||
                              c.kind == ExperimentKind::energy ||
                              c.kind == ExperimentKind::dispersion ||
                              c.kind == ExperimentKind::stability_bound ||
                              c.kind == ExperimentKind::scattering;
    if (needs_meshes && c.n_space.empty())
        throw ParseError(line, "empty mesh list in section [" + c.name + "]");
    if (c.kind == ExperimentKind::cfl_sweep && c.ratios.empty())
        throw ParseError(line, "cfl-sweep needs a ratios list in section [" + c.name + "]");
}

}  // namespace

std::vector<ExperimentConfig> parse_config_text(const std::string& text) {
    std::vector<ExperimentConfig> configs;
    std::vector<int> section_lines;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s.erase(hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(line, "unterminated section header");
            ExperimentConfig c;
            c.name = trim(s.substr(1, s.size() - 2));
            if (c.name.empty()) throw ParseError(line, "empty section name");
            configs.push_back(std::move(c));
            section_lines.push_back(line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected key = value");
        if (configs.empty()) throw ParseError(line, "key outside of any [section]");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (val.empty()) throw ParseError(line, "empty value for key '" + key + "'");
        ExperimentConfig& c = configs.back();

        if (key == "kind") c.kind = parse_kind(val, line);
        else if (key == "problem") c.problem = val;
        else if (key == "method") c.method = parse_method(val, line);
        else if (key == "p") c.p = parse_number<int>(val, line);
        else if (key == "p_space") c.p_space = parse_number<int>(val, line);
        else if (key == "p_time") c.p_time = parse_number<int>(val, line);
        else if (key == "q_space") c.q_space = parse_number<int>(val, line);
        else if (key == "q_time") c.q_time = parse_number<int>(val, line);
        else if (key == "delta") c.delta = parse_number<double>(val, line);
        else if (key == "n_space") c.n_space = parse_list<int>(val, line);
        else if (key == "n_time") c.n_time = parse_list<int>(val, line);
        else if (key == "ht_over_hs") c.ht_over_hs = parse_number<double>(val, line);
        else if (key == "h_time") c.h_time = parse_number<double>(val, line);
        else if (key == "ratios") c.ratios = parse_list<double>(val, line);
        else if (key == "deltas") c.deltas = parse_list<double>(val, line);
        else if (key == "wavenumber") c.wavenumber = parse_number<int>(val, line);
        else if (key == "c0_interface") c.c0_interface = parse_bool(val, line);
        else if (key == "modes") c.modes = parse_list<int>(val, line);
        else if (key == "samples") c.samples = parse_number<int>(val, line);
        else if (key == "n_random") c.n_random = parse_number<int>(val, line);
        else if (key == "final_time") c.final_time = parse_number<double>(val, line);
        else if (key == "reference_n") c.reference_n = parse_number<int>(val, line);
        else if (key == "out") c.out = val;
        else throw ParseError(line, "unknown key '" + key + "'");
    }
    for (std::size_t i = 0; i < configs.size(); ++i) validate(configs[i], section_lines[i]);
    return configs;
}

std::vector<ExperimentConfig> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CaseResult solve_case(const CaseSpec& spec, const RunOptions& opts) {
    const WaveProblem& pb = spec.problem;
    const int d = pb.geometry.dim();
    const int qs = spec.q_space >= 0 ? spec.q_space : spec.p_space - 1;
    const int qt = spec.q_time >= 0 ? spec.q_time : spec.p_time - 1;

    std::vector<KnotVector> spatial;
    for (int k = 0; k < d; ++k) {
        const int n = (k == 1 && spec.n_space_y > 0) ? spec.n_space_y : spec.n_space_x;
        if (pb.periodic_space) {
            spatial.push_back(make_periodic_space(0.0, 1.0, n, spec.p_space));
        } else if (k == 0 && spec.c0_interface) {
            const double mid[] = {0.5};
            spatial.push_back(make_open_knot_vector(0.0, 1.0, n, spec.p_space, qs, mid));
        } else {
            spatial.push_back(make_open_knot_vector(0.0, 1.0, n, spec.p_space, qs));
        }
    }
    KnotVector temporal = make_open_knot_vector(0.0, 1.0, spec.n_time, spec.p_time, qt);

    auto [trial, test] = build_spaces(spatial, temporal, pb.geometry);
    auto geom = std::make_shared<const GeometryMap>(pb.geometry);

    LinearSystem sys;
    switch (spec.method) {
        case Method::plain:
            sys = assemble_plain(pb, trial, test, spec.path, opts.threads);
            break;
        case Method::iga_stab:
            sys = assemble_iga_stab(pb, trial, test,
                                    spec.delta > 0 ? spec.delta : default_delta(spec.p_time),
                                    spec.path, opts.threads);
            break;
        case Method::fem_stab:
            sys = assemble_fem_stab(pb, trial, test, spec.path, opts.threads);
            break;
    }

    std::optional<DiscreteFunction> lifting;
    if (pb.initial_value) {
        lifting = interpolate_lifting(pb.initial_value, spatial, temporal, geom);
        apply_lifting(sys, *lifting, pb, trial, test, spec.path, opts.threads);
    }

    CaseResult res;
    res.n_dof = trial.n_dof();
    res.h_space = sys.info.h_space;
    res.h_time = sys.info.h_time;

    auto trial_ptr = std::make_shared<const SpaceTimeSpace>(std::move(trial));
    Eigen::VectorXd x;
    try {
        Factorization fact(sys);
        x = fact.solve(sys.rhs);
        res.residual = fact.last_residual();
        res.solver_accurate = fact.last_solve_accurate();
    } catch (const SingularSystem&) {
        res.singular = true;
        res.errors.diverged = true;
        res.errors.l2_rel = res.errors.h1_rel = kInf;
        res.errors.l2_final = res.errors.h1_final = kInf;
        return res;
    }

    DiscreteFunction w(trial_ptr, geom, std::move(x));
    res.solution = combine_with_lifting(w, lifting ? &*lifting : nullptr);
    if (pb.has_exact) res.errors = space_time_errors(res.solution, pb);
    return res;
}

namespace {

struct Csv {
    std::string text;
    void header(const std::string& h) { text += h + "\n"; }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            text += cells[i];
            text += (i + 1 < cells.size()) ? "," : "\n";
        }
    }
};

int derived_n_time(const ExperimentConfig& c, const WaveProblem& pb, int level, int n_space) {
    if (level < static_cast<int>(c.n_time.size())) return c.n_time[level];
    const double ratio = c.ht_over_hs > 0 ? c.ht_over_hs : 1.0;
    const double T = pb.final_time();
    return std::max(1, static_cast<int>(std::lround(T * n_space / ratio)));
}

CaseSpec base_spec(const ExperimentConfig& c, const WaveProblem& pb) {
    CaseSpec s;
    s.problem = pb;
    s.p_space = c.p_space > 0 ? c.p_space : c.p;
    s.p_time = c.p_time > 0 ? c.p_time : c.p;
    s.q_space = c.q_space;
    s.q_time = c.q_time;
    s.method = c.method;
    s.delta = c.delta > 0 ? c.delta : default_delta(s.p_time);
    s.c0_interface = c.c0_interface;
    return s;
}

std::string flag(bool b) { return b ? "1" : "0"; }

std::string problem_or(const ExperimentConfig& c, const char* fallback) {
    return c.problem.empty() ? fallback : c.problem;
}

ExperimentResult run_convergence(const ExperimentConfig& c, const RunOptions& opts) {
    const char* fallback = (c.kind == ExperimentKind::disc_velocity) ? "cdisc" : "u1";
    WaveProblem pb = problems::by_name(problem_or(c, fallback), c.wavenumber, c.final_time);
    ExperimentResult out;
    out.name = c.name;
    Csv csv;
    csv.header(
        "problem,method,p,q_space,q_time,delta,n_space,n_time,h_space,h_time,Ndof,"
        "L2rel,H1rel,L2final,H1final,L2rate,H1rate,residual,diverged,c0_interface");

    std::vector<double> hs, l2, h1;
    for (std::size_t lev = 0; lev < c.n_space.size(); ++lev) {
        CaseSpec spec = base_spec(c, pb);
        spec.n_space_x = c.n_space[lev];
        spec.n_time = derived_n_time(c, pb, static_cast<int>(lev), c.n_space[lev]);
        CaseResult r = solve_case(spec, opts);
        out.solver_failed |= r.singular;

        double l2rate = std::numeric_limits<double>::quiet_NaN();
        double h1rate = l2rate;
        if (!r.errors.diverged) {
            hs.push_back(r.h_time);
            l2.push_back(r.errors.l2_rel);
            h1.push_back(r.errors.h1_rel);
            if (hs.size() >= 2) {
                const auto lr = convergence_rates(hs, l2);
                const auto hr = convergence_rates(hs, h1);
                l2rate = lr.back();
                h1rate = hr.back();
            }
        }
        csv.row({pb.name, method_name(spec.method), std::to_string(spec.p_space),
                 std::to_string(spec.q_space), std::to_string(spec.q_time),
                 format_g17(spec.delta), std::to_string(spec.n_space_x),
                 std::to_string(spec.n_time), format_g17(r.h_space), format_g17(r.h_time),
                 std::to_string(r.n_dof), format_g17(r.errors.l2_rel),
                 format_g17(r.errors.h1_rel), format_g17(r.errors.l2_final),
                 format_g17(r.errors.h1_final), format_g17(l2rate), format_g17(h1rate),
                 format_g17(r.residual), flag(r.errors.diverged), flag(spec.c0_interface)});
    }
    out.csv = csv.text;
    return out;
}

ExperimentResult run_cfl_sweep(const ExperimentConfig& c, const RunOptions& opts) {
    WaveProblem pb = problems::by_name(problem_or(c, "u1"), c.wavenumber, c.final_time);
    const double T = pb.final_time();
    const double ht = c.h_time > 0 ? c.h_time : 0.15625;
    const int n_time = std::max(1, static_cast<int>(std::lround(T / ht)));
    const double ht_actual = T / n_time;

    ExperimentResult out;
    out.name = c.name;
    Csv csv;
    csv.header(
        "problem,method,p,delta,ratio_nominal,ratio,n_space,n_time,h_space,h_time,Ndof,"
        "L2rel,H1rel,residual,diverged");
    for (double ratio : c.ratios) {
        CaseSpec spec = base_spec(c, pb);
        spec.n_time = n_time;
        spec.n_space_x = std::max(2, static_cast<int>(std::lround(ratio / ht_actual)));
        CaseResult r = solve_case(spec, opts);
        // Blow-up rows are expected output here, not failures.
        csv.row({pb.name, method_name(spec.method), std::to_string(spec.p_space),
                 format_g17(spec.delta), format_g17(ratio), format_g17(r.h_time / r.h_space),
                 std::to_string(spec.n_space_x), std::to_string(spec.n_time),
                 format_g17(r.h_space), format_g17(r.h_time), std::to_string(r.n_dof),
                 format_g17(r.errors.l2_rel), format_g17(r.errors.h1_rel),
                 format_g17(r.residual), flag(r.errors.diverged)});
    }
    out.csv = csv.text;
    return out;
}

ExperimentResult run_delta_sweep(const ExperimentConfig& c, const RunOptions& opts) {
    WaveProblem pb = problems::by_name(problem_or(c, "u1"), c.wavenumber, c.final_time);
    std::vector<double> deltas = c.deltas;
    if (deltas.empty())
        for (int e = 0; e >= -8; --e) deltas.push_back(std::pow(10.0, e));

    ExperimentResult out;
    out.name = c.name;
    Csv csv;
    csv.header("problem,p,delta,n_space,n_time,h_space,h_time,Ndof,L2rel,H1rel,residual,diverged");
    for (double delta : deltas) {
        CaseSpec spec = base_spec(c, pb);
        spec.method = Method::iga_stab;
        spec.delta = delta;
        spec.n_space_x = c.n_space.front();
        spec.n_time = derived_n_time(c, pb, 0, spec.n_space_x);
        CaseResult r = solve_case(spec, opts);
        csv.row({pb.name, std::to_string(spec.p_space), format_g17(delta),
                 std::to_string(spec.n_space_x), std::to_string(spec.n_time),
                 format_g17(r.h_space), format_g17(r.h_time), std::to_string(r.n_dof),
                 format_g17(r.errors.l2_rel), format_g17(r.errors.h1_rel),
                 format_g17(r.residual), flag(r.errors.diverged)});
    }
    out.csv = csv.text;
    return out;
}

ExperimentResult run_energy(const ExperimentConfig& c, const RunOptions& opts) {
    WaveProblem pb = problems::by_name(problem_or(c, "energy"), c.wavenumber, c.final_time);
    CaseSpec spec = base_spec(c, pb);
    spec.n_space_x = c.n_space.front();
    spec.n_time = derived_n_time(c, pb, 0, spec.n_space_x);
    CaseResult r = solve_case(spec, opts);

    ExperimentResult out;
    out.name = c.name;
    out.solver_failed = r.singular;
    Csv csv;
    csv.header("t,E_h,E,rel_error,sign");
    if (!r.singular) {
        EnergyTrace tr =
            energy_trace(r.solution, pb, problems::energy_exact_value(), c.samples);
        for (std::size_t k = 0; k < tr.times.size(); ++k)
            csv.row({format_g17(tr.times[k]), format_g17(tr.energy[k]),
                     format_g17(tr.exact_energy), format_g17(tr.rel_error[k]),
                     std::to_string(tr.sign[k])});
    }
    out.csv = csv.text;
    return out;
}

ExperimentResult run_dispersion(const ExperimentConfig& c, const RunOptions& opts) {
    WaveProblem pb = problems::by_name(problem_or(c, "tent"), c.wavenumber, c.final_time);
    CaseSpec spec = base_spec(c, pb);
    spec.n_space_x = c.n_space.front();
    spec.n_time = derived_n_time(c, pb, 0, spec.n_space_x);
    CaseResult r = solve_case(spec, opts);

    ExperimentResult out;
    out.name = c.name;
    out.solver_failed = r.singular;
    Csv csv;
    csv.header("mode,t,phase_error");
    if (!r.singular) {
        std::vector<std::complex<double>> c0;
        for (int n : c.modes)
            c0.push_back(problems::initial_fourier_coefficient(pb.initial_value, n));
        FourierFn exact = [&](int mode, double t) {
            std::size_t mi = 0;
            while (mi < c.modes.size() && c.modes[mi] != mode) ++mi;
            const double ph = -2.0 * kPi * mode * t;
            return c0[mi] * std::complex<double>(std::cos(ph), std::sin(ph));
        };
        std::vector<double> times(c.samples);
        const double T = pb.final_time();
        for (int k = 0; k < c.samples; ++k)
            times[k] = (c.samples == 1) ? T : T * k / (c.samples - 1);
        PhaseErrorTrace tr = phase_errors(r.solution, pb, c.modes, times, exact);
        for (std::size_t mi = 0; mi < tr.modes.size(); ++mi)
            for (std::size_t ti = 0; ti < tr.times.size(); ++ti)
                csv.row({std::to_string(tr.modes[mi]), format_g17(tr.times[ti]),
                         format_g17(tr.phase[mi][ti])});
    }
    out.csv = csv.text;
    return out;
}

// Scattering mesh family: quasi-uniform physical elements (radial count and
// time steps tied to the angular count) on the half annulus.
struct ScatteringMesh {
    int n_theta, n_r, n_time;
};

ScatteringMesh scattering_mesh(int n_theta, double T) {
    ScatteringMesh m;
    m.n_theta = n_theta;
    m.n_r = std::max(2, static_cast<int>(std::lround(n_theta / kPi)));
    // h_t ~ 0.4 * outer-arc mesh size, dyadic across dyadic n_theta.
    m.n_time = std::max(2, static_cast<int>(std::lround(T * n_theta / 4.0)));
    return m;
}

ExperimentResult run_scattering(const ExperimentConfig& c, const RunOptions& opts) {
    const double T = c.final_time > 0 ? c.final_time : 1.0;
    WaveProblem pb = problems::scattering(T);

    ExperimentResult out;
    out.name = c.name;
    Csv csv;
    csv.header(
        "n_theta,n_r,n_time,h_space,h_time,Ndof,L2self,H1self,L2rate,H1rate,residual,"
        "is_reference");

    const int ref_n = c.reference_n > 0 ? c.reference_n : 4 * c.n_space.back();
    const ScatteringMesh rm = scattering_mesh(ref_n, T);
    CaseSpec ref_spec = base_spec(c, pb);
    ref_spec.n_space_x = rm.n_r;
    ref_spec.n_space_y = rm.n_theta;
    ref_spec.n_time = rm.n_time;
    CaseResult ref = solve_case(ref_spec, opts);
    out.solver_failed |= ref.singular;
    if (ref.singular) {
        out.csv = csv.text;
        return out;
    }

    // The reference plays the exact solution for the coarser levels.
    WaveProblem ref_pb = pb;
    const DiscreteFunction& uref = ref.solution;
    ref_pb.exact_value = [&uref](const Point& x, double t) { return uref.value(x, t); };
    ref_pb.exact_dt = [&uref](const Point& x, double t) { return uref.value(x, t, 0, 1); };
    ref_pb.exact_gradient = [&uref](const Point& x, double t) { return uref.gradient(x, t); };
    ref_pb.has_exact = true;

    std::vector<double> hs, l2, h1;
    for (int n_theta : c.n_space) {
        const ScatteringMesh m = scattering_mesh(n_theta, T);
        CaseSpec spec = base_spec(c, ref_pb);
        spec.n_space_x = m.n_r;
        spec.n_space_y = m.n_theta;
        spec.n_time = m.n_time;
        CaseResult r = solve_case(spec, opts);
        out.solver_failed |= r.singular;

        double l2rate = std::numeric_limits<double>::quiet_NaN(), h1rate = l2rate;
        if (!r.errors.diverged) {
            hs.push_back(r.h_time);
            l2.push_back(r.errors.l2_rel);
            h1.push_back(r.errors.h1_rel);
            if (hs.size() >= 2) {
                l2rate = convergence_rates(hs, l2).back();
                h1rate = convergence_rates(hs, h1).back();
            }
        }
        csv.row({std::to_string(m.n_theta), std::to_string(m.n_r), std::to_string(m.n_time),
                 format_g17(r.h_space), format_g17(r.h_time), std::to_string(r.n_dof),
                 format_g17(r.errors.l2_rel), format_g17(r.errors.h1_rel), format_g17(l2rate),
                 format_g17(h1rate), format_g17(r.residual), "0"});
    }
    csv.row({std::to_string(rm.n_theta), std::to_string(rm.n_r), std::to_string(rm.n_time),
             format_g17(ref.h_space), format_g17(ref.h_time), std::to_string(ref.n_dof),
             "nan", "nan", "nan", "nan", format_g17(ref.residual), "1"});
    out.csv = csv.text;
    return out;
}

ExperimentResult run_stability_bound(const ExperimentConfig& c, const RunOptions& opts) {
    ExperimentResult out;
    out.name = c.name;
    Csv csv;
    csv.header("seed,n_space,n_time,Ndof,norm_uh,norm_f,bound_constant,ratio");
    const double T = c.final_time > 0 ? c.final_time : 1.0;
    for (int k = 0; k < c.n_random; ++k) {
        const unsigned seed = opts.seed + static_cast<unsigned>(k);
        WaveProblem pb = problems::random_source(seed, T);
        CaseSpec spec = base_spec(c, pb);
        spec.n_space_x = c.n_space.front();
        spec.n_time = c.n_time.empty() ? c.n_space.front() : c.n_time.front();
        CaseResult r = solve_case(spec, opts);
        out.solver_failed |= r.singular;
        if (r.singular) continue;
        StabilityCheck chk = stability_bound_check(r.solution, pb);
        csv.row({std::to_string(seed), std::to_string(spec.n_space_x),
                 std::to_string(spec.n_time), std::to_string(r.n_dof),
                 format_g17(chk.norm_uh), format_g17(chk.norm_f),
                 format_g17(chk.bound_constant), format_g17(chk.ratio)});
    }
    out.csv = csv.text;
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c, const RunOptions& opts) {
    ExperimentResult r;
    switch (c.kind) {
        case ExperimentKind::convergence:
        case ExperimentKind::disc_velocity:
            r = run_convergence(c, opts);
            break;
        case ExperimentKind::cfl_sweep: r = run_cfl_sweep(c, opts); break;
        case ExperimentKind::delta_sweep: r = run_delta_sweep(c, opts); break;
        case ExperimentKind::energy: r = run_energy(c, opts); break;
        case ExperimentKind::dispersion: r = run_dispersion(c, opts); break;
        case ExperimentKind::scattering: r = run_scattering(c, opts); break;
        case ExperimentKind::stability_bound: r = run_stability_bound(c, opts); break;
    }
    r.file_name = c.out.empty() ? c.name + ".csv" : c.out;
    return r;
}

int run_config_file(const std::string& config_path, const std::string& out_dir,
                    const RunOptions& opts) {
    const auto configs = parse_config_file(config_path);
    std::filesystem::create_directories(out_dir);
    bool failed = false;
    for (const auto& c : configs) {
        ExperimentResult r = run_experiment(c, opts);
        const auto path = std::filesystem::path(out_dir) / r.file_name;
        std::ofstream f(path);
        f << r.csv;
        if (!opts.quiet)
            std::fprintf(stdout, "%s -> %s%s\n", c.name.c_str(), path.c_str(),
                         r.solver_failed ? "  [solver failure]" : "");
        failed |= r.solver_failed;
    }
    return failed ? 2 : 0;
}

}  // namespace stwave
