#include "stwave/analysis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stwave/quadrature.hpp"

namespace stwave {

namespace {

constexpr double kPi = std::numbers::pi;

struct QuadGrid {
    std::vector<double> x, w;  // flattened element*nq+q
    int nq = 0;
};

QuadGrid make_grid(const KnotVector& kv, int nq) {
    QuadGrid g;
    g.nq = nq;
    const QuadRule rule = gauss_legendre(nq);
    g.x.resize(kv.n_elements() * nq);
    g.w.resize(kv.n_elements() * nq);
    for (int e = 0; e < kv.n_elements(); ++e) {
        auto [xs, ws] = map_to_element(rule, kv.element_start(e), kv.element_end(e));
        for (int q = 0; q < nq; ++q) {
            g.x[e * nq + q] = xs[q];
            g.w[e * nq + q] = ws[q];
        }
    }
    return g;
}

int default_quad(const DiscreteFunction& uh) {
    int p = uh.space().temporal().kv.degree();
    for (int k = 0; k < uh.space().dim(); ++k)
        p = std::max(p, uh.space().spatial(k).kv.degree());
    return p + 3;
}

// Sweep all space-time quadrature points of the solution's mesh.
template <class Body>
void for_each_point(const DiscreteFunction& uh, int nq, Body&& body) {
    const SpaceTimeSpace& sp = uh.space();
    const GeometryMap& geom = uh.geometry();
    const int d = sp.dim();
    const double T = geom.final_time();

    QuadGrid gt = make_grid(sp.temporal().kv, nq);
    QuadGrid gx = make_grid(sp.spatial(0).kv, nq);
    QuadGrid gy = d > 1 ? make_grid(sp.spatial(1).kv, nq) : QuadGrid{};

    const std::size_t ny = d > 1 ? gy.x.size() : 1;
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < gx.x.size(); ++ix) {
            const Point eta{gx.x[ix], d > 1 ? gy.x[iy] : 0.0};
            const double det = geom.jacobian_det(eta);
            double ws = gx.w[ix] * det;
            if (d > 1) ws *= gy.w[iy];
            const Point xphys = geom.map(eta);
            for (std::size_t it = 0; it < gt.x.size(); ++it) {
                const double tau = gt.x[it];
                body(eta, xphys, tau, T * tau, ws * gt.w[it] * T);
            }
        }
}

// Spatial-only sweep at a fixed parametric time.
template <class Body>
void for_each_space_point(const DiscreteFunction& uh, int nq, Body&& body) {
    const SpaceTimeSpace& sp = uh.space();
    const GeometryMap& geom = uh.geometry();
    const int d = sp.dim();

    QuadGrid gx = make_grid(sp.spatial(0).kv, nq);
    QuadGrid gy = d > 1 ? make_grid(sp.spatial(1).kv, nq) : QuadGrid{};
    const std::size_t ny = d > 1 ? gy.x.size() : 1;
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < gx.x.size(); ++ix) {
            const Point eta{gx.x[ix], d > 1 ? gy.x[iy] : 0.0};
            const double det = geom.jacobian_det(eta);
            double ws = gx.w[ix] * det;
            if (d > 1) ws *= gy.w[iy];
            body(eta, geom.map(eta), ws);
        }
}

}  // namespace

ErrorReport space_time_errors(const DiscreteFunction& uh, const WaveProblem& pb, int n_quad) {
    if (!pb.has_exact)
        throw std::invalid_argument("space_time_errors: problem carries no exact solution");
    const int nq = n_quad > 0 ? n_quad : default_quad(uh);
    const int d = uh.space().dim();

    double num_l2 = 0.0, den_l2 = 0.0, num_h1 = 0.0, den_h1 = 0.0;
    for_each_point(uh, nq, [&](const Point& eta, const Point& x, double tau, double t, double w) {
        const double ue = pb.exact_value(x, t);
        const double dte = pb.exact_dt(x, t);
        const Point ge = pb.exact_gradient(x, t);
        const double c = pb.velocity_at(x, t);

        const double uv = uh.value_param(eta, tau);
        const double dtv = uh.value_param(eta, tau, 1);
        const Point gv = uh.gradient_param(eta, tau);

        num_l2 += w * (ue - uv) * (ue - uv);
        den_l2 += w * ue * ue;
        double gdiff = (ge[0] - gv[0]) * (ge[0] - gv[0]);
        double gex = ge[0] * ge[0];
        if (d > 1) {
            gdiff += (ge[1] - gv[1]) * (ge[1] - gv[1]);
            gex += ge[1] * ge[1];
        }
        num_h1 += w * ((dte - dtv) * (dte - dtv) + c * c * gdiff);
        den_h1 += w * (dte * dte + c * c * gex);
    });

    const double T = uh.geometry().final_time();
    double num_l2f = 0.0, den_l2f = 0.0, num_h1f = 0.0, den_h1f = 0.0;
    for_each_space_point(uh, nq, [&](const Point& eta, const Point& x, double w) {
        const double ue = pb.exact_value(x, T);
        const Point ge = pb.exact_gradient(x, T);
        const double uv = uh.value_param(eta, 1.0);
        const Point gv = uh.gradient_param(eta, 1.0);
        num_l2f += w * (ue - uv) * (ue - uv);
        den_l2f += w * ue * ue;
        double gdiff = (ge[0] - gv[0]) * (ge[0] - gv[0]);
        double gex = ge[0] * ge[0];
        if (d > 1) {
            gdiff += (ge[1] - gv[1]) * (ge[1] - gv[1]);
            gex += ge[1] * ge[1];
        }
        num_h1f += w * gdiff;
        den_h1f += w * gex;
    });

    ErrorReport rep;
    rep.l2_abs = std::sqrt(num_l2);
    rep.h1_abs = std::sqrt(num_h1);
    rep.relative_valid = den_l2 > 0.0 && den_h1 > 0.0;
    rep.l2_rel = rep.relative_valid ? std::sqrt(num_l2 / den_l2) : rep.l2_abs;
    rep.h1_rel = rep.relative_valid ? std::sqrt(num_h1 / den_h1) : rep.h1_abs;
    rep.l2_final = den_l2f > 0.0 ? std::sqrt(num_l2f / den_l2f) : std::sqrt(num_l2f);
    rep.h1_final = den_h1f > 0.0 ? std::sqrt(num_h1f / den_h1f) : std::sqrt(num_h1f);
    rep.diverged = !(std::isfinite(rep.l2_rel) && std::isfinite(rep.h1_rel)) ||
                   rep.l2_rel > kBlowupThreshold || rep.h1_rel > kBlowupThreshold;
    return rep;
}

std::vector<double> convergence_rates(std::span<const double> h, std::span<const double> err) {
    if (h.size() != err.size() || h.size() < 2)
        throw std::invalid_argument("convergence_rates: need matching lists with >= 2 entries");
    for (std::size_t i = 0; i < h.size(); ++i)
        if (!(h[i] > 0.0) || !(err[i] > 0.0))
            throw std::domain_error("convergence_rates: entries must be positive");
    std::vector<double> rates(h.size() - 1);
    for (std::size_t i = 1; i < h.size(); ++i)
        rates[i - 1] = std::log(err[i - 1] / err[i]) / std::log(h[i - 1] / h[i]);
    return rates;
}

EnergyTrace energy_trace(const DiscreteFunction& uh, const WaveProblem&, double exact_energy,
                         int n_samples, int n_quad) {
    const int nq = n_quad > 0 ? n_quad : default_quad(uh);
    const double T = uh.geometry().final_time();

    EnergyTrace tr;
    tr.exact_energy = exact_energy;
    tr.times.resize(n_samples);
    tr.energy.resize(n_samples);
    tr.rel_error.resize(n_samples);
    tr.sign.resize(n_samples);

    for (int k = 0; k < n_samples; ++k) {
        const double tau = (n_samples == 1) ? 0.0 : double(k) / (n_samples - 1);
        double e = 0.0;
        for_each_space_point(uh, nq, [&](const Point& eta, const Point&, double w) {
            const double dt = uh.value_param(eta, tau, 1);
            const Point g = uh.gradient_param(eta, tau);
            double g2 = g[0] * g[0];
            if (uh.space().dim() > 1) g2 += g[1] * g[1];
            e += 0.5 * w * (dt * dt + g2);
        });
        tr.times[k] = T * tau;
        tr.energy[k] = e;
        tr.rel_error[k] = exact_energy != 0.0 ? std::abs(e - exact_energy) / exact_energy : e;
        tr.sign[k] = e >= exact_energy ? 1 : -1;
    }
    return tr;
}

PhaseErrorTrace phase_errors(const DiscreteFunction& uh, const WaveProblem& pb,
                             std::span<const int> modes, std::span<const double> times,
                             const FourierFn& exact_coefficient, int n_quad) {
    if (!pb.periodic_space)
        throw std::invalid_argument("phase_errors: needs a periodic spatial space");
    const int nq = n_quad > 0 ? n_quad : default_quad(uh);
    const double T = uh.geometry().final_time();
    const double L = uh.geometry().box_lengths()[0];

    PhaseErrorTrace tr;
    tr.modes.assign(modes.begin(), modes.end());
    tr.times.assign(times.begin(), times.end());
    tr.phase.assign(modes.size(), std::vector<double>(times.size(), 0.0));
    tr.skipped.assign(modes.size(), false);

    for (std::size_t mi = 0; mi < modes.size(); ++mi) {
        const int n = modes[mi];
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            const double t = times[ti];
            const std::complex<double> cn = exact_coefficient(n, t);
            if (std::abs(cn) == 0.0) {
                tr.skipped[mi] = true;
                continue;
            }
            std::complex<double> cnh{0.0, 0.0};
            for_each_space_point(uh, nq, [&](const Point& eta, const Point& x, double w) {
                const double ph = -2.0 * kPi * n * x[0] / L;
                cnh += w * uh.value_param(eta, t / T) *
                       std::complex<double>(std::cos(ph), std::sin(ph));
            });
            // The magnitude factor cancels: only the phase difference is left.
            tr.phase[mi][ti] = std::abs(std::arg(cn * std::conj(cnh)));
        }
    }
    return tr;
}

StabilityCheck stability_bound_check(const DiscreteFunction& uh, const WaveProblem& pb,
                                     int n_quad) {
    const int nq = n_quad > 0 ? n_quad : default_quad(uh);
    const double T = uh.geometry().final_time();

    double uu = 0.0, ff = 0.0;
    for_each_point(uh, nq, [&](const Point& eta, const Point& x, double tau, double t, double w) {
        const double uv = uh.value_param(eta, tau);
        uu += w * uv * uv;
        if (pb.source) {
            const double fv = pb.source(x, t);
            ff += w * fv * fv;
        }
    });

    StabilityCheck chk;
    chk.bound_constant = 4.0 / kPi * T * T;
    chk.norm_uh = std::sqrt(uu);
    chk.norm_f = std::sqrt(ff);
    if (chk.norm_f == 0.0) {
        chk.undefined = true;
        return chk;
    }
    chk.ratio = chk.norm_uh / (chk.bound_constant * chk.norm_f);
    return chk;
}

}  // namespace stwave
