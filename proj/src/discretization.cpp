#include "stwave/discretization.hpp"

#include <cmath>
#include <stdexcept>

namespace stwave {

Space1D Space1D::full(KnotVector k) {
    Space1D s{std::move(k), {}, {}};
    s.active.resize(s.kv.n_basis());
    s.full_to_active.resize(s.kv.n_basis());
    for (int i = 0; i < s.kv.n_basis(); ++i) {
        s.active[i] = i;
        s.full_to_active[i] = i;
    }
    return s;
}

Space1D Space1D::constrained(KnotVector k, bool drop_first, bool drop_last) {
    Space1D s{std::move(k), {}, {}};
    const int m = s.kv.n_basis();
    s.full_to_active.assign(m, -1);
    for (int i = 0; i < m; ++i) {
        if (drop_first && i == 0) continue;
        if (drop_last && i == m - 1) continue;
        s.full_to_active[i] = static_cast<int>(s.active.size());
        s.active.push_back(i);
    }
    return s;
}

SpaceTimeSpace::SpaceTimeSpace(std::vector<Space1D> spatial, Space1D temporal, SpaceRole role)
    : spatial_(std::move(spatial)), temporal_(std::move(temporal)), role_(role) {
    n_spatial_ = 1;
    for (const auto& s : spatial_) n_spatial_ *= s.n_active();
    n_temporal_ = temporal_.n_active();
}

std::vector<int> SpaceTimeSpace::tensor_dims() const {
    std::vector<int> dims{n_temporal_};
    for (int d = dim() - 1; d >= 0; --d) dims.push_back(spatial_[d].n_active());
    return dims;
}

std::vector<bool> SpaceTimeSpace::tensor_periodic() const {
    std::vector<bool> per{false};
    for (int d = dim() - 1; d >= 0; --d) per.push_back(spatial_[d].kv.is_periodic());
    return per;
}

std::pair<SpaceTimeSpace, SpaceTimeSpace>
build_spaces(std::vector<KnotVector> spatial, KnotVector temporal, const GeometryMap& geometry) {
    if (temporal.is_periodic())
        throw std::invalid_argument("build_spaces: periodic temporal space unsupported");
    if (temporal.degree() < 1)
        throw std::invalid_argument("build_spaces: temporal degree must be at least 1");
    if (static_cast<int>(spatial.size()) != geometry.dim())
        throw std::invalid_argument("build_spaces: spatial factor count does not match geometry");

    std::vector<Space1D> factors;
    for (int d = 0; d < geometry.dim(); ++d) {
        if (spatial[d].degree() < 1)
            throw std::invalid_argument("build_spaces: spatial degree must be at least 1");
        if (spatial[d].is_periodic()) {
            factors.push_back(Space1D::full(spatial[d]));
            continue;
        }
        const bool left = geometry.face_kind({d, 0}) == BoundaryKind::dirichlet;
        const bool right = geometry.face_kind({d, 1}) == BoundaryKind::dirichlet;
        factors.push_back(Space1D::constrained(spatial[d], left, right));
    }

    Space1D trial_t = Space1D::constrained(temporal, true, false);
    Space1D test_t = Space1D::constrained(temporal, false, true);
    SpaceTimeSpace trial(factors, std::move(trial_t), SpaceRole::trial);
    SpaceTimeSpace test(std::move(factors), std::move(test_t), SpaceRole::test);
    return {std::move(trial), std::move(test)};
}

SpaceTimeSpace unconstrained_space(std::vector<KnotVector> spatial, KnotVector temporal) {
    std::vector<Space1D> factors;
    factors.reserve(spatial.size());
    for (auto& k : spatial) factors.push_back(Space1D::full(std::move(k)));
    return SpaceTimeSpace(std::move(factors), Space1D::full(std::move(temporal)),
                          SpaceRole::unconstrained);
}

DiscreteFunction::DiscreteFunction(std::shared_ptr<const SpaceTimeSpace> space,
                                   std::shared_ptr<const GeometryMap> geometry,
                                   Eigen::VectorXd coefficients)
    : space_(std::move(space)), geometry_(std::move(geometry)), coeffs_(std::move(coefficients)) {
    if (coeffs_.size() != space_->n_dof())
        throw std::invalid_argument("DiscreteFunction: coefficient count does not match space");
}

namespace {

// Raw parametric derivative d^dx_eta1 d^dy_eta2 d^dt_tau of the spline.
double evaluate_raw(const SpaceTimeSpace& sp, const Eigen::VectorXd& c, const Point& eta,
                    double tau, int dx, int dy, int dt) {
    const BasisTable bt = sp.temporal().kv.eval_basis(tau, dt);
    const BasisTable bx = sp.spatial(0).kv.eval_basis(eta[0], dx);
    const int d = sp.dim();

    double out = 0.0;
    if (d == 1) {
        for (int jt = 0; jt < bt.n_funcs; ++jt) {
            const int at = sp.temporal().full_to_active[bt.index[jt]];
            if (at < 0) continue;
            double sx = 0.0;
            for (int jx = 0; jx < bx.n_funcs; ++jx) {
                const int ax = sp.spatial(0).full_to_active[bx.index[jx]];
                if (ax < 0) continue;
                sx += c[sp.flatten(ax, at)] * bx.value(dx, jx);
            }
            out += sx * bt.value(dt, jt);
        }
        return out;
    }

    const BasisTable by = sp.spatial(1).kv.eval_basis(eta[1], dy);
    for (int jt = 0; jt < bt.n_funcs; ++jt) {
        const int at = sp.temporal().full_to_active[bt.index[jt]];
        if (at < 0) continue;
        double sy = 0.0;
        for (int jy = 0; jy < by.n_funcs; ++jy) {
            const int ay = sp.spatial(1).full_to_active[by.index[jy]];
            if (ay < 0) continue;
            double sx = 0.0;
            for (int jx = 0; jx < bx.n_funcs; ++jx) {
                const int ax = sp.spatial(0).full_to_active[bx.index[jx]];
                if (ax < 0) continue;
                sx += c[sp.flatten(sp.spatial_index(ax, ay), at)] * bx.value(dx, jx);
            }
            sy += sx * by.value(dy, jy);
        }
        out += sy * bt.value(dt, jt);
    }
    return out;
}

}  // namespace

double DiscreteFunction::value_param(const Point& eta, double tau, int time_deriv) const {
    const double raw = evaluate_raw(*space_, coeffs_, eta, tau, 0, 0, time_deriv);
    return raw * std::pow(geometry_->final_time(), -time_deriv);
}

Point DiscreteFunction::gradient_param(const Point& eta, double tau, int time_deriv) const {
    Point g{evaluate_raw(*space_, coeffs_, eta, tau, 1, 0, time_deriv), 0.0};
    if (space_->dim() > 1) g[1] = evaluate_raw(*space_, coeffs_, eta, tau, 0, 1, time_deriv);
    const double ts = std::pow(geometry_->final_time(), -time_deriv);
    Point phys = geometry_->pullback_gradient(eta, g);
    return {phys[0] * ts, phys[1] * ts};
}

double DiscreteFunction::value(const Point& x, double t, int space_deriv, int time_deriv,
                               int space_dir) const {
    const Point eta = geometry_->inverse(x);
    const double tau = t / geometry_->final_time();
    if (space_deriv == 0) return value_param(eta, tau, time_deriv);
    if (space_deriv == 1) return gradient_param(eta, tau, time_deriv)[space_dir];
    if (!geometry_->is_affine_box())
        throw std::invalid_argument("evaluate: higher spatial derivatives need a box geometry");
    const int dx = space_dir == 0 ? space_deriv : 0;
    const int dy = space_dir == 1 ? space_deriv : 0;
    const double raw = evaluate_raw(*space_, coeffs_, eta, tau, dx, dy, time_deriv);
    return raw * std::pow(geometry_->box_lengths()[space_dir], -space_deriv) *
           std::pow(geometry_->final_time(), -time_deriv);
}

Point DiscreteFunction::gradient(const Point& x, double t) const {
    return gradient_param(geometry_->inverse(x), t / geometry_->final_time());
}

namespace {

// Collocation matrix of a 1D spline basis at given points.
Eigen::MatrixXd collocation_matrix(const KnotVector& kv, const std::vector<double>& pts) {
    const int m = kv.n_basis();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        const BasisTable bt = kv.eval_basis(pts[i], 0);
        for (int j = 0; j < bt.n_funcs; ++j) B(i, bt.index[j]) += bt.value(0, j);
    }
    return B;
}

}  // namespace

DiscreteFunction interpolate_lifting(const SpaceFn& u0, const std::vector<KnotVector>& spatial,
                                     const KnotVector& temporal,
                                     std::shared_ptr<const GeometryMap> geometry) {
    const int d = static_cast<int>(spatial.size());
    auto space = std::make_shared<SpaceTimeSpace>(unconstrained_space(spatial, temporal));

    const int mt = temporal.n_basis();
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(space->n_dof());
    if (!u0) {  // zero datum, zero lifting
        return DiscreteFunction(space, std::move(geometry), std::move(coeffs));
    }

    Eigen::MatrixXd spatial_coeffs;
    if (d == 1) {
        const auto pts = collocation_points(spatial[0]);
        Eigen::VectorXd rhs(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            rhs[i] = u0(geometry->map({pts[i], 0.0}));
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(collocation_matrix(spatial[0], pts));
        spatial_coeffs = lu.solve(rhs);
    } else {
        const auto px = collocation_points(spatial[0]);
        const auto py = collocation_points(spatial[1]);
        Eigen::MatrixXd rhs(px.size(), py.size());
        for (std::size_t i = 0; i < px.size(); ++i)
            for (std::size_t j = 0; j < py.size(); ++j)
                rhs(i, j) = u0(geometry->map({px[i], py[j]}));
        Eigen::PartialPivLU<Eigen::MatrixXd> lux(collocation_matrix(spatial[0], px));
        Eigen::PartialPivLU<Eigen::MatrixXd> luy(collocation_matrix(spatial[1], py));
        spatial_coeffs = luy.solve(lux.solve(rhs).transpose()).transpose();
    }

    // Constant-in-time extension: replicate the spatial coefficients across
    // the full temporal basis (partition of unity in time).
    const int ms = space->n_spatial();
    for (int it = 0; it < mt; ++it)
        for (int is = 0; is < ms; ++is)
            coeffs[it * ms + is] =
                (d == 1) ? spatial_coeffs(is, 0)
                         : spatial_coeffs(is % spatial[0].n_basis(), is / spatial[0].n_basis());

    return DiscreteFunction(space, std::move(geometry), std::move(coeffs));
}

DiscreteFunction combine_with_lifting(const DiscreteFunction& w, const DiscreteFunction* lifting) {
    const SpaceTimeSpace& cs = w.space();
    std::vector<KnotVector> spatial;
    for (int d = 0; d < cs.dim(); ++d) spatial.push_back(cs.spatial(d).kv);
    auto full = std::make_shared<SpaceTimeSpace>(unconstrained_space(spatial, cs.temporal().kv));

    Eigen::VectorXd total = Eigen::VectorXd::Zero(full->n_dof());
    if (lifting) {
        if (lifting->space().n_dof() != full->n_dof())
            throw std::invalid_argument("combine_with_lifting: lifting space mismatch");
        total = lifting->coefficients();
    }

    const int nx = cs.spatial(0).n_active();
    const int ny = cs.dim() > 1 ? cs.spatial(1).n_active() : 1;
    for (int it = 0; it < cs.n_temporal(); ++it) {
        const int ft = cs.temporal().active[it];
        for (int iy = 0; iy < ny; ++iy) {
            const int fy = cs.dim() > 1 ? cs.spatial(1).active[iy] : 0;
            for (int ix = 0; ix < nx; ++ix) {
                const int fx = cs.spatial(0).active[ix];
                const int fs = cs.dim() > 1 ? fy * cs.spatial(0).kv.n_basis() + fx : fx;
                total[ft * full->n_spatial() + fs] += w.coefficients()[cs.flatten(
                    cs.spatial_index(ix, iy), it)];
            }
        }
    }

    auto geom = std::make_shared<GeometryMap>(w.geometry());
    return DiscreteFunction(full, std::move(geom), std::move(total));
}

}  // namespace stwave
