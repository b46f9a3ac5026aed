#include "stwave/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stwave {

namespace {
constexpr double kPi = std::numbers::pi;
}

GeometryMap GeometryMap::unit_box(int dim, const Point& lengths, double final_time) {
    if (dim < 1 || dim > 2) throw std::invalid_argument("geometry: dimension must be 1 or 2");
    if (final_time <= 0.0) throw std::domain_error("geometry: final time must be positive");
    for (int i = 0; i < dim; ++i)
        if (lengths[i] <= 0.0) throw std::domain_error("geometry: nonpositive box length");

    GeometryMap g;
    g.kind_ = Kind::box;
    g.dim_ = dim;
    g.time_ = final_time;
    g.lengths_ = lengths;
    for (auto& side : g.face_kinds_) side = {BoundaryKind::dirichlet, BoundaryKind::dirichlet};
    return g;
}

GeometryMap GeometryMap::half_annulus(double r_in, double r_out, double final_time) {
    if (!(0.0 < r_in && r_in < r_out))
        throw std::domain_error("geometry: half annulus needs 0 < r_in < r_out");
    if (final_time <= 0.0) throw std::domain_error("geometry: final time must be positive");

    GeometryMap g;
    g.kind_ = Kind::half_annulus;
    g.dim_ = 2;
    g.time_ = final_time;
    g.r_in_ = r_in;
    g.r_out_ = r_out;
    // eta1: radial (inner circle at side 0), eta2: angular (flat segments).
    g.face_kinds_[0] = {BoundaryKind::dirichlet, BoundaryKind::robin};
    g.face_kinds_[1] = {BoundaryKind::neumann, BoundaryKind::neumann};
    return g;
}

Point GeometryMap::map(const Point& eta) const {
    if (kind_ == Kind::box) {
        return {lengths_[0] * eta[0], dim_ > 1 ? lengths_[1] * eta[1] : 0.0};
    }
    const double r = r_in_ + (r_out_ - r_in_) * eta[0];
    const double th = kPi * eta[1];
    return {r * std::cos(th), r * std::sin(th)};
}

Mat2 GeometryMap::jacobian(const Point& eta) const {
    if (kind_ == Kind::box) {
        return {lengths_[0], 0.0, 0.0, dim_ > 1 ? lengths_[1] : 1.0};
    }
    const double dr = r_out_ - r_in_;
    const double r = r_in_ + dr * eta[0];
    const double th = kPi * eta[1];
    return {dr * std::cos(th), -kPi * r * std::sin(th),
            dr * std::sin(th), kPi * r * std::cos(th)};
}

double GeometryMap::jacobian_det(const Point& eta) const {
    if (kind_ == Kind::box) return dim_ > 1 ? lengths_[0] * lengths_[1] : lengths_[0];
    const double dr = r_out_ - r_in_;
    return kPi * dr * (r_in_ + dr * eta[0]);
}

Point GeometryMap::inverse(const Point& x) const {
    if (kind_ == Kind::box) {
        return {x[0] / lengths_[0], dim_ > 1 ? x[1] / lengths_[1] : 0.0};
    }
    const double r = std::hypot(x[0], x[1]);
    const double th = std::atan2(x[1], x[0]);
    return {(r - r_in_) / (r_out_ - r_in_), th / kPi};
}

Point GeometryMap::pullback_gradient(const Point& eta, const Point& g) const {
    if (dim_ == 1) {
        const double j = jacobian(eta)[0];
        if (j == 0.0) throw std::runtime_error("geometry: singular Jacobian");
        return {g[0] / j, 0.0};
    }
    const Mat2 J = jacobian(eta);
    const double det = J[0] * J[3] - J[1] * J[2];
    if (det == 0.0) throw std::runtime_error("geometry: singular Jacobian");
    // DF^{-T} g with DF^{-1} = adj(DF)/det.
    return {(J[3] * g[0] - J[2] * g[1]) / det, (-J[1] * g[0] + J[0] * g[1]) / det};
}

Point GeometryMap::face_point(const Face& f, double s) const {
    Point eta{0.0, 0.0};
    eta[f.dir] = static_cast<double>(f.side);
    if (dim_ > 1) eta[1 - f.dir] = s;
    return eta;
}

double GeometryMap::face_measure(const Face& f, double s) const {
    if (dim_ == 1) return 1.0;
    const Point eta = face_point(f, s);
    const Mat2 J = jacobian(eta);
    const int t = 1 - f.dir;  // in-face parametric direction
    const double tx = J[t], ty = J[2 + t];
    return std::hypot(tx, ty);
}

GeometryMap unit_box(int dim, const Point& lengths, double final_time) {
    return GeometryMap::unit_box(dim, lengths, final_time);
}

GeometryMap half_annulus(double r_in, double r_out, double final_time) {
    return GeometryMap::half_annulus(r_in, r_out, final_time);
}

}  // namespace stwave
