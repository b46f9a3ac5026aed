#pragma once

#include <array>

namespace stwave {

using Point = std::array<double, 2>;  // y ignored when the dimension is 1
using Mat2 = std::array<double, 4>;   // row-major 2x2

enum class BoundaryKind { dirichlet, neumann, robin };

/// Parametric boundary face of the spatial domain: eta_dir = side (0 or 1).
struct Face {
    int dir = 0;
    int side = 0;
};

/// Map G(eta,tau) = (F(eta), T*tau) from the parametric box [0,1]^d x [0,1]
/// to the physical space-time cylinder Omega x (0,T).
///
/// Two concrete maps are supported: axis-aligned boxes (affine, constant
/// Jacobian) and the half annulus r_in <= |x| <= r_out, y >= 0 via the
/// analytic polar map.  Splines cannot represent circular arcs exactly, so
/// the annulus intentionally bypasses an isoparametric spline geometry; the
/// assembly only ever needs F, DF and face measures at quadrature points.
class GeometryMap {
public:
    static GeometryMap unit_box(int dim, const Point& lengths, double final_time);
    static GeometryMap half_annulus(double r_in, double r_out, double final_time);

    int dim() const { return dim_; }
    double final_time() const { return time_; }
    bool is_affine_box() const { return kind_ == Kind::box; }
    Point box_lengths() const { return lengths_; }

    Point map(const Point& eta) const;
    Mat2 jacobian(const Point& eta) const;
    double jacobian_det(const Point& eta) const;

    /// Parametric preimage of a physical point (analytic for both maps).
    Point inverse(const Point& x) const;

    /// Physical gradient DF^{-T} * parametric gradient at eta.
    /// Throws std::runtime_error when DF is singular.
    Point pullback_gradient(const Point& eta, const Point& param_grad) const;

    /// Parametric point on a face; s parametrizes the in-face direction(s).
    Point face_point(const Face& f, double s) const;
    /// Surface measure |dF/ds| along a face (1 for the endpoints in 1D).
    double face_measure(const Face& f, double s) const;

    BoundaryKind face_kind(const Face& f) const { return face_kinds_[f.dir][f.side]; }
    void set_face_kind(const Face& f, BoundaryKind k) { face_kinds_[f.dir][f.side] = k; }

    int n_faces() const { return 2 * dim_; }
    Face face(int i) const { return Face{i / 2, i % 2}; }

private:
    enum class Kind { box, half_annulus };

    Kind kind_ = Kind::box;
    int dim_ = 1;
    double time_ = 1.0;
    Point lengths_{1.0, 1.0};
    double r_in_ = 1.0, r_out_ = 2.0;
    std::array<std::array<BoundaryKind, 2>, 2> face_kinds_{};
};

GeometryMap unit_box(int dim, const Point& lengths, double final_time);
GeometryMap half_annulus(double r_in, double r_out, double final_time);

}  // namespace stwave
