#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stwave/geometry.hpp"
#include "stwave/problem.hpp"
#include "stwave/splines.hpp"

namespace stwave {

/// A univariate spline space with an active subset of its basis functions.
/// Constrained functions (Dirichlet traces, the initial/final temporal
/// function) are simply absent from the numbering.
struct Space1D {
    KnotVector kv;
    std::vector<int> active;          // kept global indices, increasing
    std::vector<int> full_to_active;  // -1 for constrained functions

    static Space1D full(KnotVector k);
    static Space1D constrained(KnotVector k, bool drop_first, bool drop_last);

    int n_active() const { return static_cast<int>(active.size()); }
    bool is_full() const { return n_active() == kv.n_basis(); }
};

enum class SpaceRole { trial, test, unconstrained };

/// Tensor product of spatial spline factors and a temporal factor with the
/// Petrov-Galerkin endpoint constraint (trial functions vanish at t=0, test
/// functions at t=T).  DOF numbering is lexicographic with the time index
/// slowest and the first space direction fastest.
class SpaceTimeSpace {
public:
    SpaceTimeSpace(std::vector<Space1D> spatial, Space1D temporal, SpaceRole role);

    int dim() const { return static_cast<int>(spatial_.size()); }
    SpaceRole role() const { return role_; }
    const Space1D& spatial(int d) const { return spatial_[d]; }
    const Space1D& temporal() const { return temporal_; }

    int n_spatial() const { return n_spatial_; }   // N_s
    int n_temporal() const { return n_temporal_; } // n_t
    int n_dof() const { return n_spatial_ * n_temporal_; }

    /// Active spatial index from per-direction active indices (x fastest).
    int spatial_index(int ix, int iy = 0) const {
        return dim() == 1 ? ix : iy * spatial_[0].n_active() + ix;
    }
    int flatten(int is, int it) const { return it * n_spatial_ + is; }
    std::pair<int, int> unflatten(int dof) const {
        return {dof % n_spatial_, dof / n_spatial_};
    }

    /// Active counts ordered slowest to fastest: [t, (y,) x].
    std::vector<int> tensor_dims() const;
    std::vector<bool> tensor_periodic() const;

private:
    std::vector<Space1D> spatial_;
    Space1D temporal_;
    SpaceRole role_;
    int n_spatial_ = 0, n_temporal_ = 0;
};

/// Trial and test spaces sharing the spatial factors; Dirichlet constraints
/// are read off the geometry's face tags.  The temporal vector must be open.
std::pair<SpaceTimeSpace, SpaceTimeSpace>
build_spaces(std::vector<KnotVector> spatial, KnotVector temporal, const GeometryMap& geometry);

/// The unconstrained tensor space (used for liftings and combined solutions).
SpaceTimeSpace unconstrained_space(std::vector<KnotVector> spatial, KnotVector temporal);

/// A spline coefficient vector bound to its space and geometry; evaluable
/// with space and time derivatives anywhere in the cylinder.
class DiscreteFunction {
public:
    DiscreteFunction() = default;
    DiscreteFunction(std::shared_ptr<const SpaceTimeSpace> space,
                     std::shared_ptr<const GeometryMap> geometry,
                     Eigen::VectorXd coefficients);

    const SpaceTimeSpace& space() const { return *space_; }
    const GeometryMap& geometry() const { return *geometry_; }
    const Eigen::VectorXd& coefficients() const { return coeffs_; }
    Eigen::VectorXd& coefficients() { return coeffs_; }

    /// Value (or pure time derivative) at a parametric point.
    double value_param(const Point& eta, double tau, int time_deriv = 0) const;
    /// Physical spatial gradient (optionally of a time derivative) at a
    /// parametric point.
    Point gradient_param(const Point& eta, double tau, int time_deriv = 0) const;

    /// Physical-coordinate evaluation; maps through the geometry inverse.
    /// Spatial derivative orders above 1 are supported on boxes only.
    double value(const Point& x, double t, int space_deriv = 0, int time_deriv = 0,
                 int space_dir = 0) const;
    Point gradient(const Point& x, double t) const;

private:
    std::shared_ptr<const SpaceTimeSpace> space_;
    std::shared_ptr<const GeometryMap> geometry_;
    Eigen::VectorXd coeffs_;
};

/// Lifting of the initial datum: the spatial spline interpolant of u0 at the
/// Greville (or periodic collocation) points, extended constant in time over
/// the unconstrained tensor space.
DiscreteFunction interpolate_lifting(const SpaceFn& u0,
                                     const std::vector<KnotVector>& spatial,
                                     const KnotVector& temporal,
                                     std::shared_ptr<const GeometryMap> geometry);

/// Embed a constrained-space coefficient vector into the unconstrained
/// tensor space and add the lifting (if any); the result evaluates the total
/// discrete solution u_h = lifting + w_h.
DiscreteFunction combine_with_lifting(const DiscreteFunction& w,
                                      const DiscreteFunction* lifting);

}  // namespace stwave
