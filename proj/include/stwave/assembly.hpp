#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "stwave/discretization.hpp"
#include "stwave/problem.hpp"

namespace stwave {

using SparseMat = Eigen::SparseMatrix<double>;

/// Space-time bilinear form variants: the plain Petrov-Galerkin form, the
/// penalty-stabilized form (volume penalty on d_t^{p_t} of the gradient per
/// time slab, weight delta * slab_length^{2 p_t}), and the projection
/// stabilization that replaces the test gradient by its per-time-element L2
/// projection onto polynomials of degree p_t - 1.
enum class Method { plain, iga_stab, fem_stab };

/// Which assembly route to take.  `automatic` picks the Kronecker fast path
/// whenever the velocity is constant (the geometry map is time-independent,
/// so every term factorizes exactly); variable velocity always goes through
/// the space-time element loop.
enum class AssemblyPath { automatic, kronecker, element_loop };

const char* method_name(Method m);

/// Paper default for the stabilization parameter: delta = 10^-p.
double default_delta(int p);

struct SystemInfo {
    Method method = Method::plain;
    double delta = 0.0;
    int p_space = 1, p_time = 1;
    double h_space = 0.0, h_time = 0.0;  // physical mesh sizes
};

/// Assembled Petrov-Galerkin system; rows index the test space, columns the
/// trial space.  tensor_dims records the active tensor factor sizes
/// (slowest to fastest) so the solver can re-block the banded structure.
struct LinearSystem {
    SparseMat op;
    Eigen::VectorXd rhs;
    SystemInfo info;
    std::vector<int> tensor_dims;
    std::vector<bool> tensor_periodic;
};

/// Generic 1D factor-matrix builder: entry (i,j) sums over elements of
/// element_scale(e) * int weight(x) D^{trial_deriv} b_j D^{test_deriv} b_i dx
/// with an n_quad-point Gauss rule per element.  Rows are the active test
/// functions, columns the active trial functions; the two spaces must share
/// their breakpoints.
SparseMat assemble_1d(const Space1D& trial, const Space1D& test, int trial_deriv,
                      int test_deriv, const std::function<double(double)>& weight,
                      const std::function<double(int)>& element_scale, int n_quad);

/// Temporal mass matrix with both factors projected per element onto
/// polynomials of degree projection_degree, in the physical measure
/// physical_scale * dx: entry (i,j) = sum_m <b_j, L_m> <b_i, L_m>.
SparseMat assemble_projected_mass_1d(const Space1D& trial, const Space1D& test,
                                     double physical_scale, int projection_degree,
                                     int n_quad);

enum class SpatialOp { mass, stiffness };

/// Spatial mass/stiffness matrix over the mapped domain, optionally with a
/// scalar weight evaluated at physical points (stiffness gradients are
/// pulled back through the geometry).
SparseMat assemble_spatial(const GeometryMap& geometry, const std::vector<Space1D>& trial,
                           const std::vector<Space1D>& test, SpatialOp op,
                           const std::function<double(const Point&)>& weight, int n_quad);

/// Boundary mass matrix of one face with the curve measure |dF/ds|.
SparseMat assemble_face(const GeometryMap& geometry, const Face& face,
                        const std::vector<Space1D>& trial, const std::vector<Space1D>& test,
                        const std::function<double(const Point&)>& weight, int n_quad);

/// Operator of the requested bilinear form (no right-hand side).
SparseMat assemble_operator(const WaveProblem& problem, const SpaceTimeSpace& trial,
                            const SpaceTimeSpace& test, Method method, double delta,
                            AssemblyPath path = AssemblyPath::automatic, int n_threads = 1);

/// Load vector: volume source, initial-velocity trace at t=0, Neumann and
/// Robin boundary data.
Eigen::VectorXd assemble_rhs(const WaveProblem& problem, const SpaceTimeSpace& test,
                             int n_threads = 1);

LinearSystem assemble_plain(const WaveProblem& problem, const SpaceTimeSpace& trial,
                            const SpaceTimeSpace& test,
                            AssemblyPath path = AssemblyPath::automatic, int n_threads = 1);
LinearSystem assemble_iga_stab(const WaveProblem& problem, const SpaceTimeSpace& trial,
                               const SpaceTimeSpace& test, double delta,
                               AssemblyPath path = AssemblyPath::automatic, int n_threads = 1);
LinearSystem assemble_fem_stab(const WaveProblem& problem, const SpaceTimeSpace& trial,
                               const SpaceTimeSpace& test,
                               AssemblyPath path = AssemblyPath::automatic, int n_threads = 1);

/// Reduce inhomogeneous initial/Dirichlet data: rhs <- rhs - a_method(lifting, v)
/// for all test functions v, using the system's own bilinear form (on the
/// stabilized forms this applies their non-consistent terms to the lifting
/// as well; for constant-in-time liftings those vanish).
void apply_lifting(LinearSystem& system, const DiscreteFunction& lifting,
                   const WaveProblem& problem, const SpaceTimeSpace& trial,
                   const SpaceTimeSpace& test, AssemblyPath path = AssemblyPath::automatic,
                   int n_threads = 1);

/// Physical mesh sizes (h_space over all directions, h_time).
std::pair<double, double> physical_mesh_sizes(const GeometryMap& geometry,
                                              const std::vector<KnotVector>& spatial,
                                              const KnotVector& temporal);

}  // namespace stwave
