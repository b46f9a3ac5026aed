#pragma once

#include <array>
#include <span>
#include <vector>

namespace stwave {

/// Upper bound on the spline degree supported by the fixed-size basis tables.
inline constexpr int kMaxDegree = 8;

/// Values and derivatives of the nonzero B-splines at one evaluation point.
///
/// Row k holds the k-th derivative of the (at most degree+1) basis functions
/// that are nonzero on the knot span containing the point.  `index[j]` is the
/// global number of the j-th of these functions (wrapped modulo the basis
/// count for periodic knot vectors).
struct BasisTable {
    int span = 0;
    int n_funcs = 0;
    int max_deriv = 0;
    std::array<int, kMaxDegree + 1> index{};
    std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> values{};

    double value(int deriv, int j) const { return values[deriv][j]; }
};

/// Univariate knot vector with Cox-De Boor basis evaluation.
///
/// Open vectors clamp the first and last knot to multiplicity degree+1,
/// making the end basis functions interpolatory.  Periodic vectors are
/// stored unrolled (degree extra functions on each side) and wrap their
/// basis indices modulo the element count.
class KnotVector {
public:
    /// Open knot vector on [a,b] with uniform breakpoints and interior
    /// multiplicity degree-regularity.  Breakpoints listed in `extra_c0`
    /// get multiplicity degree (C^0 continuity there); points not already
    /// on the uniform grid are inserted as new breakpoints.
    static KnotVector open(double a, double b, int n_elements, int degree,
                           int regularity, std::span<const double> extra_c0 = {});

    /// Uniform C^{degree-1} periodic space on [a,b]; requires n_elements > degree.
    static KnotVector periodic(double a, double b, int n_elements, int degree);

    int degree() const { return degree_; }
    bool is_periodic() const { return periodic_; }
    double domain_start() const { return a_; }
    double domain_end() const { return b_; }

    /// Number of basis functions: sum of multiplicities - degree - 1 in the
    /// open case, the element count in the periodic case.
    int n_basis() const { return n_basis_; }
    int n_elements() const { return static_cast<int>(breakpoints_.size()) - 1; }

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<int>& multiplicities() const { return multiplicities_; }

    double element_start(int e) const { return breakpoints_[e]; }
    double element_end(int e) const { return breakpoints_[e + 1]; }
    double element_size(int e) const { return breakpoints_[e + 1] - breakpoints_[e]; }
    double max_element_size() const;

    /// Knot-span index for x; x == domain_end maps to the last nonempty span.
    int find_span(double x) const;
    int span_of_element(int e) const { return element_span_[e]; }

    /// Global index of the j-th basis function nonzero on element e.
    int basis_on_element(int e, int j) const {
        return global_index(span_of_element(e) - degree_ + j);
    }

    /// Map an unrolled function index to the global (wrapped) one.
    int global_index(int unrolled) const {
        return periodic_ ? unrolled % n_basis_ : unrolled;
    }

    /// Nonzero basis functions and derivatives up to max_deriv at x.
    /// Throws std::domain_error for x outside [a,b].
    BasisTable eval_basis(double x, int max_deriv = 0) const;

private:
    int degree_ = 0;
    bool periodic_ = false;
    double a_ = 0.0, b_ = 1.0;
    int n_basis_ = 0;
    std::vector<double> knots_;        // unrolled for periodic
    std::vector<double> breakpoints_;  // knots without repetition, inside [a,b]
    std::vector<int> multiplicities_;
    std::vector<int> element_span_;    // first knot index of each element

    void rebuild_element_spans();
};

KnotVector make_open_knot_vector(double a, double b, int n_elements, int degree,
                                 int regularity, std::span<const double> extra_c0 = {});
KnotVector make_periodic_space(double a, double b, int n_elements, int degree);

/// Greville abscissae of an open knot vector: the i-th point is the mean of
/// knots xi_{i+1},...,xi_{i+p}.  Throws std::invalid_argument for periodic
/// vectors (see collocation_points for the periodic analogue).
std::vector<double> greville_abscissae(const KnotVector& kv);

/// Interpolation points usable for both open and periodic spaces: Greville
/// abscissae in the open case, wrapped unrolled Greville points otherwise.
std::vector<double> collocation_points(const KnotVector& kv);

}  // namespace stwave
