#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include "stwave/assembly.hpp"
#include "stwave/linsolve.hpp"
#include "stwave/problems.hpp"
#include "stwave/quadrature.hpp"
#include "oracles.hpp"

#include <unsupported/Eigen/KroneckerProduct>

using namespace stwave;

namespace {

WaveProblem dirichlet_box(double T) {
    WaveProblem pb;
    pb.name = "box";
    pb.geometry = GeometryMap::unit_box(1, {1.0, 0.0}, T);
    return pb;
}

double rel_maxabs_diff(const SparseMat& a, const SparseMat& b) {
    const Eigen::MatrixXd da = Eigen::MatrixXd(a);
    const Eigen::MatrixXd db = Eigen::MatrixXd(b);
    const double scale = da.cwiseAbs().maxCoeff();
    return (da - db).cwiseAbs().maxCoeff() / scale;
}

std::pair<SpaceTimeSpace, SpaceTimeSpace> spaces_1d(const WaveProblem& pb, int n_s, int n_t,
                                                    int p, int q = -1) {
    const KnotVector sx = make_open_knot_vector(0.0, 1.0, n_s, p, q < 0 ? p - 1 : q);
    const KnotVector st = make_open_knot_vector(0.0, 1.0, n_t, p, q < 0 ? p - 1 : q);
    return build_spaces({sx}, st, pb.geometry);
}

}  // namespace

TEST_CASE("assemble_1d: hat mass row sums") {
    const KnotVector kv = make_open_knot_vector(0.0, 1.0, 2, 1, 0);
    const Space1D full = Space1D::full(kv);
    const SparseMat m = assemble_1d(full, full, 0, 0, nullptr, nullptr, 2);
    const Eigen::MatrixXd d(m);
    CHECK(d.row(0).sum() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(d.row(1).sum() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d.row(2).sum() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("assemble_1d: frozen hat matrices on two elements") {
    // Symbolically integrated mass, stiffness and first-derivative cross
    // matrices of the three hat functions on {0, 1/2, 1}.
    const KnotVector kv = make_open_knot_vector(0.0, 1.0, 2, 1, 0);
    const Space1D full = Space1D::full(kv);
    const Eigen::MatrixXd M(assemble_1d(full, full, 0, 0, nullptr, nullptr, 2));
    const Eigen::MatrixXd A(assemble_1d(full, full, 1, 1, nullptr, nullptr, 2));
    const Eigen::MatrixXd C(assemble_1d(full, full, 1, 0, nullptr, nullptr, 2));

    Eigen::MatrixXd Mref(3, 3), Aref(3, 3), Cref(3, 3);
    Mref << 1.0 / 6, 1.0 / 12, 0, 1.0 / 12, 1.0 / 3, 1.0 / 12, 0, 1.0 / 12, 1.0 / 6;
    Aref << 2, -2, 0, -2, 4, -2, 0, -2, 2;
    Cref << -0.5, 0.5, 0, -0.5, 0, 0.5, 0, -0.5, 0.5;
    CHECK((M - Mref).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((A - Aref).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((C - Cref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("assemble_1d: classical interior stiffness stencil") {
    const int n = 4;
    const KnotVector kv = make_open_knot_vector(0.0, 1.0, n, 1, 0);
    const Space1D full = Space1D::full(kv);
    const Eigen::MatrixXd A(assemble_1d(full, full, 1, 1, nullptr, nullptr, 2));
    const double h = 1.0 / n;
    for (int i = 1; i < n; ++i) {
        CHECK(A(i, i) == doctest::Approx(2.0 / h));
        CHECK(A(i, i - 1) == doctest::Approx(-1.0 / h));
        CHECK(A(i, i + 1) == doctest::Approx(-1.0 / h));
    }
}

TEST_CASE("assemble_1d: entries vanish for disjoint supports") {
    const KnotVector kv = make_open_knot_vector(0.0, 1.0, 8, 2, 1);
    const Space1D full = Space1D::full(kv);
    const Eigen::MatrixXd M(assemble_1d(full, full, 0, 0, nullptr, nullptr, 3));
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j)
            if (std::abs(i - j) > 2) CHECK(M(i, j) == 0.0);
}

TEST_CASE("penalty matrix against a brute-force oracle") {
    // p = 2, three elements, element scale h^{2p}: compare against direct
    // high-order quadrature of second-derivative products evaluated with the
    // recursive formulas.
    const int p = 2, n = 3;
    const KnotVector kv = make_open_knot_vector(0.0, 1.0, n, p, p - 1);
    const Space1D full = Space1D::full(kv);
    auto scale = [&kv, p](int e) { return std::pow(kv.element_size(e), 2 * p); };
    const Eigen::MatrixXd S(assemble_1d(full, full, p, p, nullptr, scale, p + 1));

    const int m = kv.n_basis();
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(m, m);
    const QuadRule rule = gauss_legendre(10);
    for (int e = 0; e < n; ++e) {
        auto [xs, ws] = map_to_element(rule, kv.element_start(e), kv.element_end(e));
        for (int q = 0; q < rule.size(); ++q)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    ref(i, j) += scale(e) * ws[q] *
                                 oracles::naive_bspline_deriv(kv.knots(), p, i, xs[q], p) *
                                 oracles::naive_bspline_deriv(kv.knots(), p, j, xs[q], p);
    }
    CHECK((S - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("plain operator: hand-computed 2x2-element Dirichlet system is the identity") {
    // c = 1, T = 1, p = 1, two elements in space and time: the single
    // interior spatial function with A_s = 4, M_s = 1/3 gives
    // K = M_t (x) A_s - A_t (x) M_s = I_2 from the frozen hat matrices.
    WaveProblem pb = dirichlet_box(1.0);
    auto [trial, test] = spaces_1d(pb, 2, 2, 1);
    const SparseMat K = assemble_operator(pb, trial, test, Method::plain, 0.0);
    const Eigen::MatrixXd d(K);
    REQUIRE(d.rows() == 2);
    CHECK(d(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d(1, 0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero data gives zero rhs and zero solution") {
    WaveProblem pb = dirichlet_box(1.0);
    auto [trial, test] = spaces_1d(pb, 4, 4, 2);
    LinearSystem sys = assemble_iga_stab(pb, trial, test, default_delta(2));
    CHECK(sys.rhs.norm() == 0.0);
    Factorization f(sys);
    CHECK(f.solve(sys.rhs).norm() == 0.0);
}

TEST_CASE("Robin term is local to the boundary") {
    WaveProblem pb = dirichlet_box(1.0);
    pb.geometry.set_face_kind({0, 0}, BoundaryKind::dirichlet);
    pb.geometry.set_face_kind({0, 1}, BoundaryKind::robin);
    pb.theta = 0.7;
    auto [trial, test] = spaces_1d(pb, 5, 3, 2);

    WaveProblem no_robin = pb;
    no_robin.geometry.set_face_kind({0, 1}, BoundaryKind::neumann);
    auto [trial2, test2] = spaces_1d(no_robin, 5, 3, 2);

    const Eigen::MatrixXd with_r(assemble_operator(pb, trial, test, Method::plain, 0.0));
    const Eigen::MatrixXd without(assemble_operator(no_robin, trial2, test2, Method::plain, 0.0));
    const Eigen::MatrixXd diff = with_r - without;
    // Spatial functions vanishing at x=1 must feel nothing; only the last
    // active spatial index touches the Robin face.
    const int ns = trial.n_spatial();
    for (int i = 0; i < diff.rows(); ++i)
        for (int j = 0; j < diff.cols(); ++j)
            if (i % ns != ns - 1 || j % ns != ns - 1) CHECK(diff(i, j) == 0.0);
    CHECK(diff.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("iga-stab tends to plain as delta -> 0 and rejects delta <= 0") {
    WaveProblem pb = dirichlet_box(1.0);
    auto [trial, test] = spaces_1d(pb, 4, 4, 2);
    const SparseMat plain = assemble_operator(pb, trial, test, Method::plain, 0.0);
    const SparseMat tiny = assemble_operator(pb, trial, test, Method::iga_stab, 1e-300);
    CHECK(rel_maxabs_diff(plain, tiny) < 1e-15);
    CHECK_THROWS_AS(assemble_operator(pb, trial, test, Method::iga_stab, -1.0),
                    std::invalid_argument);
    CHECK(default_delta(2) == doctest::Approx(1e-2));
}

TEST_CASE("projection is the identity on per-element polynomials of its degree") {
    // A spline space of degree q projected onto degree-q polynomials per
    // element reproduces itself: the projected mass equals the plain mass.
    for (int q : {1, 2}) {
        const KnotVector kv = make_open_knot_vector(0.0, 1.0, 4, q, 0);
        const Space1D full = Space1D::full(kv);
        const Eigen::MatrixXd M(assemble_1d(full, full, 0, 0, nullptr, nullptr, q + 2));
        const Eigen::MatrixXd P(assemble_projected_mass_1d(full, full, 1.0, q, q + 2));
        CHECK((M - P).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("fem-stab coincides with iga-stab at p=1, delta=1/12") {
    WaveProblem pb = dirichlet_box(1.0);
    for (int n : {4, 8}) {
        auto [trial, test] = spaces_1d(pb, n, n, 1);
        const SparseMat fem = assemble_operator(pb, trial, test, Method::fem_stab, 0.0);
        const SparseMat iga = assemble_operator(pb, trial, test, Method::iga_stab, 1.0 / 12.0);
        CHECK(rel_maxabs_diff(fem, iga) < 1e-12);
    }
}

TEST_CASE("fem-stab touches only the gradient block") {
    // p = 2, C^0 in time: difference to the plain operator must equal
    // (projected mass - mass) (x) A_s; the dt-dt part is untouched.  With a
    // single interior spatial function the check reduces to the pattern.
    WaveProblem pb = dirichlet_box(1.0);
    const KnotVector sx = make_open_knot_vector(0.0, 1.0, 2, 2, 1);
    const KnotVector st = make_open_knot_vector(0.0, 1.0, 3, 2, 0);  // C^0 in time
    auto [trial, test] = build_spaces({sx}, st, pb.geometry);
    const Eigen::MatrixXd fem(assemble_operator(pb, trial, test, Method::fem_stab, 0.0));
    const Eigen::MatrixXd plain(assemble_operator(pb, trial, test, Method::plain, 0.0));

    // Rebuild the expected difference from the 1D factors.
    const Space1D wt = Space1D::constrained(st, true, false);
    const Space1D vt = Space1D::constrained(st, false, true);
    const Eigen::MatrixXd Mt(assemble_1d(wt, vt, 0, 0, nullptr, nullptr, 3));
    const Eigen::MatrixXd Mproj(assemble_projected_mass_1d(wt, vt, 1.0, 1, 3));
    const Space1D sxs = Space1D::constrained(sx, true, true);
    const Eigen::MatrixXd As(assemble_1d(sxs, sxs, 1, 1, nullptr, nullptr, 3));

    const Eigen::MatrixXd expected = Eigen::kroneckerProduct(Mproj - Mt, As).eval();
    CHECK((fem - plain - expected).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("Kronecker and element-loop paths agree") {
    // Constant-velocity configurations: Dirichlet box, Robin face, Neumann
    // data path unaffected; p in {1,2,3}, meshes up to 8x8.
    WaveProblem pb = dirichlet_box(1.0);
    WaveProblem pbr = pb;
    pbr.geometry.set_face_kind({0, 1}, BoundaryKind::robin);
    pbr.theta = 1.3;

    for (const WaveProblem* prob : {&pb, &pbr})
        for (int p : {1, 2, 3})
            for (int n : {4, 8}) {
                auto [trial, test] = spaces_1d(*prob, n, n, p);
                for (Method m : {Method::plain, Method::iga_stab, Method::fem_stab}) {
                    const double delta = m == Method::iga_stab ? default_delta(p) : 0.0;
                    const SparseMat a = assemble_operator(*prob, trial, test, m, delta,
                                                          AssemblyPath::kronecker);
                    const SparseMat b = assemble_operator(*prob, trial, test, m, delta,
                                                          AssemblyPath::element_loop);
                    CHECK(rel_maxabs_diff(a, b) < 1e-12);
                }
            }
}

TEST_CASE("Kronecker and element-loop paths agree on the half annulus") {
    WaveProblem pb = problems::scattering(1.0);
    const KnotVector sr = make_open_knot_vector(0.0, 1.0, 3, 2, 1);
    const KnotVector sth = make_open_knot_vector(0.0, 1.0, 4, 2, 1);
    const KnotVector st = make_open_knot_vector(0.0, 1.0, 3, 2, 1);
    auto [trial, test] = build_spaces({sr, sth}, st, pb.geometry);
    for (Method m : {Method::plain, Method::iga_stab}) {
        const double delta = m == Method::iga_stab ? default_delta(2) : 0.0;
        const SparseMat a =
            assemble_operator(pb, trial, test, m, delta, AssemblyPath::kronecker);
        const SparseMat b =
            assemble_operator(pb, trial, test, m, delta, AssemblyPath::element_loop);
        CHECK(rel_maxabs_diff(a, b) < 1e-12);
    }
}

TEST_CASE("multithreaded element loop is deterministic") {
    WaveProblem pb = problems::smooth_velocity();  // variable velocity
    const KnotVector s = make_open_knot_vector(0.0, 1.0, 4, 2, 1);
    const KnotVector st = make_open_knot_vector(0.0, 1.0, 3, 2, 1);
    auto [trial, test] = build_spaces({s, s}, st, pb.geometry);
    const SparseMat a = assemble_operator(pb, trial, test, Method::iga_stab, 1e-2,
                                          AssemblyPath::element_loop, 1);
    const SparseMat b = assemble_operator(pb, trial, test, Method::iga_stab, 1e-2,
                                          AssemblyPath::element_loop, 2);
    const Eigen::MatrixXd da(a), db(b);
    CHECK((da - db).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("temporal penalty annihilates polynomials of degree < p_t") {
    for (int p : {2, 3}) {
        const KnotVector st = make_open_knot_vector(0.0, 1.0, 5, p, p - 1);
        const Space1D full = Space1D::full(st);
        auto scale = [&st, p](int e) { return std::pow(st.element_size(e), 2 * p); };
        const Eigen::MatrixXd S(assemble_1d(full, full, p, p, nullptr, scale, p + 1));

        // Spline coefficients of tau^k by Greville collocation (exact for
        // polynomials up to the degree).
        const auto g = greville_abscissae(st);
        const int m = st.n_basis();
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            const BasisTable t = st.eval_basis(g[i], 0);
            for (int j = 0; j < t.n_funcs; ++j) B(i, t.index[j]) += t.value(0, j);
        }
        for (int k = 0; k < p; ++k) {
            Eigen::VectorXd vals(m);
            for (int i = 0; i < m; ++i) vals[i] = std::pow(g[i], k);
            const Eigen::VectorXd coeff = oracles::dense_solve(B, vals);
            CHECK((S * coeff).cwiseAbs().maxCoeff() < 1e-11);
        }
    }
}

TEST_CASE("operator sparsity bound") {
    WaveProblem pb = dirichlet_box(1.0);
    for (int p : {1, 2, 3}) {
        auto [trial, test] = spaces_1d(pb, 8, 8, p);
        const SparseMat K = assemble_operator(pb, trial, test, Method::iga_stab, 1e-2);
        CHECK(K.nonZeros() <= static_cast<long>(trial.n_dof()) * (2 * p + 1) * (2 * p + 1));
    }
}

TEST_CASE("rhs: f = 1 matches 1D factor quadrature") {
    WaveProblem pb = dirichlet_box(1.0);
    pb.source = [](const Point&, double) { return 1.0; };
    auto [trial, test] = spaces_1d(pb, 2, 2, 1);
    const Eigen::VectorXd rhs = assemble_rhs(pb, test);

    // Independent route: entries are (int b_is)(int bt_it).
    const KnotVector kv = make_open_knot_vector(0.0, 1.0, 2, 1, 0);
    auto integral = [&kv](int i) {
        const QuadRule r = gauss_legendre(4);
        double s = 0.0;
        for (int e = 0; e < kv.n_elements(); ++e) {
            auto [xs, ws] = map_to_element(r, kv.element_start(e), kv.element_end(e));
            for (int q = 0; q < r.size(); ++q)
                s += ws[q] * oracles::naive_bspline(kv.knots(), 1, i, xs[q]);
        }
        return s;
    };
    // Active: spatial {1}, temporal test {0,1}.
    CHECK(rhs[0] == doctest::Approx(integral(1) * integral(0)).epsilon(1e-13));
    CHECK(rhs[1] == doctest::Approx(integral(1) * integral(1)).epsilon(1e-13));
}

TEST_CASE("rhs: initial velocity feeds only the first temporal test function") {
    WaveProblem pb = dirichlet_box(1.0);
    pb.initial_velocity = [](const Point& x) { return std::sin(2.0 * x[0]) + 0.3; };
    auto [trial, test] = spaces_1d(pb, 5, 4, 2);
    const Eigen::VectorXd rhs = assemble_rhs(pb, test);
    const int ns = test.n_spatial();
    for (int it = 1; it < test.n_temporal(); ++it)
        for (int is = 0; is < ns; ++is) CHECK(rhs[test.flatten(is, it)] == 0.0);
    double first_block = 0.0;
    for (int is = 0; is < ns; ++is) first_block += std::abs(rhs[test.flatten(is, 0)]);
    CHECK(first_block > 0.0);
}

TEST_CASE("lifting: zero lifting leaves the system unchanged") {
    WaveProblem pb = dirichlet_box(1.0);
    auto [trial, test] = spaces_1d(pb, 4, 4, 2);
    LinearSystem sys = assemble_iga_stab(pb, trial, test, 1e-2);
    const Eigen::VectorXd before = sys.rhs;
    const KnotVector sx = make_open_knot_vector(0.0, 1.0, 4, 2, 1);
    const KnotVector st = make_open_knot_vector(0.0, 1.0, 4, 2, 1);
    auto geomp = std::make_shared<const GeometryMap>(pb.geometry);
    const DiscreteFunction zl = interpolate_lifting(nullptr, {sx}, st, geomp);
    apply_lifting(sys, zl, pb, trial, test);
    CHECK((sys.rhs - before).norm() == 0.0);
}

TEST_CASE("lifting: constant initial datum with pure Neumann is reproduced exactly") {
    WaveProblem pb = dirichlet_box(1.0);
    for (int i = 0; i < pb.geometry.n_faces(); ++i)
        pb.geometry.set_face_kind(pb.geometry.face(i), BoundaryKind::neumann);
    const double C = 2.5;
    pb.initial_value = [C](const Point&) { return C; };

    for (Method m : {Method::plain, Method::iga_stab, Method::fem_stab}) {
        const KnotVector sx = make_open_knot_vector(0.0, 1.0, 4, 2, 1);
        const KnotVector st = make_open_knot_vector(0.0, 1.0, 4, 2, 1);
        auto [trial, test] = build_spaces({sx}, st, pb.geometry);
        LinearSystem sys;
        sys.op = assemble_operator(pb, trial, test, m, m == Method::iga_stab ? 1e-2 : 0.0);
        sys.rhs = assemble_rhs(pb, test);
        auto geomp = std::make_shared<const GeometryMap>(pb.geometry);
        const DiscreteFunction lift = interpolate_lifting(pb.initial_value, {sx}, st, geomp);
        apply_lifting(sys, lift, pb, trial, test);
        // Residual of w = 0 is the corrected rhs itself: must vanish.
        CHECK(sys.rhs.cwiseAbs().maxCoeff() < 1e-12);
    }
}
