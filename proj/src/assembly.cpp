#include "stwave/assembly.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "stwave/quadrature.hpp"

namespace stwave {

namespace {

using Triplet = Eigen::Triplet<double>;

// Per-direction quadrature nodes/weights and basis tables, one block of nq
// entries per element.
struct DirTables {
    const Space1D* sp = nullptr;
    int nq = 0;
    std::vector<double> x, w;
    std::vector<BasisTable> tab;
};

DirTables make_dir_tables(const Space1D& sp, int nq, int max_deriv) {
    DirTables t;
    t.sp = &sp;
    t.nq = nq;
    const QuadRule rule = gauss_legendre(nq);
    const int ne = sp.kv.n_elements();
    t.x.resize(ne * nq);
    t.w.resize(ne * nq);
    t.tab.resize(ne * nq);
    for (int e = 0; e < ne; ++e) {
        auto [xs, ws] = map_to_element(rule, sp.kv.element_start(e), sp.kv.element_end(e));
        for (int q = 0; q < nq; ++q) {
            t.x[e * nq + q] = xs[q];
            t.w[e * nq + q] = ws[q];
            t.tab[e * nq + q] = sp.kv.eval_basis(xs[q], max_deriv);
        }
    }
    return t;
}

// Legendre polynomial values P_0..P_{m-1} at xi in [-1,1].
void legendre_values(int m, double xi, double* out) {
    if (m <= 0) return;
    out[0] = 1.0;
    if (m > 1) out[1] = xi;
    for (int k = 2; k < m; ++k)
        out[k] = ((2 * k - 1) * xi * out[k - 1] - (k - 1) * out[k - 2]) / k;
}

void check_same_mesh(const Space1D& a, const Space1D& b) {
    if (a.kv.n_elements() != b.kv.n_elements())
        throw std::invalid_argument("assembly: trial/test spaces must share breakpoints");
}

// Deterministic parallel element sweep: contiguous chunks in element order,
// one triplet buffer per chunk, merged in chunk order afterwards.
template <class Body>
std::vector<Triplet> parallel_elements(int n_items, int n_threads, std::size_t reserve_per_item,
                                       Body&& body) {
    n_threads = std::max(1, std::min(n_threads, n_items));
    std::vector<std::vector<Triplet>> buffers(n_threads);
    auto run = [&](int c) {
        const int lo = static_cast<int>(static_cast<long long>(n_items) * c / n_threads);
        const int hi = static_cast<int>(static_cast<long long>(n_items) * (c + 1) / n_threads);
        buffers[c].reserve(static_cast<std::size_t>(hi - lo) * reserve_per_item);
        for (int e = lo; e < hi; ++e) body(e, buffers[c]);
    };
    if (n_threads == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int c = 0; c < n_threads; ++c) pool.emplace_back(run, c);
        for (auto& th : pool) th.join();
    }
    std::vector<Triplet> merged;
    std::size_t total = 0;
    for (const auto& b : buffers) total += b.size();
    merged.reserve(total);
    for (const auto& b : buffers) merged.insert(merged.end(), b.begin(), b.end());
    return merged;
}

int spatial_quad_order(const WaveProblem& pb, int degree) {
    const bool exact = pb.velocity_is_constant && pb.geometry.is_affine_box();
    return degree + (exact ? 1 : 2);
}

int temporal_quad_order(const WaveProblem& pb, int degree) {
    return degree + (pb.velocity_is_constant ? 1 : 2);
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::plain: return "plain";
        case Method::iga_stab: return "iga-stab";
        case Method::fem_stab: return "fem-stab";
    }
    return "?";
}

double default_delta(int p) { return std::pow(10.0, -p); }

SparseMat assemble_1d(const Space1D& trial, const Space1D& test, int trial_deriv, int test_deriv,
                      const std::function<double(double)>& weight,
                      const std::function<double(int)>& element_scale, int n_quad) {
    check_same_mesh(trial, test);
    const KnotVector& tkv = trial.kv;
    const KnotVector& vkv = test.kv;
    if (trial_deriv > tkv.degree() || test_deriv > vkv.degree())
        throw std::invalid_argument("assemble_1d: derivative order exceeds degree");

    const QuadRule rule = gauss_legendre(n_quad);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(tkv.n_elements()) * (tkv.degree() + 1) *
                  (vkv.degree() + 1));

    for (int e = 0; e < tkv.n_elements(); ++e) {
        auto [xs, ws] = map_to_element(rule, tkv.element_start(e), tkv.element_end(e));
        const double scale = element_scale ? element_scale(e) : 1.0;
        if (scale == 0.0) continue;
        for (int q = 0; q < n_quad; ++q) {
            const BasisTable bt = tkv.eval_basis(xs[q], trial_deriv);
            const BasisTable bv = vkv.eval_basis(xs[q], test_deriv);
            const double wq = scale * ws[q] * (weight ? weight(xs[q]) : 1.0);
            for (int i = 0; i < bv.n_funcs; ++i) {
                const int row = test.full_to_active[bv.index[i]];
                if (row < 0) continue;
                const double vi = bv.value(test_deriv, i) * wq;
                if (vi == 0.0) continue;
                for (int j = 0; j < bt.n_funcs; ++j) {
                    const int col = trial.full_to_active[bt.index[j]];
                    if (col < 0) continue;
                    trips.emplace_back(row, col, vi * bt.value(trial_deriv, j));
                }
            }
        }
    }
    SparseMat m(test.n_active(), trial.n_active());
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

SparseMat assemble_projected_mass_1d(const Space1D& trial, const Space1D& test,
                                     double physical_scale, int projection_degree, int n_quad) {
    check_same_mesh(trial, test);
    const KnotVector& tkv = trial.kv;
    const KnotVector& vkv = test.kv;
    const int nm = projection_degree + 1;
    const QuadRule rule = gauss_legendre(n_quad);

    std::vector<Triplet> trips;
    const int pt = tkv.degree(), pv = vkv.degree();
    std::vector<double> momt((pt + 1) * nm), momv((pv + 1) * nm), leg(nm);

    for (int e = 0; e < tkv.n_elements(); ++e) {
        const double a = tkv.element_start(e), b = tkv.element_end(e);
        auto [xs, ws] = map_to_element(rule, a, b);
        std::fill(momt.begin(), momt.end(), 0.0);
        std::fill(momv.begin(), momv.end(), 0.0);
        BasisTable bt{}, bv{};
        for (int q = 0; q < n_quad; ++q) {
            bt = tkv.eval_basis(xs[q], 0);
            bv = vkv.eval_basis(xs[q], 0);
            const double xi = 2.0 * (xs[q] - a) / (b - a) - 1.0;
            legendre_values(nm, xi, leg.data());
            for (int m = 0; m < nm; ++m) {
                // Orthonormal in the physical measure physical_scale * dx.
                const double lm =
                    leg[m] * std::sqrt((2 * m + 1) / (physical_scale * (b - a)));
                const double wl = ws[q] * physical_scale * lm;
                for (int j = 0; j <= pt; ++j) momt[j * nm + m] += wl * bt.value(0, j);
                for (int i = 0; i <= pv; ++i) momv[i * nm + m] += wl * bv.value(0, i);
            }
        }
        for (int i = 0; i <= pv; ++i) {
            const int row = test.full_to_active[bv.index[i]];
            if (row < 0) continue;
            for (int j = 0; j <= pt; ++j) {
                const int col = trial.full_to_active[bt.index[j]];
                if (col < 0) continue;
                double s = 0.0;
                for (int m = 0; m < nm; ++m) s += momt[j * nm + m] * momv[i * nm + m];
                trips.emplace_back(row, col, s);
            }
        }
    }
    SparseMat m(test.n_active(), trial.n_active());
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

SparseMat assemble_spatial(const GeometryMap& geometry, const std::vector<Space1D>& trial,
                           const std::vector<Space1D>& test, SpatialOp op,
                           const std::function<double(const Point&)>& weight, int n_quad) {
    const int d = geometry.dim();
    std::vector<DirTables> ttab, vtab;
    for (int k = 0; k < d; ++k) {
        check_same_mesh(trial[k], test[k]);
        ttab.push_back(make_dir_tables(trial[k], n_quad, 1));
        vtab.push_back(make_dir_tables(test[k], n_quad, 1));
    }

    int n_trial = 1, n_test = 1;
    for (int k = 0; k < d; ++k) {
        n_trial *= trial[k].n_active();
        n_test *= test[k].n_active();
    }

    std::vector<Triplet> trips;
    const int pt0 = trial[0].kv.degree() + 1;
    const int pv0 = test[0].kv.degree() + 1;

    if (d == 1) {
        for (int e = 0; e < trial[0].kv.n_elements(); ++e) {
            for (int q = 0; q < n_quad; ++q) {
                const int k = e * n_quad + q;
                const Point eta{ttab[0].x[k], 0.0};
                const double det = geometry.jacobian_det(eta);
                const double wq = ttab[0].w[k] * det *
                                  (weight ? weight(geometry.map(eta)) : 1.0);
                const BasisTable& bt = ttab[0].tab[k];
                const BasisTable& bv = vtab[0].tab[k];
                for (int i = 0; i < pv0; ++i) {
                    const int row = test[0].full_to_active[bv.index[i]];
                    if (row < 0) continue;
                    for (int j = 0; j < pt0; ++j) {
                        const int col = trial[0].full_to_active[bt.index[j]];
                        if (col < 0) continue;
                        double v;
                        if (op == SpatialOp::mass) {
                            v = bv.value(0, i) * bt.value(0, j);
                        } else {
                            const Point gj = geometry.pullback_gradient(eta, {bt.value(1, j), 0.0});
                            const Point gi = geometry.pullback_gradient(eta, {bv.value(1, i), 0.0});
                            v = gj[0] * gi[0];
                        }
                        trips.emplace_back(row, col, v * wq);
                    }
                }
            }
        }
    } else {
        const int pt1 = trial[1].kv.degree() + 1;
        const int pv1 = test[1].kv.degree() + 1;
        std::vector<Point> gt(pt0 * pt1), gv(pv0 * pv1);
        std::vector<double> bt_val(pt0 * pt1), bv_val(pv0 * pv1);
        for (int ey = 0; ey < trial[1].kv.n_elements(); ++ey)
            for (int ex = 0; ex < trial[0].kv.n_elements(); ++ex)
                for (int qy = 0; qy < n_quad; ++qy)
                    for (int qx = 0; qx < n_quad; ++qx) {
                        const int kx = ex * n_quad + qx, ky = ey * n_quad + qy;
                        const Point eta{ttab[0].x[kx], ttab[1].x[ky]};
                        const double det = geometry.jacobian_det(eta);
                        const double wq = ttab[0].w[kx] * ttab[1].w[ky] * det *
                                          (weight ? weight(geometry.map(eta)) : 1.0);
                        const BasisTable& btx = ttab[0].tab[kx];
                        const BasisTable& bty = ttab[1].tab[ky];
                        const BasisTable& bvx = vtab[0].tab[kx];
                        const BasisTable& bvy = vtab[1].tab[ky];
                        for (int jy = 0; jy < pt1; ++jy)
                            for (int jx = 0; jx < pt0; ++jx) {
                                bt_val[jy * pt0 + jx] = btx.value(0, jx) * bty.value(0, jy);
                                gt[jy * pt0 + jx] = geometry.pullback_gradient(
                                    eta, {btx.value(1, jx) * bty.value(0, jy),
                                          btx.value(0, jx) * bty.value(1, jy)});
                            }
                        for (int iy = 0; iy < pv1; ++iy)
                            for (int ix = 0; ix < pv0; ++ix) {
                                bv_val[iy * pv0 + ix] = bvx.value(0, ix) * bvy.value(0, iy);
                                gv[iy * pv0 + ix] = geometry.pullback_gradient(
                                    eta, {bvx.value(1, ix) * bvy.value(0, iy),
                                          bvx.value(0, ix) * bvy.value(1, iy)});
                            }
                        for (int iy = 0; iy < pv1; ++iy) {
                            const int ay = test[1].full_to_active[bvy.index[iy]];
                            if (ay < 0) continue;
                            for (int ix = 0; ix < pv0; ++ix) {
                                const int ax = test[0].full_to_active[bvx.index[ix]];
                                if (ax < 0) continue;
                                const int row = ay * test[0].n_active() + ax;
                                const int i = iy * pv0 + ix;
                                for (int jy = 0; jy < pt1; ++jy) {
                                    const int by = trial[1].full_to_active[bty.index[jy]];
                                    if (by < 0) continue;
                                    for (int jx = 0; jx < pt0; ++jx) {
                                        const int bx = trial[0].full_to_active[btx.index[jx]];
                                        if (bx < 0) continue;
                                        const int col = by * trial[0].n_active() + bx;
                                        const int j = jy * pt0 + jx;
                                        const double v =
                                            (op == SpatialOp::mass)
                                                ? bv_val[i] * bt_val[j]
                                                : gt[j][0] * gv[i][0] + gt[j][1] * gv[i][1];
                                        trips.emplace_back(row, col, v * wq);
                                    }
                                }
                            }
                        }
                    }
    }
    SparseMat m(n_test, n_trial);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

SparseMat assemble_face(const GeometryMap& geometry, const Face& face,
                        const std::vector<Space1D>& trial, const std::vector<Space1D>& test,
                        const std::function<double(const Point&)>& weight, int n_quad) {
    const int d = geometry.dim();
    int n_trial = 1, n_test = 1;
    for (int k = 0; k < d; ++k) {
        n_trial *= trial[k].n_active();
        n_test *= test[k].n_active();
    }
    std::vector<Triplet> trips;

    const double side = static_cast<double>(face.side);
    if (d == 1) {
        const BasisTable bt = trial[0].kv.eval_basis(side, 0);
        const BasisTable bv = test[0].kv.eval_basis(side, 0);
        const Point eta{side, 0.0};
        const double wq = weight ? weight(geometry.map(eta)) : 1.0;
        for (int i = 0; i < bv.n_funcs; ++i) {
            const int row = test[0].full_to_active[bv.index[i]];
            if (row < 0 || bv.value(0, i) == 0.0) continue;
            for (int j = 0; j < bt.n_funcs; ++j) {
                const int col = trial[0].full_to_active[bt.index[j]];
                if (col < 0) continue;
                trips.emplace_back(row, col, wq * bv.value(0, i) * bt.value(0, j));
            }
        }
    } else {
        const int fd = face.dir, od = 1 - fd;  // fixed and in-face directions
        const BasisTable btf = trial[fd].kv.eval_basis(side, 0);
        const BasisTable bvf = test[fd].kv.eval_basis(side, 0);
        const QuadRule rule = gauss_legendre(n_quad);
        const KnotVector& okv = trial[od].kv;
        for (int e = 0; e < okv.n_elements(); ++e) {
            auto [xs, ws] = map_to_element(rule, okv.element_start(e), okv.element_end(e));
            for (int q = 0; q < n_quad; ++q) {
                const BasisTable bto = okv.eval_basis(xs[q], 0);
                const BasisTable bvo = test[od].kv.eval_basis(xs[q], 0);
                const Point eta = geometry.face_point(face, xs[q]);
                const double wq = ws[q] * geometry.face_measure(face, xs[q]) *
                                  (weight ? weight(geometry.map(eta)) : 1.0);
                for (int io = 0; io < bvo.n_funcs; ++io)
                    for (int ifd = 0; ifd < bvf.n_funcs; ++ifd) {
                        const double vi = bvo.value(0, io) * bvf.value(0, ifd);
                        if (vi == 0.0) continue;
                        const int a_o = test[od].full_to_active[bvo.index[io]];
                        const int a_f = test[fd].full_to_active[bvf.index[ifd]];
                        if (a_o < 0 || a_f < 0) continue;
                        const int ax = (fd == 0) ? a_f : a_o;
                        const int ay = (fd == 0) ? a_o : a_f;
                        const int row = ay * test[0].n_active() + ax;
                        for (int jo = 0; jo < bto.n_funcs; ++jo)
                            for (int jfd = 0; jfd < btf.n_funcs; ++jfd) {
                                const double vj = bto.value(0, jo) * btf.value(0, jfd);
                                if (vj == 0.0) continue;
                                const int b_o = trial[od].full_to_active[bto.index[jo]];
                                const int b_f = trial[fd].full_to_active[btf.index[jfd]];
                                if (b_o < 0 || b_f < 0) continue;
                                const int bx = (fd == 0) ? b_f : b_o;
                                const int by = (fd == 0) ? b_o : b_f;
                                trips.emplace_back(row, by * trial[0].n_active() + bx,
                                                   wq * vi * vj);
                            }
                    }
            }
        }
    }
    SparseMat m(n_test, n_trial);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

namespace {

std::vector<Space1D> spatial_factors(const SpaceTimeSpace& sp) {
    std::vector<Space1D> f;
    for (int k = 0; k < sp.dim(); ++k) f.push_back(sp.spatial(k));
    return f;
}

void append_kron(std::vector<Triplet>& trips, const SparseMat& temporal, const SparseMat& spatial,
                 double scale) {
    if (scale == 0.0) return;
    const int ns_rows = static_cast<int>(spatial.rows());
    const int ns_cols = static_cast<int>(spatial.cols());
    for (int ot = 0; ot < temporal.outerSize(); ++ot)
        for (SparseMat::InnerIterator it(temporal, ot); it; ++it) {
            const double v = scale * it.value();
            const int rbase = static_cast<int>(it.row()) * ns_rows;
            const int cbase = static_cast<int>(it.col()) * ns_cols;
            for (int os = 0; os < spatial.outerSize(); ++os)
                for (SparseMat::InnerIterator is(spatial, os); is; ++is)
                    trips.emplace_back(rbase + static_cast<int>(is.row()),
                                       cbase + static_cast<int>(is.col()), v * is.value());
        }
}

SparseMat assemble_operator_kronecker(const WaveProblem& pb, const SpaceTimeSpace& trial,
                                      const SpaceTimeSpace& test, Method method, double delta) {
    const GeometryMap& geom = pb.geometry;
    const double T = geom.final_time();
    const double c = pb.constant_velocity;
    const int pt = trial.temporal().kv.degree();
    const int nq_t = temporal_quad_order(pb, pt);
    const int nq_s = spatial_quad_order(pb, trial.spatial(0).kv.degree());

    const Space1D& wt = trial.temporal();
    const Space1D& vt = test.temporal();

    const SparseMat M_t = T * assemble_1d(wt, vt, 0, 0, nullptr, nullptr, nq_t);
    const SparseMat A_t = (1.0 / T) * assemble_1d(wt, vt, 1, 1, nullptr, nullptr, nq_t);

    const auto tf = spatial_factors(trial);
    const auto vf = spatial_factors(test);
    const SparseMat M_s = assemble_spatial(geom, tf, vf, SpatialOp::mass, nullptr, nq_s);
    const SparseMat A_s = assemble_spatial(geom, tf, vf, SpatialOp::stiffness, nullptr, nq_s);

    std::vector<Triplet> trips;
    std::size_t reserve = static_cast<std::size_t>(M_t.nonZeros()) * A_s.nonZeros() / M_t.rows() +
                          static_cast<std::size_t>(A_t.nonZeros()) * M_s.nonZeros();
    trips.reserve(3 * reserve);

    if (method == Method::fem_stab) {
        const SparseMat Mproj =
            assemble_projected_mass_1d(wt, vt, T, pt - 1, std::max(nq_t, pt + 1));
        append_kron(trips, Mproj, A_s, c * c);
    } else {
        append_kron(trips, M_t, A_s, c * c);
    }
    append_kron(trips, A_t, M_s, -1.0);

    if (method == Method::iga_stab) {
        const KnotVector& tkv = wt.kv;
        auto slab_scale = [&tkv, pt](int e) {
            return std::pow(tkv.element_size(e), 2 * pt);
        };
        const SparseMat S_t =
            T * assemble_1d(wt, vt, pt, pt, nullptr, slab_scale, nq_t);
        append_kron(trips, S_t, A_s, -delta * c * c);
    }

    // Robin faces: cross temporal matrix x boundary mass.
    bool any_robin = false;
    for (int i = 0; i < geom.n_faces(); ++i)
        if (geom.face_kind(geom.face(i)) == BoundaryKind::robin) any_robin = true;
    if (any_robin && !pb.periodic_space) {
        const SparseMat C_t = assemble_1d(wt, vt, 1, 0, nullptr, nullptr, nq_t);
        for (int i = 0; i < geom.n_faces(); ++i) {
            const Face f = geom.face(i);
            if (geom.face_kind(f) != BoundaryKind::robin) continue;
            const SparseMat R_s = assemble_face(geom, f, tf, vf, nullptr, nq_s);
            append_kron(trips, C_t, R_s, pb.theta * c);
        }
    }

    SparseMat K(test.n_dof(), trial.n_dof());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

// Full space-time element loop; handles variable velocity and is the oracle
// for the Kronecker path.
SparseMat assemble_operator_elements(const WaveProblem& pb, const SpaceTimeSpace& trial,
                                     const SpaceTimeSpace& test, Method method, double delta,
                                     int n_threads) {
    const GeometryMap& geom = pb.geometry;
    const int d = geom.dim();
    const double T = geom.final_time();
    const int pt = trial.temporal().kv.degree();
    const int ps = trial.spatial(0).kv.degree();
    const int nq_t = temporal_quad_order(pb, pt);
    const int nq_s = spatial_quad_order(pb, ps);

    const int t_deriv = (method == Method::iga_stab) ? pt : 1;
    DirTables tt = make_dir_tables(trial.temporal(), nq_t, t_deriv);
    DirTables vt = make_dir_tables(test.temporal(), nq_t, t_deriv);
    std::vector<DirTables> ts, vs;
    for (int k = 0; k < d; ++k) {
        ts.push_back(make_dir_tables(trial.spatial(k), nq_s, 1));
        vs.push_back(make_dir_tables(test.spatial(k), nq_s, 1));
    }

    const int nfx = ps + 1;
    const int nfy = (d > 1) ? trial.spatial(1).kv.degree() + 1 : 1;
    const int nft = pt + 1;
    const int nloc_s = nfx * nfy;
    const int nloc = nloc_s * nft;

    const int nex = trial.spatial(0).kv.n_elements();
    const int ney = (d > 1) ? trial.spatial(1).kv.n_elements() : 1;
    const int net = trial.temporal().kv.n_elements();
    const int n_elements = nex * ney * net;

    const KnotVector& tkv = trial.temporal().kv;
    const int nm = pt;  // projection modes for fem_stab

    auto body = [&](int E, std::vector<Triplet>& out) {
        const int ex = E % nex;
        const int ey = (E / nex) % ney;
        const int et = E / (nex * ney);
        const double slab = tkv.element_size(et);
        const double slab_pow = std::pow(slab, 2 * pt);

        std::vector<double> local(static_cast<std::size_t>(nloc) * nloc, 0.0);
        std::vector<double> B_w(nloc_s), B_v(nloc_s);
        std::vector<Point> G_w(nloc_s), G_v(nloc_s);
        std::vector<double> momw(static_cast<std::size_t>(nft) * nm),
            momv(static_cast<std::size_t>(nft) * nm), leg(nm);

        // Projection moments of the test temporal factor (fem_stab only).
        if (method == Method::fem_stab) {
            std::fill(momv.begin(), momv.end(), 0.0);
            const double t0 = tkv.element_start(et);
            for (int q = 0; q < nq_t; ++q) {
                const int k = et * nq_t + q;
                const double xi = 2.0 * (vt.x[k] - t0) / slab - 1.0;
                legendre_values(nm, xi, leg.data());
                for (int m = 0; m < nm; ++m) {
                    const double lm = leg[m] * std::sqrt((2 * m + 1) / (T * slab));
                    for (int i = 0; i < nft; ++i)
                        momv[i * nm + m] += vt.w[k] * T * lm * vt.tab[k].value(0, i);
                }
            }
        }

        for (int qy = 0; qy < (d > 1 ? nq_s : 1); ++qy)
            for (int qx = 0; qx < nq_s; ++qx) {
                const int kx = ex * nq_s + qx;
                const int ky = ey * nq_s + qy;
                const Point eta{ts[0].x[kx], d > 1 ? ts[1].x[ky] : 0.0};
                const double det = geom.jacobian_det(eta);
                const Point xphys = geom.map(eta);
                double w_s = ts[0].w[kx] * det;
                if (d > 1) w_s *= ts[1].w[ky];

                const BasisTable& btx = ts[0].tab[kx];
                const BasisTable& bvx = vs[0].tab[kx];
                for (int jy = 0; jy < nfy; ++jy)
                    for (int jx = 0; jx < nfx; ++jx) {
                        const int j = jy * nfx + jx;
                        if (d == 1) {
                            B_w[j] = btx.value(0, jx);
                            G_w[j] = geom.pullback_gradient(eta, {btx.value(1, jx), 0.0});
                            B_v[j] = bvx.value(0, jx);
                            G_v[j] = geom.pullback_gradient(eta, {bvx.value(1, jx), 0.0});
                        } else {
                            const BasisTable& bty = ts[1].tab[ky];
                            const BasisTable& bvy = vs[1].tab[ky];
                            B_w[j] = btx.value(0, jx) * bty.value(0, jy);
                            G_w[j] = geom.pullback_gradient(
                                eta, {btx.value(1, jx) * bty.value(0, jy),
                                      btx.value(0, jx) * bty.value(1, jy)});
                            B_v[j] = bvx.value(0, jx) * bvy.value(0, jy);
                            G_v[j] = geom.pullback_gradient(
                                eta, {bvx.value(1, jx) * bvy.value(0, jy),
                                      bvx.value(0, jx) * bvy.value(1, jy)});
                        }
                    }

                if (method == Method::fem_stab) {
                    // Temporal moments of c^2 * trial factor, then the
                    // projected gradient term.
                    std::fill(momw.begin(), momw.end(), 0.0);
                    const double t0 = tkv.element_start(et);
                    for (int q = 0; q < nq_t; ++q) {
                        const int k = et * nq_t + q;
                        const double c = pb.velocity_at(xphys, T * tt.x[k]);
                        const double xi = 2.0 * (tt.x[k] - t0) / slab - 1.0;
                        legendre_values(nm, xi, leg.data());
                        for (int m = 0; m < nm; ++m) {
                            const double lm = leg[m] * std::sqrt((2 * m + 1) / (T * slab));
                            for (int j = 0; j < nft; ++j)
                                momw[j * nm + m] +=
                                    tt.w[k] * T * c * c * lm * tt.tab[k].value(0, j);
                        }
                    }
                    for (int it = 0; it < nft; ++it)
                        for (int jt = 0; jt < nft; ++jt) {
                            double tm = 0.0;
                            for (int m = 0; m < nm; ++m)
                                tm += momw[jt * nm + m] * momv[it * nm + m];
                            if (tm == 0.0) continue;
                            for (int is = 0; is < nloc_s; ++is)
                                for (int js = 0; js < nloc_s; ++js) {
                                    const double gg = G_w[js][0] * G_v[is][0] +
                                                      G_w[js][1] * G_v[is][1];
                                    local[(it * nloc_s + is) * nloc + jt * nloc_s + js] +=
                                        w_s * tm * gg;
                                }
                        }
                    // Remaining -dt dt term handled below with c-independent
                    // weights; gradient term skipped there.
                }

                for (int qt = 0; qt < nq_t; ++qt) {
                    const int kt = et * nq_t + qt;
                    const double cq = pb.velocity_at(xphys, T * tt.x[kt]);
                    const double c2 = cq * cq;
                    const double w_all = w_s * tt.w[kt] * T;
                    const BasisTable& bwt = tt.tab[kt];
                    const BasisTable& bvt = vt.tab[kt];

                    for (int it = 0; it < nft; ++it)
                        for (int jt = 0; jt < nft; ++jt) {
                            const double vv = bwt.value(0, jt) * bvt.value(0, it);
                            const double dd = bwt.value(1, jt) * bvt.value(1, it) / (T * T);
                            const double pp =
                                (method == Method::iga_stab)
                                    ? bwt.value(pt, jt) * bvt.value(pt, it) * slab_pow
                                    : 0.0;
                            for (int is = 0; is < nloc_s; ++is) {
                                double* row =
                                    &local[(static_cast<std::size_t>(it) * nloc_s + is) * nloc];
                                for (int js = 0; js < nloc_s; ++js) {
                                    const double gg = G_w[js][0] * G_v[is][0] +
                                                      G_w[js][1] * G_v[is][1];
                                    double val = -dd * B_w[js] * B_v[is];
                                    if (method != Method::fem_stab) val += c2 * gg * vv;
                                    if (method == Method::iga_stab) val -= delta * c2 * gg * pp;
                                    row[jt * nloc_s + js] += w_all * val;
                                }
                            }
                        }
                }
            }

        // Scatter the local block.
        for (int it = 0; it < nft; ++it) {
            const int at = test.temporal().full_to_active[vt.tab[et * nq_t].index[it]];
            if (at < 0) continue;
            for (int iy = 0; iy < nfy; ++iy) {
                const int ay =
                    d > 1 ? test.spatial(1).full_to_active[vs[1].tab[ey * nq_s].index[iy]] : 0;
                if (d > 1 && ay < 0) continue;
                for (int ix = 0; ix < nfx; ++ix) {
                    const int ax = test.spatial(0).full_to_active[vs[0].tab[ex * nq_s].index[ix]];
                    if (ax < 0) continue;
                    const int row = test.flatten(test.spatial_index(ax, ay), at);
                    const int i = (it * nfy + iy) * nfx + ix;
                    for (int jt = 0; jt < nft; ++jt) {
                        const int bt =
                            trial.temporal().full_to_active[tt.tab[et * nq_t].index[jt]];
                        if (bt < 0) continue;
                        for (int jy = 0; jy < nfy; ++jy) {
                            const int by = d > 1 ? trial.spatial(1)
                                                       .full_to_active[ts[1].tab[ey * nq_s].index[jy]]
                                                 : 0;
                            if (d > 1 && by < 0) continue;
                            for (int jx = 0; jx < nfx; ++jx) {
                                const int bx =
                                    trial.spatial(0).full_to_active[ts[0].tab[ex * nq_s].index[jx]];
                                if (bx < 0) continue;
                                const int col = trial.flatten(trial.spatial_index(bx, by), bt);
                                const int j = (jt * nfy + jy) * nfx + jx;
                                const double v = local[static_cast<std::size_t>(i) * nloc + j];
                                if (v != 0.0) out.emplace_back(row, col, v);
                            }
                        }
                    }
                }
            }
        }
    };

    std::vector<Triplet> trips = parallel_elements(
        n_elements, n_threads, static_cast<std::size_t>(nloc) * nloc, body);

    // Robin boundary term (all methods share it).
    for (int fi = 0; fi < geom.n_faces(); ++fi) {
        const Face f = geom.face(fi);
        if (geom.face_kind(f) != BoundaryKind::robin || pb.periodic_space) continue;
        const QuadRule rs = gauss_legendre(nq_s);
        const QuadRule rt = gauss_legendre(nq_t);
        const int od = d > 1 ? 1 - f.dir : 0;
        const int ne_o = d > 1 ? trial.spatial(od).kv.n_elements() : 1;
        const double side = static_cast<double>(f.side);

        const BasisTable btf = trial.spatial(f.dir).kv.eval_basis(side, 0);
        const BasisTable bvf = test.spatial(f.dir).kv.eval_basis(side, 0);

        for (int eo = 0; eo < ne_o; ++eo) {
            std::vector<double> xs{0.0}, ws{1.0};
            if (d > 1) {
                const KnotVector& okv = trial.spatial(od).kv;
                std::tie(xs, ws) = map_to_element(rs, okv.element_start(eo), okv.element_end(eo));
            }
            for (std::size_t q = 0; q < xs.size(); ++q) {
                const Point eta = geom.face_point(f, xs[q]);
                const Point xphys = geom.map(eta);
                const double meas = geom.face_measure(f, xs[q]) * ws[q];
                BasisTable bto{}, bvo{};
                if (d > 1) {
                    bto = trial.spatial(od).kv.eval_basis(xs[q], 0);
                    bvo = test.spatial(od).kv.eval_basis(xs[q], 0);
                }
                for (int et = 0; et < trial.temporal().kv.n_elements(); ++et) {
                    auto [ts_q, tw_q] = map_to_element(rt, tkv.element_start(et),
                                                       tkv.element_end(et));
                    for (int qt = 0; qt < nq_t; ++qt) {
                        const BasisTable bwt = trial.temporal().kv.eval_basis(ts_q[qt], 1);
                        const BasisTable bvt = test.temporal().kv.eval_basis(ts_q[qt], 0);
                        const double cq = pb.velocity_at(xphys, T * ts_q[qt]);
                        const double wq = pb.theta * cq * meas * tw_q[qt];
                        for (int it = 0; it < nft; ++it) {
                            const int at = test.temporal().full_to_active[bvt.index[it]];
                            if (at < 0) continue;
                            const int no_v = d > 1 ? bvo.n_funcs : 1;
                            for (int io = 0; io < no_v; ++io)
                                for (int ifd = 0; ifd < bvf.n_funcs; ++ifd) {
                                    const double vi = (d > 1 ? bvo.value(0, io) : 1.0) *
                                                      bvf.value(0, ifd) * bvt.value(0, it);
                                    if (vi == 0.0) continue;
                                    int ax, ay = 0;
                                    if (d == 1) {
                                        ax = test.spatial(0).full_to_active[bvf.index[ifd]];
                                        if (ax < 0) continue;
                                    } else {
                                        const int a_f =
                                            test.spatial(f.dir).full_to_active[bvf.index[ifd]];
                                        const int a_o =
                                            test.spatial(od).full_to_active[bvo.index[io]];
                                        if (a_f < 0 || a_o < 0) continue;
                                        ax = (f.dir == 0) ? a_f : a_o;
                                        ay = (f.dir == 0) ? a_o : a_f;
                                    }
                                    const int row = test.flatten(test.spatial_index(ax, ay), at);
                                    for (int jt = 0; jt < nft; ++jt) {
                                        const int bt =
                                            trial.temporal().full_to_active[bwt.index[jt]];
                                        if (bt < 0) continue;
                                        const int no_t = d > 1 ? bto.n_funcs : 1;
                                        for (int jo = 0; jo < no_t; ++jo)
                                            for (int jfd = 0; jfd < btf.n_funcs; ++jfd) {
                                                const double vj =
                                                    (d > 1 ? bto.value(0, jo) : 1.0) *
                                                    btf.value(0, jfd) * bwt.value(1, jt);
                                                if (vj == 0.0) continue;
                                                int bx, by = 0;
                                                if (d == 1) {
                                                    bx = trial.spatial(0)
                                                             .full_to_active[btf.index[jfd]];
                                                    if (bx < 0) continue;
                                                } else {
                                                    const int b_f =
                                                        trial.spatial(f.dir)
                                                            .full_to_active[btf.index[jfd]];
                                                    const int b_o =
                                                        trial.spatial(od)
                                                            .full_to_active[bto.index[jo]];
                                                    if (b_f < 0 || b_o < 0) continue;
                                                    bx = (f.dir == 0) ? b_f : b_o;
                                                    by = (f.dir == 0) ? b_o : b_f;
                                                }
                                                trips.emplace_back(
                                                    row,
                                                    trial.flatten(trial.spatial_index(bx, by), bt),
                                                    wq * vi * vj);
                                            }
                                    }
                                }
                        }
                    }
                }
            }
        }
    }

    SparseMat K(test.n_dof(), trial.n_dof());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

}  // namespace

SparseMat assemble_operator(const WaveProblem& problem, const SpaceTimeSpace& trial,
                            const SpaceTimeSpace& test, Method method, double delta,
                            AssemblyPath path, int n_threads) {
    if (method == Method::iga_stab && delta <= 0.0)
        throw std::invalid_argument("assemble: stabilization parameter must be positive");
    if (path == AssemblyPath::automatic)
        path = problem.velocity_is_constant ? AssemblyPath::kronecker
                                            : AssemblyPath::element_loop;
    if (path == AssemblyPath::kronecker && !problem.velocity_is_constant)
        throw std::invalid_argument("assemble: Kronecker path requires constant velocity");
    return (path == AssemblyPath::kronecker)
               ? assemble_operator_kronecker(problem, trial, test, method, delta)
               : assemble_operator_elements(problem, trial, test, method, delta, n_threads);
}

Eigen::VectorXd assemble_rhs(const WaveProblem& pb, const SpaceTimeSpace& test, int) {
    const GeometryMap& geom = pb.geometry;
    const int d = geom.dim();
    const double T = geom.final_time();
    const int pt = test.temporal().kv.degree();
    const int ps = test.spatial(0).kv.degree();
    const int nq_t = pt + 2;
    const int nq_s = ps + 2;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(test.n_dof());

    DirTables vt = make_dir_tables(test.temporal(), nq_t, 0);
    std::vector<DirTables> vs;
    for (int k = 0; k < d; ++k) vs.push_back(make_dir_tables(test.spatial(k), nq_s, 0));

    const int nfx = ps + 1;
    const int nfy = (d > 1) ? test.spatial(1).kv.degree() + 1 : 1;
    const int nft = pt + 1;

    const int nex = test.spatial(0).kv.n_elements();
    const int ney = (d > 1) ? test.spatial(1).kv.n_elements() : 1;
    const int net = test.temporal().kv.n_elements();

    // Volume source.  Kept sequential: per-entry contribution order must
    // not depend on the thread count for byte-reproducible outputs.
    if (pb.source) {
        const int n_elements = nex * ney * net;
        {
            Eigen::VectorXd& acc = rhs;
            for (int E = 0; E < n_elements; ++E) {
                const int ex = E % nex;
                const int ey = (E / nex) % ney;
                const int et = E / (nex * ney);
                for (int qy = 0; qy < (d > 1 ? nq_s : 1); ++qy)
                    for (int qx = 0; qx < nq_s; ++qx) {
                        const int kx = ex * nq_s + qx, ky = ey * nq_s + qy;
                        const Point eta{vs[0].x[kx], d > 1 ? vs[1].x[ky] : 0.0};
                        const Point xphys = geom.map(eta);
                        double w_s = vs[0].w[kx] * geom.jacobian_det(eta);
                        if (d > 1) w_s *= vs[1].w[ky];
                        for (int qt = 0; qt < nq_t; ++qt) {
                            const int kt = et * nq_t + qt;
                            const double fv = pb.source(xphys, T * vt.x[kt]);
                            if (fv == 0.0) continue;
                            const double w_all = w_s * vt.w[kt] * T * fv;
                            const BasisTable& bt = vt.tab[kt];
                            for (int it = 0; it < nft; ++it) {
                                const int at = test.temporal().full_to_active[bt.index[it]];
                                if (at < 0) continue;
                                const double wt = w_all * bt.value(0, it);
                                for (int iy = 0; iy < nfy; ++iy) {
                                    const int ay =
                                        d > 1 ? test.spatial(1)
                                                    .full_to_active[vs[1].tab[ky].index[iy]]
                                              : 0;
                                    if (d > 1 && ay < 0) continue;
                                    const double wy =
                                        d > 1 ? vs[1].tab[ky].value(0, iy) : 1.0;
                                    for (int ix = 0; ix < nfx; ++ix) {
                                        const int ax = test.spatial(0)
                                                           .full_to_active[vs[0].tab[kx].index[ix]];
                                        if (ax < 0) continue;
                                        acc[test.flatten(test.spatial_index(ax, ay), at)] +=
                                            wt * wy * vs[0].tab[kx].value(0, ix);
                                    }
                                }
                            }
                        }
                    }
            }
        }
    }

    // Initial velocity: int_Omega u1 v(.,0).
    if (pb.initial_velocity) {
        const BasisTable bt0 = test.temporal().kv.eval_basis(0.0, 0);
        for (int ey = 0; ey < ney; ++ey)
            for (int ex = 0; ex < nex; ++ex)
                for (int qy = 0; qy < (d > 1 ? nq_s : 1); ++qy)
                    for (int qx = 0; qx < nq_s; ++qx) {
                        const int kx = ex * nq_s + qx, ky = ey * nq_s + qy;
                        const Point eta{vs[0].x[kx], d > 1 ? vs[1].x[ky] : 0.0};
                        const Point xphys = geom.map(eta);
                        double w_s = vs[0].w[kx] * geom.jacobian_det(eta);
                        if (d > 1) w_s *= vs[1].w[ky];
                        const double u1v = pb.initial_velocity(xphys);
                        if (u1v == 0.0) continue;
                        for (int it = 0; it < nft; ++it) {
                            const int at = test.temporal().full_to_active[bt0.index[it]];
                            if (at < 0 || bt0.value(0, it) == 0.0) continue;
                            const double wt = w_s * u1v * bt0.value(0, it);
                            for (int iy = 0; iy < nfy; ++iy) {
                                const int ay = d > 1 ? test.spatial(1)
                                                           .full_to_active[vs[1].tab[ky].index[iy]]
                                                     : 0;
                                if (d > 1 && ay < 0) continue;
                                const double wy = d > 1 ? vs[1].tab[ky].value(0, iy) : 1.0;
                                for (int ix = 0; ix < nfx; ++ix) {
                                    const int ax =
                                        test.spatial(0).full_to_active[vs[0].tab[kx].index[ix]];
                                    if (ax < 0) continue;
                                    rhs[test.flatten(test.spatial_index(ax, ay), at)] +=
                                        wt * wy * vs[0].tab[kx].value(0, ix);
                                }
                            }
                        }
                    }
    }

    // Neumann and Robin boundary data.
    for (int fi = 0; fi < geom.n_faces() && !pb.periodic_space; ++fi) {
        const Face f = geom.face(fi);
        const BoundaryKind kind = geom.face_kind(f);
        const SpaceTimeFn* data = nullptr;
        if (kind == BoundaryKind::neumann && pb.neumann_data) data = &pb.neumann_data;
        if (kind == BoundaryKind::robin && pb.robin_data) data = &pb.robin_data;
        if (!data) continue;

        const QuadRule rs = gauss_legendre(nq_s);
        const int od = d > 1 ? 1 - f.dir : 0;
        const int ne_o = d > 1 ? test.spatial(od).kv.n_elements() : 1;
        const double side = static_cast<double>(f.side);
        const BasisTable bvf = test.spatial(f.dir).kv.eval_basis(side, 0);

        for (int eo = 0; eo < ne_o; ++eo) {
            std::vector<double> xs{0.0}, ws{1.0};
            if (d > 1) {
                const KnotVector& okv = test.spatial(od).kv;
                std::tie(xs, ws) = map_to_element(rs, okv.element_start(eo), okv.element_end(eo));
            }
            for (std::size_t q = 0; q < xs.size(); ++q) {
                const Point eta = geom.face_point(f, xs[q]);
                const Point xphys = geom.map(eta);
                const double meas = geom.face_measure(f, xs[q]) * ws[q];
                BasisTable bvo{};
                if (d > 1) bvo = test.spatial(od).kv.eval_basis(xs[q], 0);
                for (int et = 0; et < net; ++et)
                    for (int qt = 0; qt < nq_t; ++qt) {
                        const int kt = et * nq_t + qt;
                        const double gval = (*data)(xphys, T * vt.x[kt]);
                        if (gval == 0.0) continue;
                        const double wq = gval * meas * vt.w[kt] * T;
                        const BasisTable& bvt = vt.tab[kt];
                        for (int it = 0; it < nft; ++it) {
                            const int at = test.temporal().full_to_active[bvt.index[it]];
                            if (at < 0) continue;
                            const int no_v = d > 1 ? bvo.n_funcs : 1;
                            for (int io = 0; io < no_v; ++io)
                                for (int ifd = 0; ifd < bvf.n_funcs; ++ifd) {
                                    const double vi = (d > 1 ? bvo.value(0, io) : 1.0) *
                                                      bvf.value(0, ifd) * bvt.value(0, it);
                                    if (vi == 0.0) continue;
                                    int ax, ay = 0;
                                    if (d == 1) {
                                        ax = test.spatial(0).full_to_active[bvf.index[ifd]];
                                        if (ax < 0) continue;
                                    } else {
                                        const int a_f =
                                            test.spatial(f.dir).full_to_active[bvf.index[ifd]];
                                        const int a_o =
                                            test.spatial(od).full_to_active[bvo.index[io]];
                                        if (a_f < 0 || a_o < 0) continue;
                                        ax = (f.dir == 0) ? a_f : a_o;
                                        ay = (f.dir == 0) ? a_o : a_f;
                                    }
                                    rhs[test.flatten(test.spatial_index(ax, ay), at)] += wq * vi;
                                }
                        }
                    }
            }
        }
    }

    return rhs;
}

namespace {

LinearSystem make_system(const WaveProblem& pb, const SpaceTimeSpace& trial,
                         const SpaceTimeSpace& test, Method method, double delta,
                         AssemblyPath path, int n_threads) {
    LinearSystem sys;
    sys.op = assemble_operator(pb, trial, test, method, delta, path, n_threads);
    sys.rhs = assemble_rhs(pb, test, n_threads);
    std::vector<KnotVector> kvs;
    for (int k = 0; k < trial.dim(); ++k) kvs.push_back(trial.spatial(k).kv);
    auto [hs, ht] = physical_mesh_sizes(pb.geometry, kvs, trial.temporal().kv);
    sys.info = SystemInfo{method, delta, trial.spatial(0).kv.degree(),
                          trial.temporal().kv.degree(), hs, ht};
    sys.tensor_dims = test.tensor_dims();
    sys.tensor_periodic = test.tensor_periodic();
    return sys;
}

}  // namespace

LinearSystem assemble_plain(const WaveProblem& pb, const SpaceTimeSpace& trial,
                            const SpaceTimeSpace& test, AssemblyPath path, int n_threads) {
    return make_system(pb, trial, test, Method::plain, 0.0, path, n_threads);
}

LinearSystem assemble_iga_stab(const WaveProblem& pb, const SpaceTimeSpace& trial,
                               const SpaceTimeSpace& test, double delta, AssemblyPath path,
                               int n_threads) {
    return make_system(pb, trial, test, Method::iga_stab, delta, path, n_threads);
}

LinearSystem assemble_fem_stab(const WaveProblem& pb, const SpaceTimeSpace& trial,
                               const SpaceTimeSpace& test, AssemblyPath path, int n_threads) {
    return make_system(pb, trial, test, Method::fem_stab, 0.0, path, n_threads);
}

void apply_lifting(LinearSystem& system, const DiscreteFunction& lifting,
                   const WaveProblem& problem, const SpaceTimeSpace& trial,
                   const SpaceTimeSpace& test, AssemblyPath path, int n_threads) {
    if (lifting.coefficients().size() == 0) return;
    std::vector<KnotVector> kvs;
    for (int k = 0; k < trial.dim(); ++k) kvs.push_back(trial.spatial(k).kv);
    SpaceTimeSpace full = unconstrained_space(kvs, trial.temporal().kv);
    if (lifting.space().n_dof() != full.n_dof())
        throw std::invalid_argument("apply_lifting: lifting not on the unconstrained space");
    SparseMat rect = assemble_operator(problem, full, test, system.info.method,
                                       system.info.delta, path, n_threads);
    system.rhs -= rect * lifting.coefficients();
}

std::pair<double, double> physical_mesh_sizes(const GeometryMap& geometry,
                                              const std::vector<KnotVector>& spatial,
                                              const KnotVector& temporal) {
    double hs = 0.0;
    if (geometry.is_affine_box()) {
        for (std::size_t k = 0; k < spatial.size(); ++k)
            hs = std::max(hs, geometry.box_lengths()[k] * spatial[k].max_element_size());
    } else {
        // Half annulus: radial extent times radial mesh, outer arc times
        // angular mesh.
        const Point outer = geometry.map({1.0, 0.0});
        const double r_out = std::hypot(outer[0], outer[1]);
        const Point inner = geometry.map({0.0, 0.0});
        const double r_in = std::hypot(inner[0], inner[1]);
        hs = std::max((r_out - r_in) * spatial[0].max_element_size(),
                      3.14159265358979323846 * r_out * spatial[1].max_element_size());
    }
    return {hs, geometry.final_time() * temporal.max_element_size()};
}

}  // namespace stwave
