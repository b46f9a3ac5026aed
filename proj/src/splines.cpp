#include "stwave/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stwave {

namespace {

constexpr double kBreakpointTol = 1e-12;

}  // namespace

KnotVector KnotVector::open(double a, double b, int n_elements, int degree,
                            int regularity, std::span<const double> extra_c0) {
    if (!(b > a)) throw std::invalid_argument("knot vector: empty domain");
    if (n_elements < 1) throw std::invalid_argument("knot vector: need at least one element");
    if (degree < 0 || degree > kMaxDegree)
        throw std::invalid_argument("knot vector: degree out of supported range");
    if (regularity < -1 || regularity > degree - 1)
        throw std::invalid_argument("knot vector: regularity must lie in [-1, degree-1]");

    KnotVector kv;
    kv.degree_ = degree;
    kv.periodic_ = false;
    kv.a_ = a;
    kv.b_ = b;

    const double h = (b - a) / n_elements;
    kv.breakpoints_.resize(n_elements + 1);
    for (int i = 0; i <= n_elements; ++i)
        kv.breakpoints_[i] = (i == n_elements) ? b : a + i * h;

    const int interior_mult = degree - regularity;
    kv.multiplicities_.assign(kv.breakpoints_.size(), interior_mult);
    kv.multiplicities_.front() = degree + 1;
    kv.multiplicities_.back() = degree + 1;

    for (double z : extra_c0) {
        if (!(z > a && z < b))
            throw std::domain_error("knot vector: C0 breakpoint outside the open domain");
        auto it = std::lower_bound(kv.breakpoints_.begin(), kv.breakpoints_.end(),
                                   z - kBreakpointTol);
        std::size_t pos = it - kv.breakpoints_.begin();
        if (pos < kv.breakpoints_.size() && std::abs(kv.breakpoints_[pos] - z) <= kBreakpointTol) {
            kv.multiplicities_[pos] = std::max(kv.multiplicities_[pos], degree);
        } else {
            kv.breakpoints_.insert(kv.breakpoints_.begin() + pos, z);
            kv.multiplicities_.insert(kv.multiplicities_.begin() + pos, degree);
        }
    }

    kv.knots_.clear();
    for (std::size_t i = 0; i < kv.breakpoints_.size(); ++i)
        kv.knots_.insert(kv.knots_.end(), kv.multiplicities_[i], kv.breakpoints_[i]);

    kv.n_basis_ = static_cast<int>(kv.knots_.size()) - degree - 1;
    kv.rebuild_element_spans();
    return kv;
}

KnotVector KnotVector::periodic(double a, double b, int n_elements, int degree) {
    if (!(b > a)) throw std::invalid_argument("knot vector: empty domain");
    if (degree < 0 || degree > kMaxDegree)
        throw std::invalid_argument("knot vector: degree out of supported range");
    if (n_elements <= degree)
        throw std::invalid_argument("periodic knot vector: need n_elements > degree");

    KnotVector kv;
    kv.degree_ = degree;
    kv.periodic_ = true;
    kv.a_ = a;
    kv.b_ = b;

    const double h = (b - a) / n_elements;
    kv.breakpoints_.resize(n_elements + 1);
    for (int i = 0; i <= n_elements; ++i)
        kv.breakpoints_[i] = (i == n_elements) ? b : a + i * h;
    kv.multiplicities_.assign(kv.breakpoints_.size(), 1);

    // Unrolled uniform knots: degree ghost knots on each side of [a,b].
    kv.knots_.resize(n_elements + 2 * degree + 1);
    for (int i = 0; i < static_cast<int>(kv.knots_.size()); ++i)
        kv.knots_[i] = a + (i - degree) * h;

    kv.n_basis_ = n_elements;
    kv.rebuild_element_spans();
    return kv;
}

void KnotVector::rebuild_element_spans() {
    element_span_.resize(n_elements());
    std::size_t k = 0;
    for (int e = 0; e < n_elements(); ++e) {
        while (k + 1 < knots_.size() && knots_[k + 1] <= breakpoints_[e] + kBreakpointTol) ++k;
        element_span_[e] = static_cast<int>(k);
    }
}

double KnotVector::max_element_size() const {
    double h = 0.0;
    for (int e = 0; e < n_elements(); ++e) h = std::max(h, element_size(e));
    return h;
}

int KnotVector::find_span(double x) const {
    if (x < a_ - kBreakpointTol || x > b_ + kBreakpointTol)
        throw std::domain_error("knot vector: evaluation point outside the domain");
    // Binary search on breakpoints; x == b maps to the last element.
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    int e = static_cast<int>(it - breakpoints_.begin()) - 1;
    e = std::clamp(e, 0, n_elements() - 1);
    return element_span_[e];
}

BasisTable KnotVector::eval_basis(double x, int max_deriv) const {
    const int p = degree_;
    if (max_deriv < 0 || max_deriv > p)
        throw std::invalid_argument("eval_basis: derivative order exceeds degree");

    const int span = find_span(x);
    BasisTable table;
    table.span = span;
    table.n_funcs = p + 1;
    table.max_deriv = max_deriv;
    for (int j = 0; j <= p; ++j) table.index[j] = global_index(span - p + j);

    // Cox-De Boor triangle (values and knot differences), 0/0 = 0 convention.
    double ndu[kMaxDegree + 1][kMaxDegree + 1];
    double left[kMaxDegree + 1], right[kMaxDegree + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = (ndu[j][r] != 0.0) ? ndu[r][j - 1] / ndu[j][r] : 0.0;
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for (int j = 0; j <= p; ++j) table.values[0][j] = ndu[j][p];

    if (max_deriv == 0) return table;

    // Derivatives via the standard two-row recursion on the triangle.
    double a[2][kMaxDegree + 1];
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= max_deriv; ++k) {
            double dv = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a[s2][0] = (ndu[pk + 1][rk] != 0.0) ? a[s1][0] / ndu[pk + 1][rk] : 0.0;
                dv = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (ndu[pk + 1][rk + j] != 0.0)
                               ? (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j]
                               : 0.0;
                dv += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = (ndu[pk + 1][r] != 0.0) ? -a[s1][k - 1] / ndu[pk + 1][r] : 0.0;
                dv += a[s2][k] * ndu[r][pk];
            }
            table.values[k][r] = dv;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= max_deriv; ++k) {
        for (int j = 0; j <= p; ++j) table.values[k][j] *= factor;
        factor *= (p - k);
    }
    return table;
}

KnotVector make_open_knot_vector(double a, double b, int n_elements, int degree,
                                 int regularity, std::span<const double> extra_c0) {
    return KnotVector::open(a, b, n_elements, degree, regularity, extra_c0);
}

KnotVector make_periodic_space(double a, double b, int n_elements, int degree) {
    return KnotVector::periodic(a, b, n_elements, degree);
}

std::vector<double> greville_abscissae(const KnotVector& kv) {
    if (kv.is_periodic())
        throw std::invalid_argument("greville_abscissae: unsupported for periodic knot vectors");
    const int p = kv.degree();
    const auto& xi = kv.knots();
    std::vector<double> g(kv.n_basis());
    for (int i = 0; i < kv.n_basis(); ++i) {
        double s = 0.0;
        for (int k = 1; k <= p; ++k) s += xi[i + k];
        g[i] = (p > 0) ? s / p : 0.5 * (xi[i] + xi[i + 1]);
    }
    return g;
}

std::vector<double> collocation_points(const KnotVector& kv) {
    if (!kv.is_periodic()) return greville_abscissae(kv);
    const int p = kv.degree();
    const double a = kv.domain_start(), len = kv.domain_end() - a;
    const auto& xi = kv.knots();
    std::vector<double> g(kv.n_basis());
    for (int i = 0; i < kv.n_basis(); ++i) {
        double s = 0.0;
        for (int k = 1; k <= p; ++k) s += xi[i + k];
        double x = (p > 0) ? s / p : 0.5 * (xi[i] + xi[i + 1]);
        x = std::fmod(x - a, len);
        if (x < 0.0) x += len;
        g[i] = a + x;
    }
    return g;
}

}  // namespace stwave
