#include "stwave/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab,
             const int* ldab, int* ipiv, int* info);
void dgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const double* ab, const int* ldab, const int* ipiv, double* b, const int* ldb,
             int* info);
}

namespace stwave {

namespace {

// Re-blocking permutation: order the tensor factors with the largest one
// slowest and periodic factors fastest (their wrap coupling then spans only
// their own stride).  Returns perm with perm[old] = new.
std::vector<int> tensor_permutation(const std::vector<int>& dims,
                                    const std::vector<bool>& periodic) {
    const int nd = static_cast<int>(dims.size());
    std::vector<int> axes(nd);
    std::iota(axes.begin(), axes.end(), 0);
    std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) {
        if (periodic[a] != periodic[b]) return !periodic[a];  // periodic last
        return dims[a] > dims[b];
    });

    // Strides in the original (slowest-to-fastest) layout.
    std::vector<long long> stride_old(nd, 1);
    for (int k = nd - 2; k >= 0; --k) stride_old[k] = stride_old[k + 1] * dims[k + 1];
    std::vector<long long> stride_new(nd, 1);
    for (int k = nd - 2; k >= 0; --k) stride_new[k] = stride_new[k + 1] * dims[axes[k + 1]];

    long long n = 1;
    for (int dmm : dims) n *= dmm;
    std::vector<int> perm(n);
    std::vector<int> idx(nd, 0);
    for (long long i = 0; i < n; ++i) {
        long long rest = i;
        long long out = 0;
        for (int k = 0; k < nd; ++k) {
            idx[k] = static_cast<int>(rest / stride_old[k]);
            rest %= stride_old[k];
        }
        for (int k = 0; k < nd; ++k) out += idx[axes[k]] * stride_new[k];
        perm[i] = static_cast<int>(out);
    }
    return perm;
}

}  // namespace

Factorization::Factorization(const LinearSystem& system, std::size_t band_budget) {
    if (system.op.rows() != system.op.cols())
        throw std::invalid_argument("factorize: operator must be square");
    op_ = system.op;
    const int n = static_cast<int>(op_.rows());
    stats_.n = n;

    for (int o = 0; o < op_.outerSize(); ++o)
        for (SparseMat::InnerIterator it(op_, o); it; ++it)
            op_maxabs_ = std::max(op_maxabs_, std::abs(it.value()));
    op_norm1_ = 0.0;
    {
        Eigen::VectorXd colsum = Eigen::VectorXd::Zero(n);
        for (int o = 0; o < op_.outerSize(); ++o)
            for (SparseMat::InnerIterator it(op_, o); it; ++it)
                colsum[it.col()] += std::abs(it.value());
        op_norm1_ = colsum.maxCoeff();
    }

    // Permuted copy with minimized bandwidth.
    if (!system.tensor_dims.empty()) {
        long long prod = 1;
        for (int dmm : system.tensor_dims) prod *= dmm;
        if (prod == n) perm_ = tensor_permutation(system.tensor_dims, system.tensor_periodic);
    }
    SparseMat pk;
    if (!perm_.empty()) {
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P(n);
        for (int i = 0; i < n; ++i) P.indices()[i] = perm_[i];
        pk = P * op_ * P.transpose();
    } else {
        pk = op_;
    }

    int kl = 0, ku = 0;
    for (int o = 0; o < pk.outerSize(); ++o)
        for (SparseMat::InnerIterator it(pk, o); it; ++it) {
            const int dist = static_cast<int>(it.row() - it.col());
            kl = std::max(kl, dist);
            ku = std::max(ku, -dist);
        }
    stats_.kl = kl;
    stats_.ku = ku;

    const std::size_t band_bytes =
        static_cast<std::size_t>(2 * kl + ku + 1) * static_cast<std::size_t>(n) * sizeof(double);
    if (static_cast<long long>(kl) + ku >= n || band_bytes > band_budget) {
        stats_.used_sparse_lu = true;
        sparse_lu_ = std::make_shared<Eigen::SparseLU<SparseMat>>();
        sparse_lu_->compute(op_);
        if (sparse_lu_->info() != Eigen::Success)
            throw SingularSystem("sparse LU factorization failed (singular system?)");
        stats_.factor_bytes =
            static_cast<std::size_t>(sparse_lu_->nnzL() + sparse_lu_->nnzU()) * 12;
        perm_.clear();
        return;
    }

    ldab_ = 2 * kl + ku + 1;
    band_.assign(static_cast<std::size_t>(ldab_) * n, 0.0);
    for (int o = 0; o < pk.outerSize(); ++o)
        for (SparseMat::InnerIterator it(pk, o); it; ++it) {
            const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
            band_[static_cast<std::size_t>(j) * ldab_ + (kl + ku + i - j)] = it.value();
        }
    stats_.factor_bytes = band_.size() * sizeof(double);

    ipiv_.resize(n);
    int info = 0;
    dgbtrf_(&n, &n, &kl, &ku, band_.data(), &ldab_, ipiv_.data(), &info);
    if (info < 0) throw std::runtime_error("dgbtrf: invalid argument");
    if (info > 0) throw SingularSystem("banded LU factorization hit a zero pivot");

    // Pivot magnitude check against the operator scale.
    for (int j = 0; j < n; ++j) {
        const double piv = std::abs(band_[static_cast<std::size_t>(j) * ldab_ + (kl + ku)]);
        if (piv < 1e-14 * op_maxabs_)
            throw SingularSystem("banded LU pivot below 1e-14 of the operator scale");
    }
}

Eigen::VectorXd Factorization::solve_once(const Eigen::VectorXd& rhs) const {
    const int n = stats_.n;
    if (stats_.used_sparse_lu) return sparse_lu_->solve(rhs);

    Eigen::VectorXd b(n);
    if (!perm_.empty()) {
        for (int i = 0; i < n; ++i) b[perm_[i]] = rhs[i];
    } else {
        b = rhs;
    }
    int info = 0;
    const int one = 1;
    dgbtrs_("N", &n, &stats_.kl, &stats_.ku, &one, band_.data(), &ldab_, ipiv_.data(), b.data(),
            &n, &info);
    if (info != 0) throw std::runtime_error("dgbtrs failed");
    if (perm_.empty()) return b;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = b[perm_[i]];
    return x;
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != stats_.n)
        throw std::invalid_argument("solve: right-hand side dimension mismatch");

    Eigen::VectorXd x = solve_once(rhs);
    // One round of iterative refinement.
    Eigen::VectorXd r = rhs - op_ * x;
    if (r.allFinite() && r.norm() > 0.0) {
        x += solve_once(r);
        r = rhs - op_ * x;
    }
    last_residual_ = r.norm();
    const double scale = op_norm1_ * x.norm() + rhs.norm();
    last_accurate_ = (scale == 0.0) ? (last_residual_ == 0.0)
                                    : (last_residual_ <= 1e-9 * scale);
    return x;
}

Factorization factorize(const LinearSystem& system) { return Factorization(system); }

Eigen::VectorXd solve(const Factorization& fact, const Eigen::VectorXd& rhs) {
    return fact.solve(rhs);
}

}  // namespace stwave
