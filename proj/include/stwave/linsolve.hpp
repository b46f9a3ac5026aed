#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "stwave/assembly.hpp"

namespace stwave {

/// Thrown when a pivot falls below 1e-14 times the largest operator entry.
struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FactorStats {
    int n = 0;
    int kl = 0, ku = 0;
    std::size_t factor_bytes = 0;
    bool used_sparse_lu = false;
};

/// Direct LU factorization of the space-time operator.
///
/// The tensor-product DOF numbering is re-blocked internally (largest factor
/// slowest, periodic factors fastest) to minimize the bandwidth, then
/// factorized with LAPACK's banded LU.  Systems whose band storage would
/// exceed the memory budget fall back to a fill-reducing sparse LU.  Solves
/// run one round of iterative refinement and record the final residual.
class Factorization {
public:
    /// Budget for the banded factor storage before switching to sparse LU.
    static constexpr std::size_t kDefaultBandBudget = std::size_t(4) << 30;

    explicit Factorization(const LinearSystem& system,
                           std::size_t band_budget = kDefaultBandBudget);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    const FactorStats& stats() const { return stats_; }
    /// Residual |b - A x|_2 of the most recent solve.
    double last_residual() const { return last_residual_; }
    /// Whether the last solve met |r| <= 1e-9 (|A| |x| + |b|).
    bool last_solve_accurate() const { return last_accurate_; }

private:
    SparseMat op_;  // original ordering, for refinement and residuals
    std::vector<int> perm_;
    FactorStats stats_;
    double op_maxabs_ = 0.0;
    double op_norm1_ = 0.0;

    std::vector<double> band_;  // LAPACK band storage (factored)
    std::vector<int> ipiv_;
    int ldab_ = 0;

    std::shared_ptr<Eigen::SparseLU<SparseMat>> sparse_lu_;

    mutable double last_residual_ = 0.0;
    mutable bool last_accurate_ = true;

    Eigen::VectorXd solve_once(const Eigen::VectorXd& rhs) const;
};

Factorization factorize(const LinearSystem& system);
Eigen::VectorXd solve(const Factorization& fact, const Eigen::VectorXd& rhs);

}  // namespace stwave
