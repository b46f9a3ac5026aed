#pragma once

#include <utility>
#include <vector>

namespace stwave {

/// Gauss-Legendre rule on (-1,1); exact for polynomials of degree 2n-1.
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
};

/// Nodes by Newton iteration on Legendre polynomials from Chebyshev initial
/// guesses, converged to 1e-15.  n must lie in [1,32].
QuadRule gauss_legendre(int n);

/// Affine image of a reference rule on [a,b]; weights scale by (b-a)/2.
std::pair<std::vector<double>, std::vector<double>>
map_to_element(const QuadRule& rule, double a, double b);

}  // namespace stwave
