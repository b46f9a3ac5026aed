#include "stwave/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stwave {

QuadRule gauss_legendre(int n) {
    if (n < 1 || n > 32) throw std::invalid_argument("gauss_legendre: n must lie in [1,32]");

    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev guess for the i-th positive root, refined by Newton.
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) <= 1e-15) break;
        }
        double p1 = 1.0, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);

        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

std::pair<std::vector<double>, std::vector<double>>
map_to_element(const QuadRule& rule, double a, double b) {
    if (!(b > a)) throw std::domain_error("map_to_element: degenerate interval");
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::vector<double> x(rule.size()), w(rule.size());
    for (int i = 0; i < rule.size(); ++i) {
        x[i] = mid + half * rule.nodes[i];
        w[i] = half * rule.weights[i];
    }
    return {std::move(x), std::move(w)};
}

}  // namespace stwave
