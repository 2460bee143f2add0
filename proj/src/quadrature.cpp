#include "freeconv/quadrature.hpp"

#include <cmath>

namespace freeconv::quad {

GaussLegendre::GaussLegendre(int n) : nodes(n), weights(n) {
    // Roots of the Legendre polynomial P_n by Newton iteration on the
    // three-term recurrence, seeded with the Chebyshev approximation.
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = 0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
            }
            dp = n * (x * p0 - p1) / (x * x - 1);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1 - x * x) * dp * dp);
    }
}

const GaussLegendre& gl8() {
    static const GaussLegendre rule(8);
    return rule;
}

const GaussLegendre& gl16() {
    static const GaussLegendre rule(16);
    return rule;
}

}  // namespace freeconv::quad
