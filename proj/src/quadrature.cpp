#include "qdet/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace qdet {

GaussHermite::GaussHermite(int n) : order(n) {
    if (n < 1) throw std::invalid_argument("GaussHermite: order must be >= 1");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    // Newton iteration on physicists' Hermite polynomials (weight exp(-x^2)),
    // then rescale to the probabilists' normal measure.
    const double eps = 1e-15;
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0, pp = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * nodes[0];
        else if (i == 3)
            z = 1.91 * z - 0.91 * nodes[1];
        else
            z = 2.0 * z - nodes[i - 2];
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::fabs(z - z1) <= eps) break;
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
    // physicists' x, w  ->  probabilists' z = sqrt(2) x (w sums to sqrt(pi))
    const double sqrt2 = 1.41421356237309504880;
    const double inv_sqrt_pi = 0.56418958354775628695;
    for (int i = 0; i < n; ++i) {
        nodes[i] = -sqrt2 * nodes[i];  // ascending order
        weights[i] *= inv_sqrt_pi;
    }
}

GaussLegendre::GaussLegendre(int n) : order(n) {
    if (n < 1) throw std::invalid_argument("GaussLegendre: order must be >= 1");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const double eps = 1e-15;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 200; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::fabs(z - z1) <= eps) break;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
}

}  // namespace qdet
