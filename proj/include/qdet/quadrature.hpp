#pragma once

#include <vector>

namespace qdet {

// Gauss-Hermite rule in probabilists' form: integrates f against the standard
// normal density, sum of weights equals 1 and nodes are symmetric about 0.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;

    explicit GaussHermite(int n);

    template <typename Fn>
    double expect(Fn&& f) const {
        double acc = 0.0;
        for (int i = 0; i < order; ++i) acc += weights[i] * f(nodes[i]);
        return acc;
    }
};

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
    int order = 0;

    explicit GaussLegendre(int n);

    // Integrate f over [a, b] with a single panel.
    template <typename Fn>
    double integrate(Fn&& f, double a, double b) const {
        double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < order; ++i) acc += weights[i] * f(c + h * nodes[i]);
        return acc * h;
    }
};

}  // namespace qdet
