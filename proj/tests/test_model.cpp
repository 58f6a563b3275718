#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qdet/errors.hpp"
#include "qdet/model.hpp"
#include "qdet/quadrature.hpp"

using namespace qdet;

namespace {
const ModelParams kBase{0.1, 0.01, 1.0, 0.0, 1.0};

double jump_oracle(const ModelParams& m, double dt, double phi, double z) {
    double beta = m.lambda + m.alpha * z / std::sqrt(dt);
    double gam = 0.5 * m.alpha * m.alpha / dt;
    double mass = oracle::gk15(
        [&](double u) { return m.lambda * std::exp(beta * u - gam * u * u); }, 0.0, dt, 1e-13);
    double scale = std::exp(m.alpha * z * std::sqrt(dt) + (m.lambda - 0.5 * m.alpha * m.alpha) * dt);
    return scale * phi + mass;
}
}  // namespace

TEST_CASE("drift_flow identity, inversion and crossing level") {
    CHECK(drift_flow(kBase, 0.0, 7.3) == doctest::Approx(7.3));
    double fwd = drift_flow(kBase, 2.0, 1.0);
    CHECK(std::fabs(drift_flow(kBase, -2.0, fwd) - 1.0) < 1e-12);
    // flow from zero reaches lambda/c = 10 at t = 10 ln 11
    CHECK(drift_flow(kBase, 10.0 * std::log(11.0), 0.0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("drift_flow semigroup property") {
    std::mt19937_64 gen(991);
    std::uniform_real_distribution<double> ut(0.0, 5.0), up(0.0, 40.0);
    for (int i = 0; i < 200; ++i) {
        double s = ut(gen), t = ut(gen), phi = up(gen);
        double a = drift_flow(kBase, s + t, phi);
        double b = drift_flow(kBase, s, drift_flow(kBase, t, phi));
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("drift_flow rejects infeasible inverse flow") {
    CHECK_THROWS_AS(drift_flow(kBase, -10.0, 0.5), std::domain_error);
}

TEST_CASE("jump_update recovers the flow in Gaussian mean") {
    // E[j(t, Z, phi)] = e^{lambda t}(phi + 1) - 1
    GaussHermite quad(64);
    double mean = quad.expect([&](double z) { return jump_update(kBase, 1.0, 2.0, z); });
    CHECK(mean == doctest::Approx(drift_flow(kBase, 1.0, 2.0)).epsilon(1e-10));
}

TEST_CASE("jump_update mean identity over a (t, phi) grid") {
    GaussHermite quad(64);
    for (double t = 0.01; t <= 5.0; t += 0.45) {
        for (double phi = 0.0; phi <= 50.0; phi += 5.0) {
            double mean = quad.expect([&](double z) { return jump_update(kBase, t, phi, z); });
            CHECK(std::fabs(mean - drift_flow(kBase, t, phi)) < 1e-8);
        }
    }
}

TEST_CASE("jump_update second moment stays below the closed-form bound") {
    GaussHermite quad(96);
    const double lam = kBase.lambda, a2 = kBase.alpha * kBase.alpha;
    for (double t = 0.01; t <= 5.0; t += 0.45) {
        for (double phi = 0.0; phi <= 50.0; phi += 5.0) {
            double m2 = quad.expect([&](double z) {
                double j = jump_update(kBase, t, phi, z);
                return j * j;
            });
            double bound = phi * phi * std::exp((2 * lam + a2) * t) +
                           2 * phi * std::exp(lam * t) * lam / (lam + a2) *
                               (std::exp((lam + a2) * t) - 1.0) +
                           std::exp(a2 * t) * std::pow(std::exp(lam * t) - 1.0, 2);
            CHECK(m2 <= bound * (1.0 + 1e-9) + 1e-12);
        }
    }
}

TEST_CASE("jump_update continuity at zero elapsed time") {
    CHECK(std::fabs(jump_update(kBase, 1e-8, 5.0, 0.7) - 5.0) < 1e-3);
}

TEST_CASE("jump_update against an independent quadrature oracle") {
    // the documented spot value first
    double v = jump_update(kBase, 0.5, 1.0, 0.0);
    double ref = jump_oracle(kBase, 0.5, 1.0, 0.0);
    CHECK(std::fabs(v - ref) <= 1e-10 * std::fabs(ref));
    // regime sweep across the closed-form branches and the quadrature fallback
    for (double lam : {0.1, 1.0}) {
        for (double al : {0.5, 1.0, 2.0}) {
            ModelParams m{lam, 0.01, al, 0.0, 1.0};
            for (double dt : {1e-6, 1e-3, 0.1, 1.0, 10.0, 100.0}) {
                for (double z : {-8.0, -2.0, 0.0, 2.0, 8.0}) {
                    double got = jump_update(m, dt, 3.0, z);
                    double want = jump_oracle(m, dt, 3.0, z);
                    CHECK(std::fabs(got - want) <= 1e-9 * std::max(1e-300, std::fabs(want)));
                }
            }
        }
    }
}

TEST_CASE("jump_update monotone in phi and z") {
    std::mt19937_64 gen(4242);
    std::uniform_real_distribution<double> ut(0.01, 5.0), up(0.0, 50.0), uz(-4.0, 4.0);
    for (int i = 0; i < 200; ++i) {
        double t = ut(gen), phi = up(gen), z = uz(gen);
        CHECK(jump_update(kBase, t, phi + 0.5, z) > jump_update(kBase, t, phi, z));
        CHECK(jump_update(kBase, t, phi, z + 0.25) > jump_update(kBase, t, phi, z));
    }
}

TEST_CASE("jump_update rejects nonpositive dt") {
    CHECK_THROWS_AS(jump_update(kBase, 0.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(jump_update(kBase, -1.0, 1.0, 0.0), std::domain_error);
}

TEST_CASE("odds_from_prior") {
    CHECK(odds_from_prior(0.0) == doctest::Approx(0.0));
    CHECK(odds_from_prior(0.5) == doctest::Approx(1.0));
    CHECK(odds_from_prior(0.9) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK_THROWS_AS(odds_from_prior(1.0), std::domain_error);
}

TEST_CASE("bayes_risk_from_value") {
    CHECK(bayes_risk_from_value(kBase, 0.3, 0.0) == doctest::Approx(0.7));
    CHECK(bayes_risk_from_value(kBase, 0.0, -76.021) == doctest::Approx(0.23979).epsilon(1e-12));
    CHECK(bayes_risk_from_value(kBase, 0.5, -50.0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(bayes_risk_from_value(kBase, 1.0, 0.0), std::domain_error);
}

TEST_CASE("params validation") {
    ModelParams bad = kBase;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = kBase;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = kBase;
    bad.p = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = kBase;
    bad.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(true), ConfigError);
    CHECK_NOTHROW(bad.validate(false));
}
