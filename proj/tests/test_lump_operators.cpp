#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qdet/lump.hpp"

using namespace qdet;

namespace {
const ModelParams kBase{0.1, 0.01, 1.0, 0.0, 1.0};
const double kPhibar = 56.865;

ValueTable zero_table() { return ValueTable::uniform(kPhibar, 551); }
}  // namespace

TEST_CASE("running_cost closed form") {
    CHECK(running_cost(kBase, 0.0, 3.0) == doctest::Approx(0.0));
    double t0 = 10.0 * std::log(11.0);
    CHECK(running_cost(kBase, t0, 0.0) == doctest::Approx(t0 - 100.0).epsilon(1e-13));
    CHECK(running_cost(kBase, t0, 0.0) == doctest::Approx(-76.021).epsilon(2e-5));
    double direct = 1.0 + 110.0 * std::expm1(-0.1);
    CHECK(running_cost(kBase, 1.0, 0.0) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("first_crossing_time") {
    CHECK(first_crossing_time(kBase, 10.0) == 0.0);
    CHECK(first_crossing_time(kBase, 25.0) == 0.0);
    CHECK(first_crossing_time(kBase, 0.0) == doctest::Approx(23.978952727983707).epsilon(1e-13));
    double ts = first_crossing_time(kBase, 3.0);
    CHECK(ts > 0.0);
    CHECK(drift_flow(kBase, ts, 3.0) == doctest::Approx(kBase.drift_level()).epsilon(1e-12));
}

TEST_CASE("planning_horizon") {
    CHECK(planning_horizon(kBase) == doctest::Approx(210.0).epsilon(1e-14));
    ModelParams unit{1.0, 1.0, 1.0, 0.0, 1.0};
    CHECK(planning_horizon(unit) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("action value is nonnegative beyond the horizon") {
    GaussHermite quad(32);
    ValueTable w = ValueTable::constant(kPhibar, 101, -1.0 / kBase.c);
    double horizon = planning_horizon(kBase);
    for (double t : {horizon, horizon + 5.0, horizon + 50.0}) {
        for (double phi : {0.0, 5.0, 30.0}) CHECK(action_value(w, kBase, quad, t, phi) >= 0.0);
    }
}

TEST_CASE("grid_sizes formula and monotonicity") {
    double lip = planning_horizon(kBase);
    GridSizes a = grid_sizes(kBase, 0.1, lip, 55.0);
    GridSizes b = grid_sizes(kBase, 0.05, lip, 55.0);
    CHECK(b.time_steps >= a.time_steps);
    CHECK(b.phi_steps >= a.phi_steps);
    GridSizes c = grid_sizes(kBase, 0.1, 2.0 * lip, 55.0);
    CHECK(c.time_steps >= a.time_steps);
    CHECK(c.phi_steps >= a.phi_steps);
    // spot: phi_steps = ceil(lip / eps)
    CHECK(a.phi_steps == static_cast<std::uint64_t>(std::ceil(lip / 0.1)));
}

TEST_CASE("continuation expectation of constants") {
    GaussHermite quad(64);
    ValueTable w3 = ValueTable::constant(kPhibar, 101, -3.0);
    // a constant table still reads 0 beyond the threshold, so mask that by
    // checking at small t where the jump stays inside
    double v = continuation_expectation(w3, kBase, quad, 1e-4, 1.0);
    CHECK(v == doctest::Approx(-3.0).epsilon(1e-9));
    ValueTable w0 = zero_table();
    CHECK(continuation_expectation(w0, kBase, quad, 1.0, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("continuation expectation stays within the table range") {
    GaussHermite quad(64);
    ValueTable w = ValueTable::uniform(kPhibar, 301);
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = pure_stopping_value(kBase, w.grid[i]);
    for (double t : {0.1, 1.0, 10.0, 100.0}) {
        for (double phi : {0.0, 3.0, 20.0, 50.0}) {
            double v = continuation_expectation(w, kBase, quad, t, phi);
            CHECK(v >= w.min_value() - 1e-12);
            CHECK(v <= 0.0 + 1e-12);
        }
    }
}

TEST_CASE("continuation expectation against a Monte Carlo oracle") {
    GaussHermite quad(64);
    const double c0 = 12.0;
    ValueTable w = ValueTable::uniform(400.0, 40001);
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = std::min(w.grid[i], c0) - c0;
    const double t = 1.0, phi = 2.0;
    double got = continuation_expectation(w, kBase, quad, t, phi);
    // oracle builds the posterior jump from the raw formula: affine scale plus
    // a Gauss-Kronrod integral, fed with library-independent normals
    auto jump_raw = [&](double z) {
        double beta = kBase.lambda + kBase.alpha * z / std::sqrt(t);
        double gam = 0.5 * kBase.alpha * kBase.alpha / t;
        double mass = oracle::gk15(
            [&](double u) { return kBase.lambda * std::exp(beta * u - gam * u * u); }, 0.0, t,
            1e-12);
        return std::exp(kBase.alpha * z * std::sqrt(t) +
                        (kBase.lambda - 0.5 * kBase.alpha * kBase.alpha) * t) *
                   phi +
               mass;
    };
    auto ms = oracle::mc_gauss([&](double z) { return w(jump_raw(z)); }, 1000000, 20240901);
    CHECK(std::fabs(got - ms.mean) <= 3.0 * ms.se);
}

TEST_CASE("action value at zero is exactly zero") {
    GaussHermite quad(16);
    ValueTable w = ValueTable::constant(kPhibar, 51, -37.0);
    CHECK(action_value(w, kBase, quad, 0.0, 0.0) == 0.0);
    CHECK(action_value(w, kBase, quad, 0.0, 42.0) == 0.0);
}

TEST_CASE("action value with zero continuation is the running cost") {
    GaussHermite quad(16);
    ValueTable w0 = zero_table();
    for (double t : {0.5, 3.0, 20.0})
        for (double phi : {0.0, 2.0, 8.0})
            CHECK(action_value(w0, kBase, quad, t, phi) ==
                  doctest::Approx(running_cost(kBase, t, phi)).epsilon(1e-13));
}

TEST_CASE("best_action with zero continuation reproduces the analytic stop") {
    GaussHermite quad(64);
    ValueTable w0 = zero_table();
    auto tg = make_time_grid(planning_horizon(kBase), 2101);

    ActionChoice at0 = best_action(w0, kBase, quad, tg, 0.0);
    CHECK(at0.value == doctest::Approx(-76.021).epsilon(2e-5));
    CHECK(std::fabs(at0.time - 23.979) <= 0.11);  // within grid resolution

    ActionChoice at_level = best_action(w0, kBase, quad, tg, kBase.drift_level());
    CHECK(at_level.value == 0.0);
    CHECK(at_level.time == 0.0);

    ActionChoice beyond = best_action(w0, kBase, quad, tg, kPhibar + 1.0);
    CHECK(beyond.value == 0.0);
    CHECK(beyond.time == 0.0);
}

TEST_CASE("best_action value is a true grid minimum and bounded") {
    GaussHermite quad(64);
    auto tg = make_time_grid(planning_horizon(kBase), 301);
    ValueTable w = ValueTable::uniform(kPhibar, 151);
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = pure_stopping_value(kBase, w.grid[i]);
    for (double phi : {0.0, 1.0, 7.0, 30.0}) {
        ActionChoice ch = best_action(w, kBase, quad, tg, phi);
        for (double t : tg) CHECK(ch.value <= action_value(w, kBase, quad, t, phi) + 1e-12);
        CHECK(ch.value >= -1.0 / kBase.c - 1e-12);
        CHECK(ch.value <= 0.0);
    }
}

TEST_CASE("operator monotonicity and stability") {
    GaussHermite quad(32);
    auto tg = make_time_grid(planning_horizon(kBase), 301);
    ValueTable w1 = ValueTable::uniform(kPhibar, 151);
    for (std::size_t i = 0; i < w1.size(); ++i)
        w1.values[i] = pure_stopping_value(kBase, w1.grid[i]);
    ValueTable w2 = w1;
    const double eps = 0.25;
    for (std::size_t i = 0; i < w2.size(); ++i)
        w2.values[i] = std::min(0.0, w2.values[i] + eps);  // w2 >= w1, ||w1 - w2|| <= eps
    for (double phi : {0.0, 2.0, 11.0, 44.0}) {
        ActionChoice a = best_action(w1, kBase, quad, tg, phi);
        ActionChoice b = best_action(w2, kBase, quad, tg, phi);
        CHECK(a.value <= b.value + 1e-12);          // monotone
        CHECK(std::fabs(a.value - b.value) <= eps);  // stable
    }
}

TEST_CASE("best_action output is nondecreasing and midpoint-concave in phi") {
    GaussHermite quad(64);
    auto tg = make_time_grid(planning_horizon(kBase), 701);
    ValueTable w = ValueTable::uniform(kPhibar, 301);
    for (std::size_t i = 0; i < w.size(); ++i) w.values[i] = pure_stopping_value(kBase, w.grid[i]);
    std::vector<double> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        out[i] = best_action(w, kBase, quad, tg, w.grid[i]).value;
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i] >= out[i - 1] - 1e-9);
    for (std::size_t i = 1; i + 1 < out.size(); ++i)
        CHECK(out[i] >= 0.5 * (out[i - 1] + out[i + 1]) - 1e-6);
}
