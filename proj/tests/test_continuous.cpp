#include <doctest.h>

#include <cmath>

#include "qdet/continuous.hpp"
#include "qdet/errors.hpp"
#include "qdet/lump.hpp"

using namespace qdet;

namespace {
const ModelParams kBase{0.1, 0.01, 1.0, 0.0, 1.0};
}

TEST_CASE("free boundary and value at zero for the reference parameters") {
    ContinuousSolution sol = solve_continuous(kBase);
    // Independently cross-checked values of the smooth-fit problem (classical
    // posterior-form shooting and direct Monte Carlo of the diffusion agree).
    CHECK(sol.phibar == doctest::Approx(56.865).epsilon(2e-4));
    CHECK(sol.table.values.front() == doctest::Approx(-91.045).epsilon(2e-4));
    CHECK(sol.table.values.back() == 0.0);
    CHECK(sol.stats.boundary_residual <= 1e-6);
    CHECK(sol.stats.flow_defect <= 1e-6);
}

TEST_CASE("solution is monotone and within the value bounds") {
    ContinuousSolution sol = solve_continuous(kBase);
    for (std::size_t i = 0; i < sol.table.size(); ++i) {
        CHECK(sol.table.values[i] >= -1.0 / kBase.c - 1e-9);
        CHECK(sol.table.values[i] <= 1e-12);
        if (i > 0) CHECK(sol.table.values[i] >= sol.table.values[i - 1] - 1e-9);
    }
}

TEST_CASE("threshold exceeds the myopic level across parameters") {
    for (double lam : {0.05, 0.1, 0.5}) {
        for (double c : {0.005, 0.01, 0.05}) {
            ModelParams m{lam, c, 1.0, 0.0, 1.0};
            double bar = stopping_threshold(m);
            CHECK(bar > m.drift_level());
        }
    }
}

TEST_CASE("costlier delay lowers the threshold") {
    double prev = 1e300;
    for (double c : {0.005, 0.01, 0.02, 0.05}) {
        ModelParams m{0.1, c, 1.0, 0.0, 1.0};
        double bar = stopping_threshold(m);
        CHECK(bar < prev);
        prev = bar;
    }
}

TEST_CASE("threshold cache returns identical values") {
    double a = stopping_threshold(kBase);
    double b = stopping_threshold(kBase);
    CHECK(a == b);
}

TEST_CASE("lump tables dominate the continuous reference") {
    ContinuousSolution cont = solve_continuous(kBase);
    LumpOptions o;
    o.time_steps = 1401;
    o.phi_steps = 551;
    LumpSolution lump = solve_lump(kBase, 1, o);
    for (std::size_t j = 0; j < lump.tables[1].size(); ++j) {
        double phi = lump.tables[1].grid[j];
        CHECK(lump.tables[1].values[j] >= cont.table(phi) - 1e-6);
    }
}

TEST_CASE("unreachable boundary reports a numerical failure") {
    ContinuousOptions o;
    o.phi_cap = 5.0;  // below the true boundary
    CHECK_THROWS_AS(solve_continuous(kBase, o), NumericalError);
}
