#include <doctest.h>

#include <cmath>
#include <map>

#include "qdet/continuous.hpp"
#include "qdet/lump.hpp"

using namespace qdet;

namespace {
const ModelParams kBase{0.1, 0.01, 1.0, 0.0, 1.0};

LumpOptions fast_opts() {
    LumpOptions o;
    o.time_steps = 2101;
    o.phi_steps = 551;
    o.quad_order = 64;
    return o;
}
}  // namespace

TEST_CASE("pure stopping value") {
    CHECK(pure_stopping_value(kBase, kBase.drift_level()) == doctest::Approx(0.0));
    CHECK(pure_stopping_value(kBase, 30.0) == doctest::Approx(0.0));
    CHECK(pure_stopping_value(kBase, 0.0) == doctest::Approx(-76.021).epsilon(2e-5));
    // operator-vs-closed-form cross check at phi = 5
    GaussHermite quad(64);
    ValueTable zero = ValueTable::uniform(56.865, 551);
    auto tg = make_time_grid(planning_horizon(kBase), 2101);
    ActionChoice ch = best_action(zero, kBase, quad, tg, 5.0);
    CHECK(pure_stopping_value(kBase, 5.0) == doctest::Approx(ch.value).epsilon(1e-5));
}

TEST_CASE("solve_lump with zero rights returns only the analytic table") {
    LumpSolution sol = solve_lump(kBase, 0, fast_opts());
    REQUIRE(sol.tables.size() == 1);
    CHECK(sol.tables[0].values.front() == doctest::Approx(-76.021).epsilon(2e-5));
    // the n = 0 barrier is the horizontal line at lambda/c
    const LumpBoundary& b = sol.boundaries[0];
    for (std::size_t j = 0; j < sol.tables[0].size(); ++j) {
        double phi = sol.tables[0].grid[j];
        if (phi < kBase.drift_level() - 1e-9)
            CHECK(b.barrier_phi[j] == doctest::Approx(kBase.drift_level()).epsilon(1e-10));
        else
            CHECK(b.barrier_phi[j] == doctest::Approx(phi).epsilon(1e-12));
    }
}

TEST_CASE("solve_lump reproduces the first published values") {
    LumpSolution sol = solve_lump(kBase, 2, fast_opts());
    CHECK(sol.tables[1].values.front() == doctest::Approx(-82.586).epsilon(6e-4));
    CHECK(sol.tables[2].values.front() == doctest::Approx(-85.755).epsilon(6e-4));
}

TEST_CASE("solve_lump monotone chain and bounds") {
    LumpSolution sol = solve_lump(kBase, 2, fast_opts());
    for (std::size_t n = 0; n + 1 < sol.tables.size(); ++n) {
        for (std::size_t j = 0; j < sol.tables[n].size(); ++j) {
            CHECK(sol.tables[n + 1].values[j] <= sol.tables[n].values[j] + 1e-9);
            CHECK(sol.tables[n].values[j] <= 1e-12);
            CHECK(sol.tables[n].values[j] >= -1.0 / kBase.c - 1e-9);
        }
    }
    // boundary odds never exceed the truncation threshold
    for (const auto& b : sol.boundaries)
        for (double bp : b.barrier_phi) CHECK(bp <= sol.diagnostics.phibar + 1e-9);
}

TEST_CASE("solve_lump thread-count invariance") {
    LumpOptions o1 = fast_opts();
    o1.time_steps = 701;
    o1.phi_steps = 201;
    o1.threads = 1;
    LumpOptions o4 = o1;
    o4.threads = 4;
    LumpSolution a = solve_lump(kBase, 1, o1);
    LumpSolution b = solve_lump(kBase, 1, o4);
    for (std::size_t j = 0; j < a.tables[1].size(); ++j) {
        CHECK(a.tables[1].values[j] == b.tables[1].values[j]);
        CHECK(a.boundaries[1].action_time[j] == b.boundaries[1].action_time[j]);
    }
}

TEST_CASE("values beyond the free boundary stay at zero on extended grids") {
    double bar = stopping_threshold(kBase);
    LumpOptions o = fast_opts();
    o.phibar = bar * 1.3;
    o.phi_steps = 717;
    LumpSolution sol = solve_lump(kBase, 1, o);
    for (std::size_t j = 0; j < sol.tables[1].size(); ++j) {
        if (sol.tables[1].grid[j] >= bar + 1e-9) {
            CHECK(sol.tables[1].values[j] >= -1e-9);
            CHECK(sol.tables[1].values[j] <= 0.0);
        }
    }
}

TEST_CASE("observation barriers move with the number of rights") {
    LumpSolution sol = solve_lump(kBase, 2, fast_opts());
    // late-time barrier: odds at the largest action times, nonincreasing in n
    auto barrier_stats = [&](int n, double t_lo, double t_hi) {
        const LumpBoundary& b = sol.boundaries[static_cast<std::size_t>(n)];
        double acc = 0.0;
        int cnt = 0;
        for (std::size_t j = 0; j < b.barrier_time.size(); ++j) {
            if (b.barrier_time[j] >= t_lo && b.barrier_time[j] <= t_hi) {
                acc += b.barrier_phi[j];
                ++cnt;
            }
        }
        REQUIRE(cnt > 0);
        return acc / cnt;
    };
    double late1 = barrier_stats(1, 10.0, 22.0);
    double late2 = barrier_stats(2, 10.0, 22.0);
    CHECK(late2 <= late1 + 1e-6);
    CHECK(late1 <= kBase.drift_level() + 1e-6);  // below the pure-stopping line
    // early-time barrier: maximal odds still waiting, nondecreasing in n
    auto early_max = [&](int n) {
        const LumpBoundary& b = sol.boundaries[static_cast<std::size_t>(n)];
        double mx = 0.0;
        for (std::size_t j = 0; j < b.barrier_time.size(); ++j)
            if (b.action_time[j] > 1e-9) mx = std::max(mx, sol.tables[n].grid[j]);
        return mx;
    };
    CHECK(early_max(2) >= early_max(1) - 1e-9);
    CHECK(early_max(1) >= kBase.drift_level());
}

TEST_CASE("operator evaluation count stays under the published envelope") {
    // count actual action-value evaluations and compare with C N^6 / eps^3,
    // the constant fitted on the N = 1 run
    const double eps = 0.5;
    LumpOptions o = fast_opts();
    o.time_steps = 301;
    o.phi_steps = 151;
    o.epsilon = eps;
    std::map<int, double> evals;
    for (int n : {1, 2, 3}) evals[n] = static_cast<double>(solve_lump(kBase, n, o).diagnostics.action_value_evals);
    double fitted = evals[1] * (eps * eps * eps);
    for (int n : {2, 3}) {
        double envelope = fitted * std::pow(n, 6) / (eps * eps * eps);
        CHECK(evals[n] <= envelope * (1.0 + 1e-12));
    }
}

TEST_CASE("fixed schedule with a worthless late observation matches v0") {
    LumpOptions o = fast_opts();
    FixedScheduleSolution w = fixed_schedule_value(FixedSchedule::repeated(150.0, 1), kBase, o);
    for (std::size_t j = 0; j < w.value().size(); ++j) {
        double v0 = pure_stopping_value(kBase, w.value().grid[j]);
        CHECK(w.value().values[j] == doctest::Approx(v0).epsilon(1e-9));
    }
}

TEST_CASE("adaptive single observation dominates fixed schedules and curves cross") {
    LumpOptions o = fast_opts();
    LumpSolution adaptive = solve_lump(kBase, 1, o);
    o.phibar = adaptive.diagnostics.phibar;
    std::vector<FixedScheduleSolution> fixed;
    for (double gap : {2.0, 5.0, 10.0})
        fixed.push_back(fixed_schedule_value(FixedSchedule::repeated(gap, 1), kBase, o));
    const ValueTable& v1 = adaptive.tables[1];
    for (const auto& f : fixed)
        for (std::size_t j = 0; j < v1.size(); ++j)
            CHECK(v1.values[j] <= f.value().values[j] + 1e-9);
    auto crossings = [&](const FixedScheduleSolution& a, const FixedScheduleSolution& b) {
        int sign = 0, changes = 0;
        for (std::size_t j = 0; j < a.value().size(); ++j) {
            double d = a.value().values[j] - b.value().values[j];
            if (std::fabs(d) < 1e-9) continue;
            int s = d > 0 ? 1 : -1;
            if (sign != 0 && s != sign) ++changes;
            sign = s;
        }
        return changes;
    };
    CHECK(crossings(fixed[0], fixed[1]) >= 1);
    CHECK(crossings(fixed[0], fixed[2]) >= 1);
    CHECK(crossings(fixed[1], fixed[2]) >= 1);
}

TEST_CASE("worst-case sizing path is wired in") {
    LumpOptions o;
    o.time_steps = 0;  // request sizing from the published bound (capped)
    o.phi_steps = 0;
    o.epsilon = 18.0;  // keep the resulting grids small in a unit test
    LumpSolution sol = solve_lump(kBase, 1, o);
    CHECK(sol.diagnostics.time_steps >= 101);
    CHECK(sol.diagnostics.phi_steps >= 101);
    CHECK(sol.tables[1].values.front() < sol.tables[0].values.front());
}
