#pragma once

#include <cstdint>
#include <vector>

#include "qdet/model.hpp"
#include "qdet/quadrature.hpp"
#include "qdet/value_table.hpp"

namespace qdet {

// Result of minimizing an action-value curve over a time grid: the minimal
// value and the smallest grid time attaining it (ties broken within 1e-12).
struct ActionChoice {
    double value = 0.0;
    double time = 0.0;
};

inline constexpr double kArgminTieTol = 1e-12;

// Discounted running cost of waiting t from odds phi:
//   int_0^t e^{-lambda u}(flow(u, phi) - lambda/c) du
//   = (phi + 1) t + (1/lambda)(1 + lambda/c)(e^{-lambda t} - 1).
double running_cost(const ModelParams& m, double t, double phi);

// First time the deterministic flow reaches lambda/c, clamped at zero:
//   (1/lambda) log((c + lambda)/(c (phi + 1))) v 0.
double first_crossing_time(const ModelParams& m, double phi);

// Upper bound on optimal action times: (1/lambda)(1 + lambda/c) + 1/c.
double planning_horizon(const ModelParams& m);

// Value with zero observation rights: running_cost at the first crossing.
double pure_stopping_value(const ModelParams& m, double phi);

// Worst-case grid sizes for an epsilon-accurate operator application, from
// the Hoelder modulus of the action value in t and the Lipschitz bound in phi.
struct GridSizes {
    std::uint64_t time_steps = 0;
    std::uint64_t phi_steps = 0;
};
GridSizes grid_sizes(const ModelParams& m, double epsilon, double lipschitz, double phibar);

// Expectation of w after one observation taken t after the odds were phi
// (Gaussian quadrature over the standardized increment). Requires t > 0.
double continuation_expectation(const ValueTable& w, const ModelParams& m,
                                const GaussHermite& quad, double t, double phi);

// Cost of waiting t and then observing, with continuation value w:
//   running_cost(t, phi) + 1_{t>0} e^{-lambda t} K w(t, phi).
// At t = 0 this is exactly 0 (stop immediately).
double action_value(const ValueTable& w, const ModelParams& m, const GaussHermite& quad,
                    double t, double phi);

// Minimize the action value over a time grid; first minimizer within tie tol.
ActionChoice best_action(const ValueTable& w, const ModelParams& m, const GaussHermite& quad,
                         const std::vector<double>& time_grid, double phi);

std::vector<double> make_time_grid(double t_max, int steps);

struct LumpOptions {
    double epsilon = 0.1;   // total accuracy budget, split across operator steps
    int time_steps = 2101;  // 0 -> worst-case count from grid_sizes (capped)
    int phi_steps = 551;    // 0 -> worst-case count from grid_sizes (capped)
    int quad_order = 64;
    double phibar = 0.0;  // 0 -> from the continuous reference solve
    int threads = 0;
    TableInterp interp = TableInterp::PiecewiseLinear;
};

struct LumpBoundary {
    std::vector<double> action_time;  // per grid phi: first optimal waiting time
    std::vector<double> barrier_time;
    std::vector<double> barrier_phi;  // flow(action_time, phi)
};

struct LumpDiagnostics {
    std::uint64_t action_value_evals = 0;
    int time_steps = 0;
    int phi_steps = 0;
    int quad_order = 0;
    double phibar = 0.0;
    double horizon = 0.0;
    double epsilon = 0.0;
};

// Tables and observation boundaries for v_0 ... v_N.
struct LumpSolution {
    ModelParams params;
    std::vector<ValueTable> tables;
    std::vector<LumpBoundary> boundaries;
    LumpDiagnostics diagnostics;
};

LumpSolution solve_lump(const ModelParams& m, int n_max, const LumpOptions& opts = {});

// Fixed observation schedules (Dayanik-style exogenous grids).
struct FixedSchedule {
    std::vector<double> gaps;  // inter-observation gaps in forward time order

    static FixedSchedule repeated(double gap, int count);
    void validate() const;
};

// Stage k holds the value with k observations remaining; stage 0 is the pure
// stopping value. Mid-interval stopping at the flow crossing is allowed.
struct FixedScheduleSolution {
    ModelParams params;
    FixedSchedule schedule;
    std::vector<ValueTable> stages;
    int quad_order = 0;

    const ValueTable& value() const { return stages.back(); }
};

FixedScheduleSolution fixed_schedule_value(const FixedSchedule& schedule, const ModelParams& m,
                                           const LumpOptions& opts = {});

}  // namespace qdet
