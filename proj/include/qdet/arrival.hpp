#pragma once

#include <cstdint>
#include <vector>

#include "qdet/lump.hpp"
#include "qdet/model.hpp"
#include "qdet/quadrature.hpp"
#include "qdet/value_table.hpp"

namespace qdet {

// Value function on the feasible region {(y, phi): phi >= e^{lambda y} - 1}.
// Stored on a rectangular (y, phi) grid with infeasible cells masked; cells
// outside the mask are padded with the boundary-flow value so interpolation
// near the curved edge stays well defined. Evaluation follows flow lines:
// the pair (y, phi) is rebased to the odds at the last observation, which is
// constant along the deterministic flow.
struct FeasibleTable {
    double lambda = 0.0;
    double phibar = 0.0;
    std::vector<double> y_grid;
    std::vector<double> phi_grid;
    std::vector<double> values;       // y-major
    std::vector<double> action_time;  // remaining time until the optimal action
    std::vector<std::uint8_t> feasible_mask;

    std::size_t index(std::size_t yi, std::size_t pj) const { return yi * phi_grid.size() + pj; }
    bool feasible(double y, double phi, double slack = 1e-12) const;

    double eval(double y, double phi) const;
    double eval_action_time(double y, double phi) const;
};

struct ThresholdViolation {
    int rights_received = 0;
    int rights_spent = 0;
    double phi = 0.0;
    double time_at = 0.0;
    double magnitude = 0.0;
};

enum class ActionKind : char { Stop = 's', Observe = 'o' };

// One lattice node (j received, k spent).
struct ArrivalCell {
    int rights_received = 0;
    int rights_spent = 0;
    ActionKind kind = ActionKind::Observe;
    ValueTable slice;                 // v(0, phi) on the phi grid
    std::vector<double> action_time0; // first optimal action time at y = 0
    FeasibleTable table;              // materialized (y, phi) sheet
};

struct ArrivalDiagnostics {
    int time_steps = 0;
    int phi_steps = 0;
    int flow_steps = 0;
    int quad_order = 0;
    double phibar = 0.0;
    double horizon = 0.0;
    std::uint64_t action_value_evals = 0;
    std::uint64_t violation_count = 0;
};

struct ArrivalLattice {
    ModelParams params;
    int total_rights = 0;
    std::vector<ArrivalCell> cells;  // index j(j+1)/2 + k, 0 <= k <= j <= n
    std::vector<ThresholdViolation> violations;  // capped sample of worst offenders
    ArrivalDiagnostics diagnostics;

    const ArrivalCell& cell(int received, int spent) const;
    ArrivalCell& cell(int received, int spent);
};

struct ArrivalOptions {
    int time_steps = 2101;
    int phi_steps = 551;
    int quad_order = 64;
    double phibar = 0.0;  // 0 -> from the continuous reference solve
    int threads = 0;
    bool scan_threshold_rule = true;
    TableInterp interp = TableInterp::PiecewiseLinear;
    double exp_tail_mass = 1e-10;  // truncation of the arrival-time integral
};

// Action-time grid bound: the lump horizon extended so the arrival-rate
// drift comparison also closes.
double arrival_time_horizon(const ModelParams& m);

// Expectation over the post-observation jump, evaluated on the y = 0 slice:
// the jump resets elapsed time.
double arrival_expectation(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad,
                           double t, double phi);

// No rights in hand: wait for the next arrival, stopping at t if it comes
// first. Expectation over the Exp(mu) arrival time.
double wait_value(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad, double t,
                  double y, double phi);
ActionChoice wait_value_min(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad,
                            const std::vector<double>& time_grid, double y, double phi);

// Rights stockpiled: observe at t (continuation w1) unless an arrival comes
// first (continuation w2).
double hold_value(const FeasibleTable& w1, const FeasibleTable& w2, const ModelParams& m,
                  const GaussHermite& quad, double t, double y, double phi);
ActionChoice hold_value_min(const FeasibleTable& w1, const FeasibleTable& w2, const ModelParams& m,
                            const GaussHermite& quad, const std::vector<double>& time_grid,
                            double y, double phi);

// All rights received: the lump operator generalized to nonzero elapsed time.
double exhausted_value(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad,
                       double t, double y, double phi);
ActionChoice exhausted_value_min(const FeasibleTable& w, const ModelParams& m,
                                 const GaussHermite& quad, const std::vector<double>& time_grid,
                                 double y, double phi);

ArrivalLattice solve_arrival(const ModelParams& m, int total_rights,
                             const ArrivalOptions& opts = {});

// Uniform gap between the n-arrival and infinite-arrival problems:
// (1/c) (mu/(mu+lambda))^{n+1}.
double infinite_horizon_gap(const ModelParams& m, int n);

}  // namespace qdet
