#pragma once

#include <cmath>

namespace qdet {

// Disorder-model parameters. Time is in user units throughout; all other
// quantities are dimensionless.
struct ModelParams {
    double lambda = 0.1;  // disorder hazard rate (> 0)
    double c = 0.01;      // delay cost weight (> 0)
    double alpha = 1.0;   // post-disorder drift (!= 0)
    double p = 0.0;       // prior disorder mass at time zero, in [0, 1)
    double mu = 1.0;      // observation-right arrival rate (> 0, arrival problems only)

    // Throws ConfigError when an invariant fails. require_mu additionally
    // validates mu (only arrival problems use it).
    void validate(bool require_mu = false) const;

    double drift_level() const { return lambda / c; }  // flow level that ends waiting
};

// Deterministic odds flow between observations: e^{lambda t}(phi + 1) - 1.
// Negative t inverts the flow and requires phi >= e^{lambda |t|} - 1, so the
// rebased odds stay nonnegative (feasibility in the elapsed-time state space).
double drift_flow(const ModelParams& m, double t, double phi);

// Membership of (y, phi) in the feasible region {phi >= e^{lambda y} - 1},
// with a small slack for grid round-off.
bool feasible_state(const ModelParams& m, double y, double phi, double slack = 1e-12);

// Posterior odds after observing a standardized increment z a time dt after
// the previous observation when the odds were phi:
//   j(dt, phi, z) = scale * phi + mass,
// scale = exp{alpha z sqrt(dt) + (lambda - alpha^2/2) dt},
// mass  = int_0^dt lambda exp{(lambda + alpha z / sqrt(dt)) u - alpha^2 u^2 / (2 dt)} du.
double jump_update(const ModelParams& m, double dt, double phi, double z);

// The two pieces of the jump separately; solvers cache them per (dt, z)
// because the update is affine in phi.
double jump_scale(const ModelParams& m, double dt, double z);
double jump_mass(const ModelParams& m, double dt, double z);

// phi_0 = p / (1 - p).
double odds_from_prior(double p);

// Minimum Bayes risk from a value-function level: 1 - p + (1 - p) c v.
double bayes_risk_from_value(const ModelParams& m, double p, double v);

}  // namespace qdet
