#pragma once

#include <cstddef>

#include "qdet/model.hpp"
#include "qdet/value_table.hpp"

namespace qdet {

struct ContinuousOptions {
    double phi_step = 0.1;   // output table resolution
    double rel_tol = 1e-9;   // integrator relative tolerance
    double abs_tol = 1e-12;  // integrator absolute tolerance
    double phi_cap = 4000.0; // give up if no free boundary below this
    TableInterp interp = TableInterp::PiecewiseLinear;
};

struct OdeStats {
    int shooting_iterations = 0;     // boundary refinement bisections
    double boundary_residual = 0.0;  // |value - smooth-fit combination| at phibar
    double flow_defect = 0.0;        // sup-norm defect of the table against the ODE flow
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

// Continuous-observation reference: value function and smooth-fit threshold
// of the stationary free-boundary problem
//   (alpha^2/2) phi^2 u'' + lambda (1+phi) u' - lambda u + (phi - lambda/c) = 0
// with u(phibar) = u'(phibar) = 0 and regularity at the degenerate origin.
struct ContinuousSolution {
    ModelParams params;
    ValueTable table;
    double phibar = 0.0;
    OdeStats stats;
};

ContinuousSolution solve_continuous(const ModelParams& m, const ContinuousOptions& opts = {});

// The free boundary alone; memoized per parameter set.
double stopping_threshold(const ModelParams& m, const ContinuousOptions& opts = {});

}  // namespace qdet
