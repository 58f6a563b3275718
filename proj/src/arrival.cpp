#include "qdet/arrival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "qdet/continuous.hpp"
#include "qdet/errors.hpp"
#include "qdet/parallel.hpp"

namespace qdet {

namespace {

constexpr double kFeasSlack = 1e-12;

double rebased_odds(double lambda, double y, double phi) {
    double p0 = (phi + 1.0) * std::exp(-lambda * y) - 1.0;
    return p0 < 0.0 ? 0.0 : p0;
}

// Running cost discounted by disorder and arrival hazards:
//   int_0^t e^{-(lambda+mu) r} (flow(r, phi) - lambda/c) dr.
double running_cost_with_arrivals(const ModelParams& m, double t, double phi) {
    double a = m.lambda + m.mu;
    return -(phi + 1.0) * std::expm1(-m.mu * t) / m.mu +
           (1.0 + m.lambda / m.c) * std::expm1(-a * t) / a;
}

}  // namespace

bool FeasibleTable::feasible(double y, double phi, double slack) const {
    if (y < 0.0 || phi < 0.0) return false;
    return phi >= std::expm1(lambda * y) - slack * (1.0 + phi);
}

namespace {

double row_interp(const std::vector<double>& phi_grid, const double* row, double phibar,
                  double x) {
    if (x >= phibar) return 0.0;
    std::size_t n = phi_grid.size();
    if (x <= phi_grid.front()) return row[0];
    double step = (phi_grid.back() - phi_grid.front()) / static_cast<double>(n - 1);
    std::size_t i = static_cast<std::size_t>((x - phi_grid.front()) / step);
    if (i >= n - 1) i = n - 2;
    if (x < phi_grid[i] && i > 0) --i;
    else if (i + 2 < n && x >= phi_grid[i + 1]) ++i;
    double w = (x - phi_grid[i]) / (phi_grid[i + 1] - phi_grid[i]);
    return row[i] + w * (row[i + 1] - row[i]);
}

double flow_aligned_eval(const FeasibleTable& t, const std::vector<double>& data, double y,
                         double phi) {
    if (phi >= t.phibar) return 0.0;
    if (!t.feasible(y, phi, kFeasSlack))
        throw std::domain_error("FeasibleTable: state outside the feasible region");
    const std::size_t np = t.phi_grid.size();
    if (y <= t.y_grid.front()) return row_interp(t.phi_grid, data.data(), t.phibar, phi);
    double p0 = rebased_odds(t.lambda, y, phi);
    if (y >= t.y_grid.back()) {
        // beyond the sheet every feasible odds level exceeds phibar
        return 0.0;
    }
    double ystep = (t.y_grid.back() - t.y_grid.front()) / static_cast<double>(t.y_grid.size() - 1);
    std::size_t yi = static_cast<std::size_t>((y - t.y_grid.front()) / ystep);
    if (yi >= t.y_grid.size() - 1) yi = t.y_grid.size() - 2;
    auto row_value = [&](std::size_t row) {
        double phi_row = (p0 + 1.0) * std::exp(t.lambda * t.y_grid[row]) - 1.0;
        if (phi_row >= t.phibar) return 0.0;
        return row_interp(t.phi_grid, data.data() + row * np, t.phibar, phi_row);
    };
    double v0 = row_value(yi), v1 = row_value(yi + 1);
    double w = (y - t.y_grid[yi]) / (t.y_grid[yi + 1] - t.y_grid[yi]);
    return v0 + w * (v1 - v0);
}

}  // namespace

double FeasibleTable::eval(double y, double phi) const {
    return flow_aligned_eval(*this, values, y, phi);
}

double FeasibleTable::eval_action_time(double y, double phi) const {
    return flow_aligned_eval(*this, action_time, y, phi);
}

const ArrivalCell& ArrivalLattice::cell(int received, int spent) const {
    return cells.at(static_cast<std::size_t>(received) * (received + 1) / 2 + spent);
}
ArrivalCell& ArrivalLattice::cell(int received, int spent) {
    return cells.at(static_cast<std::size_t>(received) * (received + 1) / 2 + spent);
}

double arrival_time_horizon(const ModelParams& m) {
    double drift_bound = std::log1p((m.lambda + m.mu) / m.c) / m.lambda;
    return std::max(planning_horizon(m), drift_bound);
}

double arrival_expectation(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad,
                           double t, double phi) {
    if (t < 0.0) throw std::domain_error("arrival_expectation: t must be >= 0");
    if (t == 0.0) return w.eval(0.0, phi);
    double acc = 0.0;
    for (int q = 0; q < quad.order; ++q) {
        double x = jump_scale(m, t, quad.nodes[q]) * phi + jump_mass(m, t, quad.nodes[q]);
        acc += quad.weights[q] * w.eval(0.0, x);
    }
    return acc;
}

namespace {

// Composite Gauss-Legendre for int_0^{upper} mu e^{-(lambda+mu) u} w(y+u, flow(u,phi)) du,
// truncated at the requested Exp(mu) tail mass.
double arrival_term(const FeasibleTable& w, const ModelParams& m, double t, double y, double phi,
                    double tail_mass) {
    static const GaussLegendre gl(16);
    double upper = std::min(t, -std::log(tail_mass) / m.mu);
    if (!(upper > 0.0)) return 0.0;
    double h = std::min(0.25, 0.5 / m.mu);
    int panels = std::max(1, static_cast<int>(std::ceil(upper / h)));
    double a = m.lambda + m.mu;
    double acc = 0.0;
    for (int pnl = 0; pnl < panels; ++pnl) {
        double lo = upper * pnl / panels, hi = upper * (pnl + 1) / panels;
        acc += gl.integrate(
            [&](double u) {
                double fl = std::exp(m.lambda * u) * (phi + 1.0) - 1.0;
                return m.mu * std::exp(-a * u) * w.eval(y + u, fl);
            },
            lo, hi);
    }
    return acc;
}

void require_feasible(const ModelParams& m, double y, double phi, const char* who) {
    if (!feasible_state(m, y, phi, kFeasSlack))
        throw std::domain_error(std::string(who) + ": state outside the feasible region");
}

ActionChoice minimize_curve(const std::vector<double>& row, const std::vector<double>& tg) {
    double best = row[0];
    for (double v : row) best = std::min(best, v);
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] <= best + kArgminTieTol) return {best, tg[i]};
    return {best, tg.back()};
}

}  // namespace

double wait_value(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad, double t,
                  double y, double phi) {
    (void)quad;
    require_feasible(m, y, phi, "wait_value");
    if (t < 0.0) throw std::domain_error("wait_value: t must be >= 0");
    if (t == 0.0) return 0.0;
    return running_cost_with_arrivals(m, t, phi) + arrival_term(w, m, t, y, phi, 1e-10);
}

ActionChoice wait_value_min(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad,
                            const std::vector<double>& time_grid, double y, double phi) {
    std::vector<double> row(time_grid.size());
    for (std::size_t i = 0; i < time_grid.size(); ++i)
        row[i] = wait_value(w, m, quad, time_grid[i], y, phi);
    return minimize_curve(row, time_grid);
}

double hold_value(const FeasibleTable& w1, const FeasibleTable& w2, const ModelParams& m,
                  const GaussHermite& quad, double t, double y, double phi) {
    require_feasible(m, y, phi, "hold_value");
    if (t < 0.0) throw std::domain_error("hold_value: t must be >= 0");
    double p0 = rebased_odds(m.lambda, y, phi);
    double observe = arrival_expectation(w1, m, quad, y + t, p0);
    if (t == 0.0) return observe;
    double a = m.lambda + m.mu;
    return running_cost_with_arrivals(m, t, phi) + std::exp(-a * t) * observe +
           arrival_term(w2, m, t, y, phi, 1e-10);
}

ActionChoice hold_value_min(const FeasibleTable& w1, const FeasibleTable& w2, const ModelParams& m,
                            const GaussHermite& quad, const std::vector<double>& time_grid,
                            double y, double phi) {
    std::vector<double> row(time_grid.size());
    for (std::size_t i = 0; i < time_grid.size(); ++i)
        row[i] = hold_value(w1, w2, m, quad, time_grid[i], y, phi);
    return minimize_curve(row, time_grid);
}

double exhausted_value(const FeasibleTable& w, const ModelParams& m, const GaussHermite& quad,
                       double t, double y, double phi) {
    require_feasible(m, y, phi, "exhausted_value");
    if (t < 0.0) throw std::domain_error("exhausted_value: t must be >= 0");
    double p0 = rebased_odds(m.lambda, y, phi);
    double observe = arrival_expectation(w, m, quad, y + t, p0);
    if (t == 0.0) return observe;
    return running_cost(m, t, phi) + std::exp(-m.lambda * t) * observe;
}

ActionChoice exhausted_value_min(const FeasibleTable& w, const ModelParams& m,
                                 const GaussHermite& quad, const std::vector<double>& time_grid,
                                 double y, double phi) {
    std::vector<double> row(time_grid.size());
    for (std::size_t i = 0; i < time_grid.size(); ++i)
        row[i] = exhausted_value(w, m, quad, time_grid[i], y, phi);
    return minimize_curve(row, time_grid);
}

double infinite_horizon_gap(const ModelParams& m, int n) {
    if (n < 0) throw ConfigError("infinite_horizon_gap: n must be >= 0");
    return (1.0 / m.c) * std::pow(m.mu / (m.mu + m.lambda), n + 1);
}

// ---------------------------------------------------------------------------
// Lattice solver. All quantities are computed along flow lines: a state
// (y, phi) is indexed by (s = y, phi0 = rebased odds), which is constant
// along the deterministic flow, so the solver never interpolates across the
// curved feasible boundary.
// ---------------------------------------------------------------------------

namespace {

struct JumpCache {
    int nt = 0, nq = 0;
    std::vector<double> scale, mass;  // (nt-1) x nq, skipping t=0

    JumpCache(const ModelParams& m, const std::vector<double>& tg, const GaussHermite& quad)
        : nt(static_cast<int>(tg.size())), nq(quad.order) {
        scale.resize(static_cast<std::size_t>(nt - 1) * nq);
        mass.resize(static_cast<std::size_t>(nt - 1) * nq);
        for (int i = 1; i < nt; ++i)
            for (int q = 0; q < nq; ++q) {
                scale[static_cast<std::size_t>(i - 1) * nq + q] = jump_scale(m, tg[i], quad.nodes[q]);
                mass[static_cast<std::size_t>(i - 1) * nq + q] = jump_mass(m, tg[i], quad.nodes[q]);
            }
    }

    // E[slice(j(t_i, phi, Z))] for grid index i >= 1.
    double expectation(const ValueTable& slice, const GaussHermite& quad, int i, double phi) const {
        const double* sc = &scale[static_cast<std::size_t>(i - 1) * nq];
        const double* ms = &mass[static_cast<std::size_t>(i - 1) * nq];
        double acc = 0.0;
        for (int q = 0; q < nq; ++q) acc += quad.weights[q] * slice(sc[q] * phi + ms[q]);
        return acc;
    }
};

struct FlowRow {
    std::vector<double> value;       // V(s_i, phi_r): value on the flow line
    std::vector<double> cumulative;  // G(s_i, phi_r): mu int_0^{s_i} e^{-(l+m)u} V du
};

struct Workspace {
    const ModelParams& m;
    const ArrivalOptions& opts;
    double phibar;
    double horizon;
    std::vector<double> tg;
    std::vector<double> pg;
    GaussHermite quad;
    JumpCache jumps;
    std::vector<double> exp_lam;     // e^{lambda t_i}
    std::vector<double> dis_lam;     // e^{-lambda t_i}
    std::vector<double> dis_lam_mu;  // e^{-(lambda+mu) t_i}
    double dt;
    // segment kernels for piecewise-linear integrands
    double ka_mu, kb_mu;  // against e^{-(lambda+mu)(u-s)} over one step
    // lattice assembly
    std::uint64_t evals = 0;
    std::uint64_t violations = 0;
    std::vector<ThresholdViolation> violation_sample;
    std::mutex vio_mtx;

    Workspace(const ModelParams& mm, const ArrivalOptions& oo, double bar,
              const std::vector<double>& t_grid, const std::vector<double>& phi_grid)
        : m(mm), opts(oo), phibar(bar), horizon(t_grid.back()), tg(t_grid), pg(phi_grid),
          quad(oo.quad_order), jumps(mm, t_grid, quad) {
        dt = tg[1] - tg[0];
        exp_lam.resize(tg.size());
        dis_lam.resize(tg.size());
        dis_lam_mu.resize(tg.size());
        double a = m.lambda + m.mu;
        for (std::size_t i = 0; i < tg.size(); ++i) {
            exp_lam[i] = std::exp(m.lambda * tg[i]);
            dis_lam[i] = std::exp(-m.lambda * tg[i]);
            dis_lam_mu[i] = std::exp(-a * tg[i]);
        }
        ka_mu = -std::expm1(-a * dt) / a;
        kb_mu = (1.0 - (1.0 + a * dt) * std::exp(-a * dt)) / (a * a * dt);
    }

    std::size_t nt() const { return tg.size(); }
    std::size_t np() const { return pg.size(); }

    int grid_index(double t) const {
        int i = static_cast<int>(std::llround(t / dt));
        return std::clamp(i, 0, static_cast<int>(nt()) - 1);
    }

    void record_violations(int j, int k, const std::vector<double>& row, int argmin_idx,
                           double phi) {
        double worst = 0.0;
        int count = 0;
        for (std::size_t i = argmin_idx; i + 1 < row.size(); ++i) {
            double drop = row[i] - row[i + 1];
            if (drop > 1e-9 * (1.0 + std::fabs(row[i]))) {
                ++count;
                worst = std::max(worst, drop);
            }
        }
        if (count == 0) return;
        std::lock_guard<std::mutex> lock(vio_mtx);
        violations += count;
        if (violation_sample.size() < 64)
            violation_sample.push_back({j, k, phi, tg[argmin_idx], worst});
    }
};

// One minimized row of an operator sweep: value and first-minimizer index.
struct SweepResult {
    std::vector<double> value0;
    std::vector<double> tstar;
    std::vector<int> tidx;
};

// mode selects the operator family feeding the sweep.
enum class SweepKind { Exhausted, Diagonal, Interior };

SweepResult sweep_column_row(Workspace& ws, int j, int k, SweepKind kind,
                             const ValueTable* spend_slice,  // slice of (j, k+1)
                             const FlowRow* arrival_flow) {  // flow of (j+1, k)
    const std::size_t nt = ws.nt(), np = ws.np();
    SweepResult out;
    out.value0.resize(np);
    out.tstar.resize(np);
    out.tidx.resize(np);
    parallel_for(np, ws.opts.threads, [&](std::size_t r) {
        double phi = ws.pg[r];
        std::vector<double> row(nt);
        switch (kind) {
            case SweepKind::Exhausted:
                row[0] = (*spend_slice)(phi);
                for (std::size_t i = 1; i < nt; ++i)
                    row[i] = running_cost(ws.m, ws.tg[i], phi) +
                             ws.dis_lam[i] *
                                 ws.jumps.expectation(*spend_slice, ws.quad, static_cast<int>(i), phi);
                break;
            case SweepKind::Diagonal:
                row[0] = 0.0;
                for (std::size_t i = 1; i < nt; ++i)
                    row[i] = running_cost_with_arrivals(ws.m, ws.tg[i], phi) +
                             arrival_flow->cumulative[i * np + r];
                break;
            case SweepKind::Interior:
                row[0] = (*spend_slice)(phi);
                for (std::size_t i = 1; i < nt; ++i)
                    row[i] = running_cost_with_arrivals(ws.m, ws.tg[i], phi) +
                             ws.dis_lam_mu[i] *
                                 ws.jumps.expectation(*spend_slice, ws.quad, static_cast<int>(i), phi) +
                             arrival_flow->cumulative[i * np + r];
                break;
        }
        double best = row[0];
        for (double v : row) best = std::min(best, v);
        int idx = 0;
        for (std::size_t i = 0; i < nt; ++i)
            if (row[i] <= best + kArgminTieTol) {
                idx = static_cast<int>(i);
                break;
            }
        out.value0[r] = std::min(0.0, best);
        out.tstar[r] = ws.tg[idx];
        out.tidx[r] = idx;
        if (ws.opts.scan_threshold_rule) ws.record_violations(j, k, row, idx, phi);
    });
    ws.evals += static_cast<std::uint64_t>(np) * (nt - 1);
    return out;
}

// Backward fill of the flow-line values V(s, phi_r) for one lattice row.
// Past the action threshold the value is the observe-now expectation (or zero
// for a stop row); before it, the no-action dynamic programming identity is
// integrated backward so no exponential amplification occurs.
void fill_flow_row(Workspace& ws, const std::vector<int>& tidx, const ValueTable* spend_slice,
                   const FlowRow* arrival_flow, bool with_arrivals, bool stop_row,
                   FlowRow& out) {
    const std::size_t nt = ws.nt(), np = ws.np();
    out.value.assign(nt * np, 0.0);
    out.cumulative.assign(nt * np, 0.0);
    const double a = with_arrivals ? ws.m.lambda + ws.m.mu : ws.m.lambda;
    const double dis_step = std::exp(-a * ws.dt);
    const double seg_b = (1.0 + ws.m.lambda / ws.m.c) * std::expm1(-a * ws.dt) / a;
    const double seg_phi_coeff =
        with_arrivals ? -std::expm1(-ws.m.mu * ws.dt) / ws.m.mu : ws.dt;
    const double ka = -std::expm1(-a * ws.dt) / a;
    const double kb = (1.0 - (1.0 + a * ws.dt) * std::exp(-a * ws.dt)) / (a * a * ws.dt);

    parallel_for(np, ws.opts.threads, [&](std::size_t r) {
        double phi0 = ws.pg[r];
        int idx = tidx[r];
        // observe-now (or stop-now) region
        for (std::size_t i = static_cast<std::size_t>(idx); i < nt; ++i) {
            double v;
            if (stop_row)
                v = 0.0;
            else if (i == 0)
                v = (*spend_slice)(phi0);
            else
                v = ws.jumps.expectation(*spend_slice, ws.quad, static_cast<int>(i), phi0);
            out.value[i * np + r] = v;
        }
        // waiting region, backward
        for (int i = idx - 1; i >= 0; --i) {
            double seg = (phi0 + 1.0) * ws.exp_lam[i] * seg_phi_coeff + seg_b;
            double arr = 0.0;
            if (with_arrivals && arrival_flow) {
                double v0 = arrival_flow->value[static_cast<std::size_t>(i) * np + r];
                double v1 = arrival_flow->value[static_cast<std::size_t>(i + 1) * np + r];
                arr = ws.m.mu * (v0 * ka + (v1 - v0) * kb);
            }
            out.value[static_cast<std::size_t>(i) * np + r] =
                seg + arr + dis_step * out.value[static_cast<std::size_t>(i + 1) * np + r];
        }
        // cumulative arrival integral against this row's values
        double au = ws.m.lambda + ws.m.mu;
        for (std::size_t i = 0; i + 1 < nt; ++i) {
            double v0 = out.value[i * np + r];
            double v1 = out.value[(i + 1) * np + r];
            double inc = ws.m.mu * ws.dis_lam_mu[i] * (v0 * ws.ka_mu + (v1 - v0) * ws.kb_mu);
            out.cumulative[(i + 1) * np + r] = out.cumulative[i * np + r] + inc;
        }
        (void)au;
    });
}

FeasibleTable materialize_sheet(const Workspace& ws, const FlowRow& flow,
                                const std::vector<double>& tstar) {
    FeasibleTable sheet;
    sheet.lambda = ws.m.lambda;
    sheet.phibar = ws.phibar;
    sheet.phi_grid = ws.pg;
    double y_span = std::log1p(ws.phibar) / ws.m.lambda;
    std::size_t rows = 2;
    for (std::size_t i = 0; i < ws.nt(); ++i)
        if (ws.tg[i] <= y_span) rows = i + 1;
    rows = std::min(rows + 1, ws.nt());
    sheet.y_grid.assign(ws.tg.begin(), ws.tg.begin() + rows);
    const std::size_t np = ws.np();
    sheet.values.assign(rows * np, 0.0);
    sheet.action_time.assign(rows * np, 0.0);
    sheet.feasible_mask.assign(rows * np, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        double y = sheet.y_grid[i];
        double ey = std::exp(-ws.m.lambda * y);
        for (std::size_t p = 0; p < np; ++p) {
            double phi = ws.pg[p];
            double p0 = (phi + 1.0) * ey - 1.0;
            bool ok = p0 >= -kFeasSlack * (1.0 + phi);
            std::size_t at = i * np + p;
            double p0c = std::max(p0, 0.0);
            // flow-line interpolation in the rebased odds; infeasible cells
            // are padded with the boundary line so interpolation stays finite
            sheet.values[at] = row_interp(ws.pg, flow.value.data() + i * np, ws.phibar, p0c);
            double ts = row_interp(ws.pg, tstar.data(), std::numeric_limits<double>::infinity(), p0c);
            sheet.action_time[at] = std::max(ts - y, 0.0);
            sheet.feasible_mask[at] = ok ? 1 : 0;
        }
    }
    return sheet;
}

}  // namespace

ArrivalLattice solve_arrival(const ModelParams& m, int total_rights, const ArrivalOptions& opts) {
    m.validate(true);
    if (total_rights < 1) throw ConfigError("solve_arrival: total rights must be >= 1");
    const double phibar = opts.phibar > 0.0 ? opts.phibar : stopping_threshold(m);
    const double horizon = arrival_time_horizon(m);
    if (opts.time_steps < 2 || opts.phi_steps < 2)
        throw ConfigError("solve_arrival: grids need at least 2 steps");

    std::vector<double> tg = make_time_grid(horizon, opts.time_steps);
    ValueTable proto = ValueTable::uniform(phibar, opts.phi_steps, opts.interp);
    Workspace ws(m, opts, phibar, tg, proto.grid);

    ArrivalLattice out;
    out.params = m;
    out.total_rights = total_rights;
    out.cells.resize(static_cast<std::size_t>(total_rights + 1) * (total_rights + 2) / 2);

    const int n = total_rights;
    // flow rows of the previously processed column (j+1), indexed by spent k
    std::vector<FlowRow> prev_flow(static_cast<std::size_t>(n + 1));
    std::vector<FlowRow> cur_flow(static_cast<std::size_t>(n + 1));

    for (int j = n; j >= 0; --j) {
        std::vector<SweepResult> sweeps(static_cast<std::size_t>(j + 1));
        for (int k = j; k >= 0; --k) {
            ArrivalCell& cell = out.cell(j, k);
            cell.rights_received = j;
            cell.rights_spent = k;
            cell.kind = (k == j) ? ActionKind::Stop : ActionKind::Observe;
            cell.slice = proto;

            if (j == n && k == n) {
                SweepResult sr;
                sr.value0.resize(ws.np());
                sr.tstar.resize(ws.np());
                sr.tidx.resize(ws.np());
                for (std::size_t r = 0; r < ws.np(); ++r) {
                    double ts = first_crossing_time(m, ws.pg[r]);
                    sr.value0[r] = running_cost(m, ts, ws.pg[r]);
                    sr.tstar[r] = ts;
                    sr.tidx[r] = ws.grid_index(ts);
                }
                sweeps[k] = std::move(sr);
            } else if (j == n) {
                sweeps[k] = sweep_column_row(ws, j, k, SweepKind::Exhausted,
                                             &out.cell(n, k + 1).slice, nullptr);
            } else if (k == j) {
                sweeps[k] =
                    sweep_column_row(ws, j, k, SweepKind::Diagonal, nullptr, &prev_flow[k]);
            } else {
                sweeps[k] = sweep_column_row(ws, j, k, SweepKind::Interior,
                                             &out.cell(j, k + 1).slice, &prev_flow[k]);
            }
            cell.slice.values = sweeps[k].value0;
            cell.action_time0 = sweeps[k].tstar;
        }

        // flow rows consumed by column j-1 (all rows below the diagonal),
        // plus transient diagonal rows for sheet materialization
        for (int k = j - 1; k >= 0; --k) {
            fill_flow_row(ws, sweeps[k].tidx, &out.cell(j, k + 1).slice,
                          j == n ? nullptr : &prev_flow[k], j != n, false, cur_flow[k]);
        }
        FlowRow diag_flow;
        {
            int k = j;
            fill_flow_row(ws, sweeps[k].tidx, nullptr, j == n ? nullptr : &prev_flow[k], j != n,
                          true, diag_flow);
        }
        for (int k = j; k >= 0; --k) {
            const FlowRow& fr = (k == j) ? diag_flow : cur_flow[k];
            out.cell(j, k).table = materialize_sheet(ws, fr, sweeps[k].tstar);
        }
        for (int k = 0; k <= j - 1; ++k) prev_flow[k] = std::move(cur_flow[k]);
    }

    out.diagnostics.time_steps = opts.time_steps;
    out.diagnostics.phi_steps = opts.phi_steps;
    out.diagnostics.flow_steps = static_cast<int>(ws.nt());
    out.diagnostics.quad_order = opts.quad_order;
    out.diagnostics.phibar = phibar;
    out.diagnostics.horizon = horizon;
    out.diagnostics.action_value_evals = ws.evals;
    out.diagnostics.violation_count = ws.violations;
    out.violations = std::move(ws.violation_sample);
    return out;
}

}  // namespace qdet
