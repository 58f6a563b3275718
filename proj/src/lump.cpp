#include "qdet/lump.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qdet/continuous.hpp"
#include "qdet/errors.hpp"
#include "qdet/parallel.hpp"

namespace qdet {

double running_cost(const ModelParams& m, double t, double phi) {
    if (t < 0.0) throw std::domain_error("running_cost: t must be >= 0");
    return (phi + 1.0) * t + (1.0 / m.lambda) * (1.0 + m.lambda / m.c) * std::expm1(-m.lambda * t);
}

double first_crossing_time(const ModelParams& m, double phi) {
    if (phi < 0.0) throw std::domain_error("first_crossing_time: phi must be >= 0");
    double t = std::log((m.c + m.lambda) / (m.c * (phi + 1.0))) / m.lambda;
    return t > 0.0 ? t : 0.0;
}

double planning_horizon(const ModelParams& m) {
    return (1.0 / m.lambda) * (1.0 + m.lambda / m.c) + 1.0 / m.c;
}

double pure_stopping_value(const ModelParams& m, double phi) {
    return running_cost(m, first_crossing_time(m, phi), phi);
}

GridSizes grid_sizes(const ModelParams& m, double epsilon, double lipschitz, double phibar) {
    if (!(epsilon > 0.0)) throw ConfigError("grid_sizes: epsilon must be > 0");
    const double c1 = std::sqrt(2.0 / M_PI);  // E|Z| for standard normal Z
    const double a = 1.0 + m.lambda / m.c + 1.0 / m.c;
    const double b = phibar * (0.5 * m.alpha * c1 + m.lambda) + m.lambda + 0.5 * m.alpha * c1;
    const double big_m = phibar + a + b * lipschitz;
    GridSizes g;
    g.time_steps = static_cast<std::uint64_t>(std::ceil(big_m / (epsilon * epsilon)));
    g.phi_steps = static_cast<std::uint64_t>(std::ceil(lipschitz / epsilon));
    return g;
}

double continuation_expectation(const ValueTable& w, const ModelParams& m,
                                const GaussHermite& quad, double t, double phi) {
    if (!(t > 0.0)) throw std::domain_error("continuation_expectation: t must be > 0");
    double acc = 0.0;
    for (int q = 0; q < quad.order; ++q) {
        double j = jump_scale(m, t, quad.nodes[q]) * phi + jump_mass(m, t, quad.nodes[q]);
        acc += quad.weights[q] * w(j);
    }
    return acc;
}

double action_value(const ValueTable& w, const ModelParams& m, const GaussHermite& quad,
                    double t, double phi) {
    if (t < 0.0) throw std::domain_error("action_value: t must be >= 0");
    if (t == 0.0) return 0.0;
    return running_cost(m, t, phi) +
           std::exp(-m.lambda * t) * continuation_expectation(w, m, quad, t, phi);
}

std::vector<double> make_time_grid(double t_max, int steps) {
    if (steps < 2) throw ConfigError("time grid needs at least 2 steps");
    std::vector<double> g(steps);
    double dt = t_max / static_cast<double>(steps - 1);
    for (int i = 0; i < steps; ++i) g[i] = dt * i;
    g.back() = t_max;
    return g;
}

namespace {

// Jump pieces cached per (time index, quadrature node): the update is affine
// in phi, so a full J row costs one fused multiply-add per node.
struct KernelCache {
    int nt = 0;
    int nq = 0;
    std::vector<double> scale;  // (nt-1) x nq, skipping t=0
    std::vector<double> mass;
    std::vector<double> disc;  // e^{-lambda t_i}

    KernelCache(const ModelParams& m, const std::vector<double>& tg, const GaussHermite& quad)
        : nt(static_cast<int>(tg.size())), nq(quad.order) {
        scale.resize(static_cast<std::size_t>(nt - 1) * nq);
        mass.resize(static_cast<std::size_t>(nt - 1) * nq);
        disc.resize(nt - 1);
        for (int i = 1; i < nt; ++i) {
            disc[i - 1] = std::exp(-m.lambda * tg[i]);
            for (int q = 0; q < nq; ++q) {
                scale[static_cast<std::size_t>(i - 1) * nq + q] = jump_scale(m, tg[i], quad.nodes[q]);
                mass[static_cast<std::size_t>(i - 1) * nq + q] = jump_mass(m, tg[i], quad.nodes[q]);
            }
        }
    }
};

double row_expectation(const ValueTable& w, const GaussHermite& quad, const KernelCache& cache,
                       int ti, double phi) {
    const double* sc = &cache.scale[static_cast<std::size_t>(ti - 1) * cache.nq];
    const double* ms = &cache.mass[static_cast<std::size_t>(ti - 1) * cache.nq];
    double acc = 0.0;
    for (int q = 0; q < cache.nq; ++q) acc += quad.weights[q] * w(sc[q] * phi + ms[q]);
    return acc;
}

ActionChoice minimize_row(const std::vector<double>& row, const std::vector<double>& tg) {
    double best = row[0];
    for (std::size_t i = 1; i < row.size(); ++i) best = std::min(best, row[i]);
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] <= best + kArgminTieTol) return {best, tg[i]};
    }
    return {best, tg.back()};  // unreachable
}

}  // namespace

ActionChoice best_action(const ValueTable& w, const ModelParams& m, const GaussHermite& quad,
                         const std::vector<double>& time_grid, double phi) {
    std::vector<double> row(time_grid.size());
    for (std::size_t i = 0; i < time_grid.size(); ++i)
        row[i] = action_value(w, m, quad, time_grid[i], phi);
    return minimize_row(row, time_grid);
}

LumpSolution solve_lump(const ModelParams& m, int n_max, const LumpOptions& opts) {
    m.validate();
    if (n_max < 0) throw ConfigError("solve_lump: n_max must be >= 0");

    const double phibar = opts.phibar > 0.0 ? opts.phibar : stopping_threshold(m);
    if (!(phibar > m.drift_level()))
        throw ConfigError("solve_lump: truncation threshold must exceed lambda/c");
    const double horizon = planning_horizon(m);

    int time_steps = opts.time_steps;
    int phi_steps = opts.phi_steps;
    if (time_steps <= 0 || phi_steps <= 0) {
        // Worst-case sizing for one operator application at per-step budget;
        // capped because the bound is extremely conservative.
        double per_step = opts.epsilon / std::max(1, n_max);
        GridSizes g = grid_sizes(m, per_step, horizon * std::max(1, n_max), phibar);
        if (time_steps <= 0)
            time_steps = static_cast<int>(std::min<std::uint64_t>(g.time_steps, 200001));
        if (phi_steps <= 0)
            phi_steps = static_cast<int>(std::min<std::uint64_t>(g.phi_steps, 20001));
        time_steps = std::max(time_steps, 101);
        phi_steps = std::max(phi_steps, 101);
    }

    const GaussHermite quad(opts.quad_order);
    const std::vector<double> tg = make_time_grid(horizon, time_steps);
    const KernelCache cache(m, tg, quad);

    LumpSolution out;
    out.params = m;
    out.diagnostics.time_steps = time_steps;
    out.diagnostics.phi_steps = phi_steps;
    out.diagnostics.quad_order = opts.quad_order;
    out.diagnostics.phibar = phibar;
    out.diagnostics.horizon = horizon;
    out.diagnostics.epsilon = opts.epsilon;

    ValueTable v0 = ValueTable::uniform(phibar, phi_steps, opts.interp);
    LumpBoundary b0;
    b0.action_time.resize(phi_steps);
    b0.barrier_time.resize(phi_steps);
    b0.barrier_phi.resize(phi_steps);
    for (int j = 0; j < phi_steps; ++j) {
        double phi = v0.grid[j];
        double ts = first_crossing_time(m, phi);
        v0.values[j] = running_cost(m, ts, phi);
        b0.action_time[j] = ts;
        b0.barrier_time[j] = ts;
        b0.barrier_phi[j] = drift_flow(m, ts, phi);
    }
    out.tables.push_back(v0);
    out.boundaries.push_back(std::move(b0));

    for (int n = 1; n <= n_max; ++n) {
        const ValueTable& prev = out.tables.back();
        ValueTable next = ValueTable::uniform(phibar, phi_steps, opts.interp);
        LumpBoundary bnd;
        bnd.action_time.resize(phi_steps);
        bnd.barrier_time.resize(phi_steps);
        bnd.barrier_phi.resize(phi_steps);

        parallel_for(static_cast<std::size_t>(phi_steps), opts.threads, [&](std::size_t j) {
            double phi = next.grid[j];
            std::vector<double> row(time_steps);
            row[0] = 0.0;  // stop immediately
            for (int i = 1; i < time_steps; ++i) {
                double k = row_expectation(prev, quad, cache, i, phi);
                row[i] = running_cost(m, tg[i], phi) + cache.disc[i - 1] * k;
            }
            ActionChoice ch = minimize_row(row, tg);
            next.values[j] = std::min(0.0, ch.value);
            bnd.action_time[j] = ch.time;
            bnd.barrier_time[j] = ch.time;
            bnd.barrier_phi[j] = drift_flow(m, ch.time, phi);
        });

        out.diagnostics.action_value_evals +=
            static_cast<std::uint64_t>(phi_steps) * static_cast<std::uint64_t>(time_steps - 1);
        out.tables.push_back(std::move(next));
        out.boundaries.push_back(std::move(bnd));
    }
    return out;
}

FixedSchedule FixedSchedule::repeated(double gap, int count) {
    FixedSchedule s;
    s.gaps.assign(static_cast<std::size_t>(count), gap);
    s.validate();
    return s;
}

void FixedSchedule::validate() const {
    if (gaps.empty()) throw ConfigError("FixedSchedule: needs at least one observation");
    for (double g : gaps)
        if (!(g > 0.0)) throw ConfigError("FixedSchedule: gaps must be positive");
}

FixedScheduleSolution fixed_schedule_value(const FixedSchedule& schedule, const ModelParams& m,
                                           const LumpOptions& opts) {
    m.validate();
    schedule.validate();
    const double phibar = opts.phibar > 0.0 ? opts.phibar : stopping_threshold(m);
    const int phi_steps = opts.phi_steps > 0 ? opts.phi_steps : 551;
    const GaussHermite quad(opts.quad_order);

    FixedScheduleSolution out;
    out.params = m;
    out.schedule = schedule;
    out.quad_order = opts.quad_order;

    ValueTable w = ValueTable::uniform(phibar, phi_steps, opts.interp);
    for (std::size_t j = 0; j < w.size(); ++j) w.values[j] = pure_stopping_value(m, w.grid[j]);
    out.stages.push_back(w);

    const std::size_t count = schedule.gaps.size();
    for (std::size_t k = 1; k <= count; ++k) {
        double s = schedule.gaps[count - k];  // next gap when k observations remain
        const ValueTable& prev = out.stages.back();
        ValueTable next = ValueTable::uniform(phibar, phi_steps, opts.interp);
        parallel_for(next.size(), opts.threads, [&](std::size_t j) {
            double phi = next.grid[j];
            double stop_now = running_cost(m, std::min(first_crossing_time(m, phi), s), phi);
            double wait = running_cost(m, s, phi) +
                          std::exp(-m.lambda * s) * continuation_expectation(prev, m, quad, s, phi);
            next.values[j] = std::min(stop_now, wait);
        });
        out.stages.push_back(std::move(next));
    }
    return out;
}

}  // namespace qdet
