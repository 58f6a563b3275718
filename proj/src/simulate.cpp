#include "qdet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "qdet/errors.hpp"
#include "qdet/parallel.hpp"

namespace qdet {

namespace {

constexpr std::uint64_t kDisorderStream = 0;
constexpr std::uint64_t kPathStream = 1;
constexpr std::uint64_t kArrivalStream = 2;

RngStream episode_stream(std::uint64_t seed, std::uint64_t episode, std::uint64_t purpose) {
    return RngStream(seed, episode * kStreamsPerEpisode + purpose);
}

double interp_on_grid(const std::vector<double>& grid, const std::vector<double>& vals, double x,
                      double beyond) {
    if (x >= grid.back()) return beyond;
    if (x <= grid.front()) return vals.front();
    double step = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    std::size_t i = static_cast<std::size_t>((x - grid.front()) / step);
    if (i >= grid.size() - 1) i = grid.size() - 2;
    if (x < grid[i] && i > 0) --i;
    else if (i + 2 < grid.size() && x >= grid[i + 1]) ++i;
    double w = (x - grid[i]) / (grid[i + 1] - grid[i]);
    return vals[i] + w * (vals[i + 1] - vals[i]);
}

const GaussHermite& cached_quad(int order) {
    static thread_local std::map<int, GaussHermite> cache;
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, GaussHermite(order)).first;
    return it->second;
}

struct EpisodeContext {
    const ModelParams& m;
    double theta;
    double horizon;
    RngStream path;
    RngStream arrivals;
    EpisodeResult result;

    void finish(double tau) {
        if (tau > horizon) {
            tau = horizon;
            result.truncated = true;
        }
        result.tau = tau;
        result.false_alarm = tau < theta;
        result.delay = std::max(tau - theta, 0.0);
    }
};

void run_lump(EpisodeContext& ctx, const LumpPolicy& pol) {
    const LumpSolution& sol = *pol.solution;
    double phi = odds_from_prior(ctx.m.p);
    double t_obs = 0.0;
    int rights = pol.rights;
    for (;;) {
        if (rights == 0) {
            ctx.finish(t_obs + first_crossing_time(ctx.m, phi));
            return;
        }
        const LumpBoundary& bnd = sol.boundaries[static_cast<std::size_t>(rights)];
        double wait = interp_on_grid(sol.tables[static_cast<std::size_t>(rights)].grid,
                                     bnd.action_time, phi, 0.0);
        if (wait <= kArgminTieTol) {
            // observing now is stopping (consecutive equal action times)
            ctx.finish(t_obs);
            return;
        }
        double t_next = t_obs + wait;
        if (t_next > ctx.horizon) {
            ctx.finish(t_next);
            return;
        }
        double z = observation_increment(t_obs, t_next, ctx.theta, ctx.m, ctx.path);
        phi = jump_update(ctx.m, wait, phi, z);
        --rights;
        ++ctx.result.observations_used;
        t_obs = t_next;
    }
}

void run_fixed(EpisodeContext& ctx, const FixedGridPolicy& pol) {
    const FixedScheduleSolution& sol = *pol.solution;
    const GaussHermite& quad = cached_quad(sol.quad_order);
    const std::size_t count = sol.schedule.gaps.size();
    double phi = odds_from_prior(ctx.m.p);
    double t_obs = 0.0;
    std::size_t remaining = count;
    for (;;) {
        if (remaining == 0) {
            ctx.finish(t_obs + first_crossing_time(ctx.m, phi));
            return;
        }
        double s = sol.schedule.gaps[count - remaining];
        double stop_at = std::min(first_crossing_time(ctx.m, phi), s);
        double stop_val = running_cost(ctx.m, stop_at, phi);
        double cont_val =
            running_cost(ctx.m, s, phi) +
            std::exp(-ctx.m.lambda * s) *
                continuation_expectation(sol.stages[remaining - 1], ctx.m, quad, s, phi);
        if (stop_val <= cont_val) {
            ctx.finish(t_obs + stop_at);
            return;
        }
        double t_next = t_obs + s;
        if (t_next > ctx.horizon) {
            ctx.finish(t_next);
            return;
        }
        double z = observation_increment(t_obs, t_next, ctx.theta, ctx.m, ctx.path);
        phi = jump_update(ctx.m, s, phi, z);
        --remaining;
        ++ctx.result.observations_used;
        t_obs = t_next;
    }
}

void run_arrival(EpisodeContext& ctx, const ArrivalPolicy& pol) {
    const ArrivalLattice& lat = *pol.lattice;
    const int n = lat.total_rights;
    double phi_at_obs = odds_from_prior(ctx.m.p);
    double t_obs = 0.0;  // psi_0 = 0 reference
    double t_now = 0.0;
    int received = 0, spent = 0;
    double eta_abs = ctx.arrivals.exponential(ctx.m.mu);
    for (;;) {
        if (t_now > ctx.horizon) {
            ctx.finish(t_now);
            return;
        }
        const ArrivalCell& cell = lat.cell(received, spent);
        double y = t_now - t_obs;
        // remaining time to the optimal action from the flow threshold
        double tstar =
            interp_on_grid(cell.slice.grid, cell.action_time0, phi_at_obs, 0.0);
        double act_abs = t_obs + std::max(tstar, y);  // act now if past the threshold
        if (received < n && eta_abs < act_abs) {
            t_now = eta_abs;
            ++received;
            eta_abs = received < n ? eta_abs + ctx.arrivals.exponential(ctx.m.mu)
                                   : std::numeric_limits<double>::infinity();
            continue;
        }
        if (spent == received) {
            ctx.finish(act_abs);
            return;
        }
        // spend a right at act_abs
        double dt = act_abs - t_obs;
        if (dt <= kArgminTieTol) {
            ++spent;
            ++ctx.result.observations_used;
            t_now = act_abs;
            continue;  // instantaneous spend: posterior unchanged
        }
        if (act_abs > ctx.horizon) {
            ctx.finish(act_abs);
            return;
        }
        double z = observation_increment(t_obs, act_abs, ctx.theta, ctx.m, ctx.path);
        phi_at_obs = jump_update(ctx.m, dt, phi_at_obs, z);
        t_obs = act_abs;
        t_now = act_abs;
        ++spent;
        ++ctx.result.observations_used;
    }
}

}  // namespace

double sample_disorder(const ModelParams& m, RngStream& rng) {
    double u = rng.uniform01();
    if (u <= m.p) return 0.0;
    // inverse CDF of the exponential tail, reusing the same uniform
    return -std::log((u - m.p) / (1.0 - m.p)) / m.lambda;
}

double observation_increment(double t_prev, double t_next, double theta, const ModelParams& m,
                             RngStream& rng) {
    if (!(t_next > t_prev)) throw std::domain_error("observation_increment: t_next must exceed t_prev");
    double dt = t_next - t_prev;
    double drift = m.alpha * std::max(t_next - std::max(theta, t_prev), 0.0);
    return drift / std::sqrt(dt) + rng.normal();
}

EpisodeResult run_episode(const Policy& policy, const ModelParams& m, std::uint64_t seed,
                          std::uint64_t episode_index, double horizon) {
    RngStream disorder = episode_stream(seed, episode_index, kDisorderStream);
    EpisodeContext ctx{m,
                       sample_disorder(m, disorder),
                       horizon,
                       episode_stream(seed, episode_index, kPathStream),
                       episode_stream(seed, episode_index, kArrivalStream),
                       {}};
    ctx.result.theta = ctx.theta;
    std::visit(
        [&](const auto& pol) {
            using T = std::decay_t<decltype(pol)>;
            if constexpr (std::is_same_v<T, ImmediateStopPolicy>) {
                ctx.finish(0.0);
            } else if constexpr (std::is_same_v<T, LumpPolicy>) {
                run_lump(ctx, pol);
            } else if constexpr (std::is_same_v<T, FixedGridPolicy>) {
                run_fixed(ctx, pol);
            } else {
                run_arrival(ctx, pol);
            }
        },
        policy);
    return ctx.result;
}

RiskEstimate estimate_risk(const Policy& policy, const ModelParams& m, std::size_t n_episodes,
                           std::uint64_t seed, int threads, double horizon,
                           std::vector<EpisodeResult>* episode_log) {
    if (n_episodes < 1) throw ConfigError("estimate_risk: need at least one episode");
    if (const auto* lp = std::get_if<LumpPolicy>(&policy)) {
        if (!lp->solution || lp->rights < 0 ||
            lp->rights >= static_cast<int>(lp->solution->tables.size()))
            throw ConfigError("estimate_risk: lump policy rights exceed the solved tables");
    }
    if (horizon <= 0.0) horizon = 50.0 * planning_horizon(m);

    std::vector<EpisodeResult> results(n_episodes);
    parallel_for(n_episodes, threads, [&](std::size_t i) {
        results[i] = run_episode(policy, m, seed, i, horizon);
    });

    // fixed-order accumulation: independent of the thread count
    double mean = 0.0;
    for (const auto& r : results) mean += r.risk_sample(m.c);
    mean /= static_cast<double>(n_episodes);
    double ss = 0.0;
    std::size_t truncated = 0;
    for (const auto& r : results) {
        double d = r.risk_sample(m.c) - mean;
        ss += d * d;
        truncated += r.truncated ? 1 : 0;
    }
    double sample_var = n_episodes > 1 ? ss / static_cast<double>(n_episodes - 1) : 0.0;

    RiskEstimate est;
    est.mean = mean;
    est.stderr_ = std::sqrt(sample_var / static_cast<double>(n_episodes));
    est.n_episodes = n_episodes;
    est.seed = seed;
    est.truncated_episodes = truncated;
    if (episode_log) *episode_log = std::move(results);
    return est;
}

double DiscretizedPaths::step_path(double t) const {
    if (t <= 0.0) return grid_values.front();
    std::size_t k = static_cast<std::size_t>(t * density);
    if (k >= grid_values.size()) k = grid_values.size() - 1;
    return grid_values[k];
}

double DiscretizedPaths::flow_path(double t, const ModelParams& m) const {
    if (t <= 0.0) return grid_values.front();
    std::size_t k = static_cast<std::size_t>(t * density);
    if (k >= grid_values.size()) k = grid_values.size() - 1;
    double tk = static_cast<double>(k) / density;
    return drift_flow(m, t - tk, grid_values[k]);
}

double DiscretizedPaths::sup_gap(const ModelParams& m) const {
    double mx = 0.0;
    for (std::size_t k = 0; k + 1 < grid_values.size(); ++k) mx = std::max(mx, grid_values[k]);
    double g = std::exp(m.lambda / density) * (mx + 1.0) - 1.0 - mx;
    return g;
}

DiscretizedPaths discretized_paths(int density, double horizon, double phi0, const ModelParams& m,
                                   RngStream& rng) {
    if (density < 1) throw ConfigError("discretized_paths: density must be >= 1");
    if (!(horizon > 0.0)) throw ConfigError("discretized_paths: horizon must be > 0");
    DiscretizedPaths out;
    out.density = density;
    std::size_t steps = static_cast<std::size_t>(std::llround(horizon * density));
    steps = std::max<std::size_t>(steps, 1);
    out.horizon = static_cast<double>(steps) / density;
    out.times.resize(steps + 1);
    out.grid_values.resize(steps + 1);
    out.grid_values[0] = phi0;
    out.times[0] = 0.0;
    double dt = 1.0 / density;
    for (std::size_t k = 1; k <= steps; ++k) {
        out.times[k] = static_cast<double>(k) / density;
        out.grid_values[k] = jump_update(m, dt, out.grid_values[k - 1], rng.normal());
    }
    return out;
}

}  // namespace qdet
