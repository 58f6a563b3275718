#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "qdet/arrival.hpp"
#include "qdet/lump.hpp"
#include "qdet/model.hpp"
#include "qdet/rng.hpp"

namespace qdet {

struct EpisodeResult {
    double theta = 0.0;  // disorder time
    double tau = 0.0;    // alarm time
    bool false_alarm = false;
    double delay = 0.0;  // (tau - theta)^+
    int observations_used = 0;
    bool truncated = false;

    double risk_sample(double c) const { return (false_alarm ? 1.0 : 0.0) + c * delay; }
};

struct RiskEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n_episodes = 0;
    std::uint64_t seed = 0;
    std::size_t truncated_episodes = 0;
};

// Alarm immediately at time zero (mostly for calibration tests).
struct ImmediateStopPolicy {};

// Adaptive lump-sum policy backed by the solved boundaries, using `rights`
// observation rights.
struct LumpPolicy {
    const LumpSolution* solution = nullptr;
    int rights = 0;
};

// Observations at a fixed schedule, stopping optimally in between.
struct FixedGridPolicy {
    const FixedScheduleSolution* solution = nullptr;
};

// Stochastic-arrival policy driven by the lattice action times.
struct ArrivalPolicy {
    const ArrivalLattice* lattice = nullptr;
};

using Policy = std::variant<ImmediateStopPolicy, LumpPolicy, FixedGridPolicy, ArrivalPolicy>;

// Theta = 0 with probability p, otherwise Exp(lambda).
double sample_disorder(const ModelParams& m, RngStream& rng);

// Standardized increment of the observed process over (t_prev, t_next] given
// the disorder time: z = dX / sqrt(dt) with dX ~ N(alpha (t_next - max(theta,
// t_prev))^+, t_next - t_prev).
double observation_increment(double t_prev, double t_next, double theta, const ModelParams& m,
                             RngStream& rng);

// Streams reserved per episode index (disorder, path increments, arrivals).
inline constexpr std::uint64_t kStreamsPerEpisode = 4;

EpisodeResult run_episode(const Policy& policy, const ModelParams& m, std::uint64_t seed,
                          std::uint64_t episode_index, double horizon);

RiskEstimate estimate_risk(const Policy& policy, const ModelParams& m, std::size_t n_episodes,
                           std::uint64_t seed, int threads = 0, double horizon = 0.0,
                           std::vector<EpisodeResult>* episode_log = nullptr);

// The two discretized posterior processes built from shared normal draws:
// piecewise-constant grid values vs the deterministic-flow interpolation.
struct DiscretizedPaths {
    int density = 0;  // observations per unit time
    double horizon = 0.0;
    std::vector<double> times;        // grid times k/density
    std::vector<double> grid_values;  // shared values at grid points

    // piecewise-constant path
    double step_path(double t) const;
    // flow-interpolated path
    double flow_path(double t, const ModelParams& m) const;
    // sup-norm gap over [0, horizon]: g(max grid value) with
    // g(x) = e^{lambda/density}(x + 1) - 1 - x.
    double sup_gap(const ModelParams& m) const;
};

DiscretizedPaths discretized_paths(int density, double horizon, double phi0, const ModelParams& m,
                                   RngStream& rng);

}  // namespace qdet
