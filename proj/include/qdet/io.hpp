#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdet/arrival.hpp"
#include "qdet/continuous.hpp"
#include "qdet/lump.hpp"
#include "qdet/model.hpp"
#include "qdet/simulate.hpp"

namespace qdet {

inline constexpr const char* kToolVersion = "0.1.0";

// Full-precision decimal formatting: round-trips doubles exactly.
std::string format_double(double x);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

struct RunConfig {
    ModelParams params;
    int n = 10;
    double epsilon = 0.1;
    std::uint64_t seed = 12345;
    std::uint64_t episodes = 200000;
    int threads = 0;
    int time_steps = 2101;
    int phi_steps = 551;
    int quad_order = 64;
    int arrival_time_steps = 1401;
    double phibar = 0.0;  // 0 -> computed from the continuous solve
    double continuous_phi_step = 0.1;
    std::vector<double> schedule_gaps = {2.0, 5.0, 10.0};
    int schedule_obs = 1;
    std::string out_dir = "out";
    std::string name;        // output directory leaf; default: config-hash slug
    std::string policy_ref;  // simulate: directory of a previous solve
    int policy_rights = -1;  // simulate: rights for lump policies (-1: all)
    double policy_gap = 0.0; // simulate: gap selecting a fixed schedule
    bool write_episodes = false;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

RunConfig load_config_file(const std::string& path);

// Output directory <out>/<command>/<name>; name defaults to cfg-<hash>.
std::filesystem::path prepare_output_dir(const RunConfig& cfg, const std::string& command);

nlohmann::json manifest_header(const RunConfig& cfg, const std::string& command);
void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest);

// Lump solution: one CSV per n (phi,value,t_star,barrier_time,barrier_phi).
std::vector<std::string> write_lump_solution(const std::filesystem::path& dir,
                                             const LumpSolution& sol);
LumpSolution load_lump_solution(const std::filesystem::path& dir);

// Continuous reference: continuous.csv (phi,value).
std::vector<std::string> write_continuous_solution(const std::filesystem::path& dir,
                                                   const ContinuousSolution& sol);

// Arrival lattice: value_<j>_<k>.csv (y,phi,value,action_time,action_kind).
std::vector<std::string> write_arrival_lattice(const std::filesystem::path& dir,
                                               const ArrivalLattice& lat);
ArrivalLattice load_arrival_lattice(const std::filesystem::path& dir);

// Fixed-schedule stage tables plus a wide comparison CSV.
std::vector<std::string> write_fixed_comparison(const std::filesystem::path& dir,
                                                const LumpSolution& adaptive,
                                                const std::vector<FixedScheduleSolution>& fixed);

std::vector<std::string> write_risk_estimate(const std::filesystem::path& dir,
                                             const RiskEstimate& est,
                                             const std::vector<EpisodeResult>* episodes);

nlohmann::json read_manifest(const std::filesystem::path& dir);

}  // namespace qdet
