// qdet: solvers and simulators for Bayesian quickest detection with a
// limited budget of discrete observations.
//
// Commands: solve-lump, solve-continuous, solve-arrival, simulate,
// compare-fixed. Exit codes: 0 ok, 2 config error, 3 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "qdet/errors.hpp"
#include "qdet/io.hpp"

namespace {

using namespace qdet;
using nlohmann::json;

LumpOptions lump_options(const RunConfig& cfg) {
    LumpOptions o;
    o.epsilon = cfg.epsilon;
    o.time_steps = cfg.time_steps;
    o.phi_steps = cfg.phi_steps;
    o.quad_order = cfg.quad_order;
    o.phibar = cfg.phibar;
    o.threads = cfg.threads;
    return o;
}

int cmd_solve_lump(const RunConfig& cfg) {
    LumpSolution sol = solve_lump(cfg.params, cfg.n, lump_options(cfg));
    auto dir = prepare_output_dir(cfg, "solve-lump");
    auto files = write_lump_solution(dir, sol);
    json m = manifest_header(cfg, "solve-lump");
    m["tables"] = static_cast<int>(sol.tables.size());
    m["phibar"] = sol.diagnostics.phibar;
    m["horizon"] = sol.diagnostics.horizon;
    m["time_steps"] = sol.diagnostics.time_steps;
    m["phi_steps"] = sol.diagnostics.phi_steps;
    m["quad_order"] = sol.diagnostics.quad_order;
    m["action_value_evals"] = sol.diagnostics.action_value_evals;
    m["outputs"] = files;
    write_manifest(dir, m);
    std::cout << dir.string() << "\n";
    return 0;
}

int cmd_solve_continuous(const RunConfig& cfg) {
    ContinuousOptions o;
    o.phi_step = cfg.continuous_phi_step;
    ContinuousSolution sol = solve_continuous(cfg.params, o);
    auto dir = prepare_output_dir(cfg, "solve-continuous");
    auto files = write_continuous_solution(dir, sol);
    json m = manifest_header(cfg, "solve-continuous");
    m["phibar"] = sol.phibar;
    m["value_at_zero"] = sol.table.values.front();
    m["shooting_iterations"] = sol.stats.shooting_iterations;
    m["boundary_residual"] = sol.stats.boundary_residual;
    m["flow_defect"] = sol.stats.flow_defect;
    m["accepted_steps"] = sol.stats.accepted_steps;
    m["rejected_steps"] = sol.stats.rejected_steps;
    m["outputs"] = files;
    write_manifest(dir, m);
    std::cout << dir.string() << "\n";
    return 0;
}

int cmd_solve_arrival(const RunConfig& cfg) {
    ArrivalOptions o;
    o.time_steps = cfg.arrival_time_steps;
    o.phi_steps = cfg.phi_steps;
    o.quad_order = cfg.quad_order;
    o.phibar = cfg.phibar;
    o.threads = cfg.threads;
    ArrivalLattice lat = solve_arrival(cfg.params, cfg.n, o);
    auto dir = prepare_output_dir(cfg, "solve-arrival");
    auto files = write_arrival_lattice(dir, lat);
    json m = manifest_header(cfg, "solve-arrival");
    m["n"] = lat.total_rights;
    m["phibar"] = lat.diagnostics.phibar;
    m["horizon"] = lat.diagnostics.horizon;
    m["action_value_evals"] = lat.diagnostics.action_value_evals;
    m["threshold_violations"] = lat.diagnostics.violation_count;
    json vio = json::array();
    for (const auto& v : lat.violations) {
        vio.push_back({{"received", v.rights_received},
                       {"spent", v.rights_spent},
                       {"phi", v.phi},
                       {"time_at", v.time_at},
                       {"magnitude", v.magnitude}});
    }
    m["threshold_violation_sample"] = vio;
    m["outputs"] = files;
    write_manifest(dir, m);
    std::cout << dir.string() << "\n";
    return 0;
}

int cmd_compare_fixed(const RunConfig& cfg) {
    RunConfig lump_cfg = cfg;
    lump_cfg.n = cfg.schedule_obs;
    LumpSolution adaptive = solve_lump(cfg.params, cfg.schedule_obs, lump_options(lump_cfg));
    std::vector<FixedScheduleSolution> fixed;
    LumpOptions o = lump_options(cfg);
    o.phibar = adaptive.diagnostics.phibar;
    for (double gap : cfg.schedule_gaps)
        fixed.push_back(
            fixed_schedule_value(FixedSchedule::repeated(gap, cfg.schedule_obs), cfg.params, o));
    auto dir = prepare_output_dir(cfg, "compare-fixed");
    auto files = write_fixed_comparison(dir, adaptive, fixed);
    json m = manifest_header(cfg, "compare-fixed");
    m["phibar"] = adaptive.diagnostics.phibar;
    m["outputs"] = files;
    write_manifest(dir, m);
    std::cout << dir.string() << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    if (cfg.policy_ref.empty()) throw ConfigError("simulate: --policy is required");
    json ref = read_manifest(cfg.policy_ref);
    std::string kind = ref.at("command").get<std::string>();

    // Keep loaded solutions alive for the run.
    LumpSolution lump;
    ArrivalLattice lattice;
    FixedScheduleSolution fixed;
    Policy policy = ImmediateStopPolicy{};
    ModelParams params = cfg.params;

    if (kind == "solve-lump") {
        lump = load_lump_solution(cfg.policy_ref);
        params = lump.params;
        int rights = cfg.policy_rights >= 0 ? cfg.policy_rights
                                            : static_cast<int>(lump.tables.size()) - 1;
        policy = LumpPolicy{&lump, rights};
    } else if (kind == "solve-arrival") {
        lattice = load_arrival_lattice(cfg.policy_ref);
        params = lattice.params;
        policy = ArrivalPolicy{&lattice};
    } else if (kind == "compare-fixed") {
        RunConfig ref_cfg = RunConfig::from_json(ref.at("config"));
        params = ref_cfg.params;
        double gap = cfg.policy_gap > 0.0 ? cfg.policy_gap : ref_cfg.schedule_gaps.front();
        LumpOptions o = lump_options(ref_cfg);
        o.phibar = ref.at("phibar").get<double>();
        fixed = fixed_schedule_value(FixedSchedule::repeated(gap, ref_cfg.schedule_obs), params, o);
        policy = FixedGridPolicy{&fixed};
    } else {
        throw ConfigError("simulate: unsupported policy kind '" + kind + "'");
    }

    std::vector<EpisodeResult> episodes;
    RiskEstimate est = estimate_risk(policy, params, cfg.episodes, cfg.seed, cfg.threads, 0.0,
                                     cfg.write_episodes ? &episodes : nullptr);
    auto dir = prepare_output_dir(cfg, "simulate");
    auto files = write_risk_estimate(dir, est, cfg.write_episodes ? &episodes : nullptr);
    json m = manifest_header(cfg, "simulate");
    m["policy_kind"] = kind;
    m["policy_manifest_hash"] = hash_hex(ref.dump());
    m["mean"] = est.mean;
    m["stderr"] = est.stderr_;
    m["truncated_episodes"] = est.truncated_episodes;
    m["outputs"] = files;
    write_manifest(dir, m);
    std::cout << dir.string() << "\n";
    return 0;
}

void add_common_flags(CLI::App* app, RunConfig& cfg) {
    app->add_option("--lambda", cfg.params.lambda, "disorder hazard rate");
    app->add_option("--c", cfg.params.c, "delay cost weight");
    app->add_option("--alpha", cfg.params.alpha, "post-disorder drift");
    app->add_option("--p", cfg.params.p, "prior disorder mass at zero");
    app->add_option("--mu", cfg.params.mu, "observation-right arrival rate");
    app->add_option("--n", cfg.n, "number of observation rights");
    app->add_option("--epsilon", cfg.epsilon, "accuracy budget");
    app->add_option("--seed", cfg.seed, "simulation seed");
    app->add_option("--episodes", cfg.episodes, "simulation episodes");
    app->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    app->add_option("--time-steps", cfg.time_steps, "action-time grid points (0 = worst-case)");
    app->add_option("--phi-steps", cfg.phi_steps, "odds grid points (0 = worst-case)");
    app->add_option("--quad-order", cfg.quad_order, "Gauss-Hermite order");
    app->add_option("--arrival-time-steps", cfg.arrival_time_steps,
                    "action-time grid points for the arrival solver");
    app->add_option("--phibar", cfg.phibar, "truncation threshold override");
    app->add_option("--continuous-phi-step", cfg.continuous_phi_step,
                    "output resolution of the continuous solve");
    app->add_option("--schedules", cfg.schedule_gaps, "fixed-schedule gaps")->delimiter(',');
    app->add_option("--schedule-obs", cfg.schedule_obs, "observations per fixed schedule");
    app->add_option("--out", cfg.out_dir, "output root directory");
    app->add_option("--name", cfg.name, "output directory name (default: config hash)");
    app->add_option("--policy", cfg.policy_ref, "directory of a previously written solve");
    app->add_option("--rights", cfg.policy_rights, "rights used by a lump policy");
    app->add_option("--gap", cfg.policy_gap, "gap selecting a fixed schedule");
    app->add_flag("--write-episodes", cfg.write_episodes, "stream per-episode CSV");
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    // Pass 1: pick up --config so its values become the defaults flags override.
    for (int i = 1; i + 1 <= argc - 1; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                cfg = load_config_file(argv[i + 1]);
            } catch (const ConfigError& e) {
                std::cerr << "error: config: " << e.what() << "\n";
                return 2;
            }
            break;
        }
    }

    CLI::App app{"quickest detection with discretely controlled observations"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file");

    auto* sl = app.add_subcommand("solve-lump", "solve the lump-sum observation problem");
    auto* sc = app.add_subcommand("solve-continuous", "solve the continuous reference problem");
    auto* sa = app.add_subcommand("solve-arrival", "solve the stochastic-arrival problem");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo a computed policy");
    auto* cmpf = app.add_subcommand("compare-fixed", "compare adaptive vs fixed schedules");
    for (CLI::App* sub : {sl, sc, sa, sim, cmpf}) {
        add_common_flags(sub, cfg);
        sub->add_option("--config", config_path, "JSON configuration file");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sl->parsed()) return cmd_solve_lump(cfg);
        if (sc->parsed()) return cmd_solve_continuous(cfg);
        if (sa->parsed()) return cmd_solve_arrival(cfg);
        if (sim->parsed()) return cmd_simulate(cfg);
        if (cmpf->parsed()) return cmd_compare_fixed(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: numerical: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
