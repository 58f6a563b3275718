#include "qdet/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qdet/errors.hpp"

namespace qdet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(const std::string& bytes) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(bytes));
    return buf;
}

namespace {

void set_if(const json& j, const char* key, double& out) {
    if (j.contains(key)) out = j.at(key).get<double>();
}
void set_if(const json& j, const char* key, int& out) {
    if (j.contains(key)) out = j.at(key).get<int>();
}
void set_if(const json& j, const char* key, std::uint64_t& out) {
    if (j.contains(key)) out = j.at(key).get<std::uint64_t>();
}
void set_if(const json& j, const char* key, bool& out) {
    if (j.contains(key)) out = j.at(key).get<bool>();
}
void set_if(const json& j, const char* key, std::string& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
}

const char* kKnownKeys[] = {
    "lambda", "c", "alpha", "p", "mu", "n", "epsilon", "seed", "episodes", "threads",
    "time_steps", "phi_steps", "quad_order", "arrival_time_steps", "phibar",
    "continuous_phi_step", "schedule_gaps", "schedule_obs", "out", "name", "policy",
    "policy_rights", "policy_gap", "write_episodes"};

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : kKnownKeys) known |= (it.key() == k);
        if (!known) throw ConfigError("config: unknown key '" + it.key() + "'");
    }
    RunConfig c;
    set_if(j, "lambda", c.params.lambda);
    set_if(j, "c", c.params.c);
    set_if(j, "alpha", c.params.alpha);
    set_if(j, "p", c.params.p);
    set_if(j, "mu", c.params.mu);
    set_if(j, "n", c.n);
    set_if(j, "epsilon", c.epsilon);
    set_if(j, "seed", c.seed);
    set_if(j, "episodes", c.episodes);
    set_if(j, "threads", c.threads);
    set_if(j, "time_steps", c.time_steps);
    set_if(j, "phi_steps", c.phi_steps);
    set_if(j, "quad_order", c.quad_order);
    set_if(j, "arrival_time_steps", c.arrival_time_steps);
    set_if(j, "phibar", c.phibar);
    set_if(j, "continuous_phi_step", c.continuous_phi_step);
    if (j.contains("schedule_gaps")) c.schedule_gaps = j.at("schedule_gaps").get<std::vector<double>>();
    set_if(j, "schedule_obs", c.schedule_obs);
    set_if(j, "out", c.out_dir);
    set_if(j, "name", c.name);
    set_if(j, "policy", c.policy_ref);
    set_if(j, "policy_rights", c.policy_rights);
    set_if(j, "policy_gap", c.policy_gap);
    set_if(j, "write_episodes", c.write_episodes);
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["lambda"] = params.lambda;
    j["c"] = params.c;
    j["alpha"] = params.alpha;
    j["p"] = params.p;
    j["mu"] = params.mu;
    j["n"] = n;
    j["epsilon"] = epsilon;
    j["seed"] = seed;
    j["episodes"] = episodes;
    j["threads"] = threads;
    j["time_steps"] = time_steps;
    j["phi_steps"] = phi_steps;
    j["quad_order"] = quad_order;
    j["arrival_time_steps"] = arrival_time_steps;
    j["phibar"] = phibar;
    j["continuous_phi_step"] = continuous_phi_step;
    j["schedule_gaps"] = schedule_gaps;
    j["schedule_obs"] = schedule_obs;
    j["out"] = out_dir;
    j["name"] = name;
    j["policy"] = policy_ref;
    j["policy_rights"] = policy_rights;
    j["policy_gap"] = policy_gap;
    j["write_episodes"] = write_episodes;
    return j;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return RunConfig::from_json(j);
}

fs::path prepare_output_dir(const RunConfig& cfg, const std::string& command) {
    std::string leaf = cfg.name;
    if (leaf.empty()) leaf = "cfg-" + hash_hex(cfg.to_json().dump());
    fs::path dir = fs::path(cfg.out_dir) / command / leaf;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string());
    return dir;
}

json manifest_header(const RunConfig& cfg, const std::string& command) {
    json m;
    m["tool"] = "qdet";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["config"] = cfg.to_json();
    m["config_hash"] = hash_hex(cfg.to_json().dump());
    return m;
}

void write_manifest(const fs::path& dir, const json& manifest) {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ConfigError("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << "\n";
}

json read_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ConfigError("cannot open manifest in " + dir.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid manifest JSON: ") + e.what());
    }
    return j;
}

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

std::vector<std::vector<double>> read_csv_numeric(const fs::path& p, std::size_t min_cols,
                                                  std::vector<std::string>* header = nullptr) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV " + p.string());
    if (header) {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header->push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                             : comma - start);
            if (cell == "nan" || cell == "s" || cell == "o") {
                row.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                            : (cell == "s" ? 0.0 : 1.0));
            } else {
                row.push_back(std::strtod(cell.c_str(), nullptr));
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (row.size() < min_cols) throw ConfigError("short CSV row in " + p.string());
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<std::string> write_lump_solution(const fs::path& dir, const LumpSolution& sol) {
    std::vector<std::string> files;
    for (std::size_t n = 0; n < sol.tables.size(); ++n) {
        std::string name = "value_" + std::to_string(n) + ".csv";
        auto out = open_out(dir / name);
        out << "phi,value,t_star,barrier_time,barrier_phi\n";
        const auto& t = sol.tables[n];
        const auto& b = sol.boundaries[n];
        for (std::size_t i = 0; i < t.size(); ++i) {
            out << format_double(t.grid[i]) << ',' << format_double(t.values[i]) << ','
                << format_double(b.action_time[i]) << ',' << format_double(b.barrier_time[i])
                << ',' << format_double(b.barrier_phi[i]) << '\n';
        }
        files.push_back(name);
    }
    return files;
}

LumpSolution load_lump_solution(const fs::path& dir) {
    json m = read_manifest(dir);
    if (m.at("command") != "solve-lump") throw ConfigError("policy ref is not a solve-lump run");
    RunConfig cfg = RunConfig::from_json(m.at("config"));
    LumpSolution sol;
    sol.params = cfg.params;
    double phibar = m.at("phibar").get<double>();
    int n_tables = m.at("tables").get<int>();
    for (int n = 0; n < n_tables; ++n) {
        auto rows = read_csv_numeric(dir / ("value_" + std::to_string(n) + ".csv"), 5);
        std::vector<double> grid, vals;
        LumpBoundary bnd;
        for (const auto& r : rows) {
            grid.push_back(r[0]);
            vals.push_back(r[1]);
            bnd.action_time.push_back(r[2]);
            bnd.barrier_time.push_back(r[3]);
            bnd.barrier_phi.push_back(r[4]);
        }
        sol.tables.emplace_back(std::move(grid), std::move(vals), phibar);
        sol.boundaries.push_back(std::move(bnd));
    }
    sol.diagnostics.phibar = phibar;
    return sol;
}

std::vector<std::string> write_continuous_solution(const fs::path& dir,
                                                   const ContinuousSolution& sol) {
    auto out = open_out(dir / "continuous.csv");
    out << "phi,value\n";
    for (std::size_t i = 0; i < sol.table.size(); ++i)
        out << format_double(sol.table.grid[i]) << ',' << format_double(sol.table.values[i])
            << '\n';
    return {"continuous.csv"};
}

std::vector<std::string> write_arrival_lattice(const fs::path& dir, const ArrivalLattice& lat) {
    std::vector<std::string> files;
    for (int j = 0; j <= lat.total_rights; ++j) {
        for (int k = 0; k <= j; ++k) {
            const ArrivalCell& cell = lat.cell(j, k);
            std::string name = "value_" + std::to_string(j) + "_" + std::to_string(k) + ".csv";
            auto out = open_out(dir / name);
            out << "y,phi,value,action_time,action_kind\n";
            const auto& tbl = cell.table;
            const char kind = static_cast<char>(cell.kind);
            for (std::size_t yi = 0; yi < tbl.y_grid.size(); ++yi) {
                for (std::size_t pj = 0; pj < tbl.phi_grid.size(); ++pj) {
                    std::size_t at = tbl.index(yi, pj);
                    out << format_double(tbl.y_grid[yi]) << ',' << format_double(tbl.phi_grid[pj])
                        << ',';
                    if (tbl.feasible_mask[at]) {
                        out << format_double(tbl.values[at]) << ','
                            << format_double(tbl.action_time[at]);
                    } else {
                        out << "nan,nan";
                    }
                    out << ',' << kind << '\n';
                }
            }
            files.push_back(name);
        }
    }
    return files;
}

ArrivalLattice load_arrival_lattice(const fs::path& dir) {
    json m = read_manifest(dir);
    if (m.at("command") != "solve-arrival") throw ConfigError("policy ref is not a solve-arrival run");
    RunConfig cfg = RunConfig::from_json(m.at("config"));
    ArrivalLattice lat;
    lat.params = cfg.params;
    lat.total_rights = m.at("n").get<int>();
    double phibar = m.at("phibar").get<double>();
    lat.cells.resize(static_cast<std::size_t>(lat.total_rights + 1) * (lat.total_rights + 2) / 2);
    for (int j = 0; j <= lat.total_rights; ++j) {
        for (int k = 0; k <= j; ++k) {
            auto rows = read_csv_numeric(
                dir / ("value_" + std::to_string(j) + "_" + std::to_string(k) + ".csv"), 5);
            std::vector<double> grid, vals, times;
            for (const auto& r : rows) {
                if (r[0] != 0.0) continue;  // policy execution needs the y = 0 slice
                grid.push_back(r[1]);
                vals.push_back(r[2]);
                times.push_back(r[3]);
            }
            if (grid.size() < 2) throw ConfigError("arrival policy CSV missing y=0 slice");
            ArrivalCell& cell = lat.cell(j, k);
            cell.rights_received = j;
            cell.rights_spent = k;
            cell.kind = (j == k) ? ActionKind::Stop : ActionKind::Observe;
            cell.slice = ValueTable(std::move(grid), std::move(vals), phibar);
            cell.action_time0 = std::move(times);
        }
    }
    return lat;
}

std::vector<std::string> write_fixed_comparison(const fs::path& dir, const LumpSolution& adaptive,
                                                const std::vector<FixedScheduleSolution>& fixed) {
    auto out = open_out(dir / "comparison.csv");
    out << "phi,v_adaptive";
    for (const auto& f : fixed) out << ",v_fixed_" << format_double(f.schedule.gaps.front());
    out << "\n";
    const ValueTable& va = adaptive.tables.back();
    for (std::size_t i = 0; i < va.size(); ++i) {
        out << format_double(va.grid[i]) << ',' << format_double(va.values[i]);
        for (const auto& f : fixed) out << ',' << format_double(f.value().values[i]);
        out << '\n';
    }
    std::vector<std::string> files{"comparison.csv"};
    for (const auto& f : fixed) {
        std::string name = "fixed_" + format_double(f.schedule.gaps.front()) + ".csv";
        auto fo = open_out(dir / name);
        fo << "phi";
        for (std::size_t k = 0; k < f.stages.size(); ++k) fo << ",stage_" << k;
        fo << "\n";
        for (std::size_t i = 0; i < f.stages.front().size(); ++i) {
            fo << format_double(f.stages.front().grid[i]);
            for (const auto& st : f.stages) fo << ',' << format_double(st.values[i]);
            fo << '\n';
        }
        files.push_back(name);
    }
    return files;
}

std::vector<std::string> write_risk_estimate(const fs::path& dir, const RiskEstimate& est,
                                             const std::vector<EpisodeResult>* episodes) {
    json j;
    j["mean"] = est.mean;
    j["stderr"] = est.stderr_;
    j["n_episodes"] = est.n_episodes;
    j["seed"] = est.seed;
    j["truncated_episodes"] = est.truncated_episodes;
    auto out = open_out(dir / "risk.json");
    out << j.dump(2) << "\n";
    std::vector<std::string> files{"risk.json"};
    if (episodes) {
        auto csv = open_out(dir / "episodes.csv");
        csv << "theta,tau,false_alarm,delay,observations_used\n";
        for (const auto& e : *episodes) {
            csv << format_double(e.theta) << ',' << format_double(e.tau) << ','
                << (e.false_alarm ? 1 : 0) << ',' << format_double(e.delay) << ','
                << e.observations_used << '\n';
        }
        files.push_back("episodes.csv");
    }
    return files;
}

}  // namespace qdet
