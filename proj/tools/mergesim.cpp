#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mergesim/scenarios.hpp"
#include "mergesim/sim.hpp"

namespace fs = std::filesystem;
using namespace mergesim;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("MERGESIM_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

std::string fmt_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string cell_name(SequencingPolicy p, double pen, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "run_%s_p%03d_s%llu", to_string(p),
                static_cast<int>(std::lround(pen * 100.0)), static_cast<unsigned long long>(seed));
  return buf;
}

// Clearance violations behind a CAV always fail; behind an HDV they fail only
// when the HDVs are non-adversarial and the safe sequence is in use.
bool audits_pass(const RunResult& r) {
  if (r.counters.clearance_violations_cav > 0) return false;
  const bool strict = r.config.sequencing_policy == SequencingPolicy::SS &&
                      r.config.hdv_model == HdvModel::CarFollowing;
  return !(strict && r.counters.clearance_violations_hdv > 0);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void write_events(const RunResult& r, const fs::path& path) {
  std::string text;
  for (const auto& e : r.events) {
    nlohmann::json j = {{"tick", e.tick}, {"t", e.t}, {"vehicle", e.vehicle}, {"type", e.type}};
    if (!e.payload.is_null()) j["payload"] = e.payload;
    text += j.dump() + "\n";
  }
  write_file(path, text);
}

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
};

ScenarioConfig base_config(const CommonOptions& o) {
  ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : load_config(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "override must be key=value: " + kv);
    apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<double> penetration;
  std::optional<int> vehicles;
  std::string out_dir = default_out_dir();
  std::string format = "both";
  bool events = true;
};

int cmd_run(const CommonOptions& common, const RunOptions& o) {
  ScenarioConfig cfg = base_config(common);
  if (o.seed) cfg.seed = *o.seed;
  if (o.policy) cfg.sequencing_policy = policy_from_string(*o.policy);
  if (o.penetration) cfg.penetration_rate = *o.penetration;
  if (o.vehicles) cfg.n_vehicles = *o.vehicles;
  validate(cfg);

  SimOptions opts;
  opts.record_events = o.events;
  const RunResult r = run(cfg, opts);
  fs::create_directories(o.out_dir);
  const fs::path stem = fs::path(o.out_dir) / cell_name(cfg.sequencing_policy, cfg.penetration_rate, cfg.seed);
  if (o.format == "csv" || o.format == "both")
    export_result(r, ExportFormat::CSV, stem.string() + ".csv");
  if (o.format == "json" || o.format == "both")
    export_result(r, ExportFormat::JSON, stem.string() + ".json");
  if (o.events) write_events(r, stem.string() + ".events.jsonl");

  std::cout << "policy=" << to_string(cfg.sequencing_policy) << " seed=" << cfg.seed
            << " penetration=" << cfg.penetration_rate << " exited=" << r.counters.exited << '/'
            << r.counters.spawned << " complete=" << (r.complete ? "yes" : "no");
  if (r.aggregate)
    std::cout << " travel_time=" << fmt_num(r.aggregate->all.travel_time.mean)
              << " l2_energy=" << fmt_num(r.aggregate->all.l2_energy.mean)
              << " fuel=" << fmt_num(r.aggregate->all.fuel.mean);
  std::cout << " clearance_violations=" << r.counters.clearance_violations_cav << '+'
            << r.counters.clearance_violations_hdv << '\n';
  if (!r.complete) std::cerr << "run stopped at t_max before all vehicles exited\n";
  if (!audits_pass(r)) std::cerr << "clearance audit failed\n";
  return r.complete && audits_pass(r) ? 0 : 1;
}

struct SweepOptions {
  std::vector<double> penetrations{0.2, 0.4, 0.6};
  std::vector<std::uint64_t> seeds;
  int seed_count = 20;
  std::string out_dir = default_out_dir();
};

int cmd_sweep(const CommonOptions& common, SweepOptions o) {
  const ScenarioConfig base = base_config(common);
  if (o.seeds.empty())
    for (int s = 1; s <= o.seed_count; ++s) o.seeds.push_back(static_cast<std::uint64_t>(s));
  fs::create_directories(o.out_dir);

  struct Cell {
    bool ok = false;
    double tt = 0.0, e = 0.0, fuel = 0.0;
  };
  std::map<std::pair<int, double>, std::map<std::uint64_t, Cell>> cells;
  std::string csv = "policy,penetration,seed,metric,value\n";
  bool all_ok = true;
  for (double pen : o.penetrations) {
    for (auto policy : {SequencingPolicy::SS, SequencingPolicy::SDF}) {
      for (auto seed : o.seeds) {
        ScenarioConfig cfg = base;
        cfg.penetration_rate = pen;
        cfg.sequencing_policy = policy;
        cfg.seed = seed;
        Cell c;
        try {
          validate(cfg);
          SimOptions opts;
          opts.record_events = false;
          const RunResult r = run(cfg, opts);
          c.ok = r.complete && audits_pass(r) && r.aggregate.has_value();
          if (r.aggregate) {
            c.tt = r.aggregate->all.travel_time.mean;
            c.e = r.aggregate->all.l2_energy.mean;
            c.fuel = r.aggregate->all.fuel.mean;
          }
        } catch (const Error& err) {
          std::cerr << "cell " << cell_name(policy, pen, seed) << " failed: " << err.what() << '\n';
        }
        if (!c.ok) {
          all_ok = false;
          std::cerr << "cell " << cell_name(policy, pen, seed) << " flagged\n";
        }
        const std::string prefix = std::string(to_string(policy)) + ',' + fmt_num(pen) + ',' +
                                   std::to_string(seed) + ',';
        csv += prefix + "travel_time," + fmt_num(c.tt) + '\n';
        csv += prefix + "l2_energy," + fmt_num(c.e) + '\n';
        csv += prefix + "fuel," + fmt_num(c.fuel) + '\n';
        csv += prefix + "ok," + (c.ok ? "1" : "0") + '\n';
        cells[{static_cast<int>(policy), pen}][seed] = c;
      }
    }
  }
  write_file(fs::path(o.out_dir) / "sweep.csv", csv);

  std::printf("%-12s %10s %10s %10s %10s %10s %10s\n", "penetration", "TT_ss", "TT_sdf", "E_ss",
              "E_sdf", "fuel_ss", "fuel_sdf");
  for (double pen : o.penetrations) {
    double m[2][3] = {};
    for (int p = 0; p < 2; ++p) {
      const auto& row = cells[{p, pen}];
      for (const auto& [seed, c] : row) {
        m[p][0] += c.tt / static_cast<double>(row.size());
        m[p][1] += c.e / static_cast<double>(row.size());
        m[p][2] += c.fuel / static_cast<double>(row.size());
      }
    }
    std::printf("%-12.2f %10.3f %10.3f %10.3f %10.3f %10.3f %10.3f\n", pen, m[0][0], m[1][0],
                m[0][1], m[1][1], m[0][2], m[1][2]);
  }
  std::printf("runs: %zu\n", o.penetrations.size() * 2 * o.seeds.size());
  return all_ok ? 0 : 1;
}

int cmd_fig6(const CommonOptions& common, const std::string& out_dir) {
  const ScenarioConfig base = base_config(common);
  fs::create_directories(out_dir);
  bool ok = true;
  for (auto policy : {SequencingPolicy::SS, SequencingPolicy::SDF}) {
    const FiveVehicleRun r = run_five_vehicle(policy, {}, base);
    std::map<std::uint32_t, std::string> role = {
        {r.ids.lead_side_cav.value, "lead_side_cav"},
        {r.ids.main_cav.value, "main_cav"},
        {r.ids.side_hdv.value, "side_hdv"},
        {r.ids.trailing_side_cav.value, "trailing_side_cav"},
        {r.ids.main_hdv.value, "main_hdv"}};
    std::string csv = "t,id,role,road,class,x,v,u\n";
    for (const auto& p : r.result.traces)
      csv += fmt_num(p.t) + ',' + std::to_string(p.id) + ',' + role[p.id] + ',' +
             std::to_string(road_index(p.road)) + ',' + to_string(p.cls) + ',' + fmt_num(p.x) +
             ',' + fmt_num(p.v) + ',' + fmt_num(p.u) + '\n';
    write_file(fs::path(out_dir) / (std::string("fig6_") + to_string(policy) + ".csv"), csv);
    std::cout << to_string(policy) << ":";
    for (const auto& [id, v] : r.min_speed) std::cout << ' ' << role[id] << "=" << fmt_num(v);
    std::cout << '\n';
    ok = ok && r.result.complete && audits_pass(r.result);
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-road merging simulator with mixed CAV/HDV traffic"};
  app.require_subcommand(1);
  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", common.config, "Scenario config file (key = value)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", common.overrides, "Config override key=value (repeatable)");
  };

  RunOptions ro;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario and export results");
  add_common(run_cmd);
  run_cmd->add_option("--seed", ro.seed, "Random seed");
  run_cmd->add_option("--policy", ro.policy, "Sequencing policy")
      ->check(CLI::IsMember({"ss", "sdf"}));
  run_cmd->add_option("--penetration", ro.penetration, "CAV penetration rate in [0, 1]");
  run_cmd->add_option("--vehicles", ro.vehicles, "Total number of vehicles");
  run_cmd->add_option("--out-dir", ro.out_dir, "Output directory (env MERGESIM_OUT_DIR)");
  run_cmd->add_option("--format", ro.format, "Export format")
      ->check(CLI::IsMember({"csv", "json", "both"}));
  run_cmd->add_flag("!--no-events", ro.events, "Skip the event log");

  SweepOptions so;
  auto* sweep_cmd = app.add_subcommand("sweep", "Compare both policies over penetrations and seeds");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--penetrations", so.penetrations, "Penetration rates")->delimiter(',');
  sweep_cmd->add_option("--seeds", so.seeds, "Explicit seed list")->delimiter(',');
  sweep_cmd->add_option("--seed-count", so.seed_count, "Seeds 1..N when --seeds is absent")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out-dir", so.out_dir, "Output directory (env MERGESIM_OUT_DIR)");

  std::string fig_dir = default_out_dir();
  auto* fig_cmd = app.add_subcommand("fig6", "Five-vehicle scenario velocity traces under both policies");
  add_common(fig_cmd);
  fig_cmd->add_option("--out-dir", fig_dir, "Output directory (env MERGESIM_OUT_DIR)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(common, ro);
    if (*sweep_cmd) return cmd_sweep(common, so);
    if (*fig_cmd) return cmd_fig6(common, fig_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
