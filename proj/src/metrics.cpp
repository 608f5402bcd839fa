#include "mergesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mergesim/sim.hpp"

namespace mergesim {

void accumulate(VehicleMetrics& m, double u, const VehicleState& state, double active,
                const FuelCoefficients& fuel) {
  if (active <= 0.0) return;
  m.l2_energy += 0.5 * u * u * active;
  m.fuel += (cruise_fuel_rate(fuel, state.velocity) + accel_fuel_rate(fuel, state.velocity, u)) *
            active;
}

void track_rear_gap(VehicleMetrics& m, double residual) {
  if (!m.min_rear_gap_residual || residual < *m.min_rear_gap_residual)
    m.min_rear_gap_residual = residual;
}

namespace {

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

GroupMetrics group_of(const std::vector<const VehicleMetrics*>& rows) {
  std::vector<double> tt, e, f;
  for (const auto* r : rows) {
    tt.push_back(r->travel_time);
    e.push_back(r->l2_energy);
    f.push_back(r->fuel);
  }
  return {stat_of(tt), stat_of(e), stat_of(f)};
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

std::vector<const VehicleMetrics*> exited_rows(const std::vector<VehicleMetrics>& rows) {
  std::vector<const VehicleMetrics*> out;
  for (const auto& r : rows)
    if (r.t_exit) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const VehicleMetrics* a, const VehicleMetrics* b) { return a->id < b->id; });
  return out;
}

nlohmann::json stat_json(const Stat& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}};
}

nlohmann::json group_json(const GroupMetrics& g) {
  return {{"travel_time", stat_json(g.travel_time)},
          {"l2_energy", stat_json(g.l2_energy)},
          {"fuel", stat_json(g.fuel)}};
}

nlohmann::json config_json(const ScenarioConfig& c) {
  return {{"L", c.L},
          {"L_SZ", c.L_SZ},
          {"L_AZ", c.L_AZ},
          {"phi", c.phi},
          {"delta", c.delta},
          {"barrier_margin", c.barrier_margin},
          {"v_min", c.v_min},
          {"v_max", c.v_max},
          {"u_min", c.u_min},
          {"u_max", c.u_max},
          {"T_d", c.T_d},
          {"H", c.H},
          {"beta1", c.beta1},
          {"c3", c.c3},
          {"k", {c.k1, c.k2, c.k3, c.k4, c.k5, c.k6}},
          {"gamma", c.gamma},
          {"arrival_rate_per_road", c.arrival_rate_per_road},
          {"penetration_rate", c.penetration_rate},
          {"init_speed_range", {c.init_speed_lo, c.init_speed_hi}},
          {"fuel_coeffs",
           {c.fuel.w0, c.fuel.w1, c.fuel.w2, c.fuel.w3, c.fuel.r0, c.fuel.r1, c.fuel.r2}},
          {"seed", c.seed},
          {"alpha_oracle", c.alpha_oracle},
          {"sequencing_policy", to_string(c.sequencing_policy)},
          {"vehicles", c.n_vehicles},
          {"t_max", c.t_max},
          {"enumeration_cap", c.enumeration_cap},
          {"hdv_model", to_string(c.hdv_model)},
          {"hdv_aggression", c.hdv_aggression}};
}

nlohmann::json opt_json(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

}  // namespace

AggregateMetrics aggregate(const std::vector<VehicleMetrics>& rows) {
  const auto done = exited_rows(rows);
  if (done.empty()) throw Error(ErrorCode::EmptyAggregate, "aggregate: no exited vehicle");
  std::vector<const VehicleMetrics*> cav, hdv;
  for (const auto* r : done) (r->cls == VehicleClass::CAV ? cav : hdv).push_back(r);
  return {group_of(done), group_of(cav), group_of(hdv)};
}

nlohmann::json to_json(const AggregateMetrics& agg) {
  return {{"all", group_json(agg.all)}, {"cav", group_json(agg.cav)}, {"hdv", group_json(agg.hdv)}};
}

std::string to_csv(const RunResult& result) {
  std::ostringstream out;
  out << "id,class,road,t_entry,t_exit,travel_time,l2_energy,fuel,min_rear_gap_residual,"
         "mp_clearance_residual\n";
  const auto done = exited_rows(result.metrics);
  for (const auto* r : done) {
    out << r->id.value << ',' << to_string(r->cls) << ',' << road_index(r->road) << ','
        << num(r->t_entry) << ',' << opt_num(r->t_exit) << ',' << num(r->travel_time) << ','
        << num(r->l2_energy) << ',' << num(r->fuel) << ',' << opt_num(r->min_rear_gap_residual)
        << ',' << opt_num(r->mp_clearance_residual) << '\n';
  }
  if (done.empty()) return out.str();

  const auto agg = aggregate(result.metrics);
  out << "\n# summary\ngroup,metric,mean,sd,count\n";
  const std::pair<const char*, const GroupMetrics*> groups[] = {
      {"all", &agg.all}, {"cav", &agg.cav}, {"hdv", &agg.hdv}};
  for (const auto& [name, g] : groups) {
    const std::pair<const char*, const Stat*> stats[] = {
        {"travel_time", &g->travel_time}, {"l2_energy", &g->l2_energy}, {"fuel", &g->fuel}};
    for (const auto& [metric, s] : stats)
      out << name << ',' << metric << ',' << num(s->mean) << ',' << num(s->sd) << ',' << s->count
          << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const RunResult& result) {
  nlohmann::json j;
  j["seed"] = result.seed;
  j["config"] = config_json(result.config);
  j["complete"] = result.complete;
  j["t_end"] = result.t_end;
  j["ticks"] = result.ticks;
  const auto& c = result.counters;
  j["counters"] = {{"spawned", c.spawned},
                   {"exited", c.exited},
                   {"spawn_deferrals", c.spawn_deferrals},
                   {"resequence_ticks", c.resequence_ticks},
                   {"mode_changes", c.mode_changes},
                   {"qp_retries", c.qp_retries},
                   {"qp_fallbacks", c.qp_fallbacks},
                   {"yields", c.yields},
                   {"emergency_stops", c.emergency_stops},
                   {"clearance_violations_cav", c.clearance_violations_cav},
                   {"clearance_violations_hdv", c.clearance_violations_hdv}};
  j["aggregate"] = result.aggregate ? to_json(*result.aggregate) : nlohmann::json(nullptr);
  j["vehicles"] = nlohmann::json::array();
  for (const auto& m : result.metrics) {
    j["vehicles"].push_back({{"id", m.id.value},
                             {"class", to_string(m.cls)},
                             {"road", road_index(m.road)},
                             {"t_entry", m.t_entry},
                             {"t_exit", opt_json(m.t_exit)},
                             {"travel_time", m.t_exit ? nlohmann::json(m.travel_time) : nlohmann::json(nullptr)},
                             {"l2_energy", m.l2_energy},
                             {"fuel", m.fuel},
                             {"min_rear_gap_residual", opt_json(m.min_rear_gap_residual)},
                             {"mp_clearance_residual", opt_json(m.mp_clearance_residual)}});
  }
  j["events"] = nlohmann::json::array();
  for (const auto& e : result.events)
    j["events"].push_back(
        {{"tick", e.tick}, {"t", e.t}, {"vehicle", e.vehicle}, {"type", e.type}, {"payload", e.payload}});
  return j;
}

void export_result(const RunResult& result, ExportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  if (format == ExportFormat::CSV)
    out << to_csv(result);
  else
    out << to_json(result).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

std::vector<VehicleMetrics> parse_csv_rows(const std::string& csv) {
  std::vector<VehicleMetrics> rows;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') break;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw Error(ErrorCode::Io, "malformed CSV row: " + line);
    VehicleMetrics m;
    m.id = VehicleId{static_cast<std::uint32_t>(std::stoul(f[0]))};
    m.cls = f[1] == "HDV" ? VehicleClass::HDV : VehicleClass::CAV;
    m.road = std::stoi(f[2]) == 1 ? RoadId::Main : RoadId::Side;
    m.t_entry = std::stod(f[3]);
    m.t_exit = opt(f[4]);
    m.travel_time = std::stod(f[5]);
    m.l2_energy = std::stod(f[6]);
    m.fuel = std::stod(f[7]);
    m.min_rear_gap_residual = opt(f[8]);
    m.mp_clearance_residual = opt(f[9]);
    rows.push_back(m);
  }
  return rows;
}

}  // namespace mergesim
