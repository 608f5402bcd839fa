#include "mergesim/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mergesim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::TableInconsistency: return "TableInconsistency";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySafeSet: return "EmptySafeSet";
    case ErrorCode::NoCavInSz: return "NoCavInSz";
    case ErrorCode::MisroutedConstraint: return "MisroutedConstraint";
    case ErrorCode::NoFiniteSolution: return "NoFiniteSolution";
    case ErrorCode::InfeasibleStop: return "InfeasibleStop";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::EmptyAggregate: return "EmptyAggregate";
    case ErrorCode::OracleSizeLimit: return "OracleSizeLimit";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

const char* to_string(VehicleClass c) { return c == VehicleClass::CAV ? "CAV" : "HDV"; }

const char* to_string(Zone z) {
  switch (z) {
    case Zone::SequencingZone: return "SZ";
    case Zone::AwarenessZone: return "AZ";
    case Zone::Exited: return "Exited";
  }
  return "?";
}

const char* to_string(HdvModel m) {
  switch (m) {
    case HdvModel::ConstantSpeed: return "constant_speed";
    case HdvModel::CarFollowing: return "car_following";
    case HdvModel::Aggressive: return "aggressive";
  }
  return "?";
}

HdvModel hdv_model_from_string(const std::string& s) {
  if (s == "constant_speed") return HdvModel::ConstantSpeed;
  if (s == "car_following") return HdvModel::CarFollowing;
  if (s == "aggressive") return HdvModel::Aggressive;
  throw Error(ErrorCode::InvalidConfig, "unknown hdv model '" + s + "'");
}

const char* to_string(SequencingPolicy p) { return p == SequencingPolicy::SS ? "ss" : "sdf"; }

SequencingPolicy policy_from_string(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ss") return SequencingPolicy::SS;
  if (lower == "sdf") return SequencingPolicy::SDF;
  throw Error(ErrorCode::InvalidConfig, "unknown sequencing policy '" + s + "'");
}

double kmh_to_ms(double kmh) { return kmh / 3.6; }

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, msg);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double out = 0.0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, out);
  require(ec == std::errc{} && ptr == end, "key '" + key + "': not a number: '" + text + "'");
  require(std::isfinite(out), "key '" + key + "': value must be finite");
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  require(cfg.L > 0.0 && cfg.L_SZ > 0.0 && cfg.L_AZ > 0.0, "zone lengths must be positive");
  require(std::abs(cfg.L_SZ + cfg.L_AZ - cfg.L) < 1e-9, "L_SZ + L_AZ must equal L");
  require(cfg.v_min >= 0.0 && cfg.v_min < cfg.v_max, "need 0 <= v_min < v_max");
  require(cfg.u_min < 0.0 && cfg.u_max > 0.0, "need u_min < 0 < u_max");
  require(cfg.T_d > 0.0, "T_d must be positive");
  require(cfg.H >= 1, "H must be >= 1");
  require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "gamma must lie in (0,1)");
  require(cfg.phi >= 0.0 && cfg.delta >= 0.0, "phi and delta must be non-negative");
  require(cfg.barrier_margin >= 0.0, "barrier_margin must be non-negative");
  require(cfg.beta1 >= 0.0 && cfg.c3 >= 0.0, "beta1 and c3 must be non-negative");
  for (double k : {cfg.k1, cfg.k2, cfg.k3, cfg.k4, cfg.k5, cfg.k6})
    require(k > 0.0, "class-K gains must be positive");
  require(cfg.arrival_rate_per_road >= 0.0, "arrival rate must be non-negative");
  require(cfg.penetration_rate >= 0.0 && cfg.penetration_rate <= 1.0,
          "penetration_rate must lie in [0,1]");
  require(cfg.init_speed_lo > 0.0 && cfg.init_speed_lo <= cfg.init_speed_hi &&
              cfg.init_speed_hi <= cfg.v_max,
          "init speed range must satisfy 0 < lo <= hi <= v_max");
  require(cfg.alpha_oracle >= 0.0 && cfg.alpha_oracle <= 1.0, "alpha_oracle must lie in [0,1]");
  require(cfg.n_vehicles >= 1, "vehicles must be >= 1");
  require(cfg.t_max > 0.0, "t_max must be positive");
  require(cfg.enumeration_cap >= 1, "enumeration_cap must be >= 1");
  require(cfg.hdv_aggression >= 0.0 && cfg.hdv_aggression <= 1.0,
          "hdv_aggression must lie in [0,1]");
  for (int k = 0; k <= 1000; ++k) {
    const double v = cfg.v_max * k / 1000.0;
    require(cruise_fuel_rate(cfg.fuel, v) >= 0.0, "fuel cruise polynomial negative on [0, v_max]");
  }
}

void apply_config_entry(ScenarioConfig& cfg, const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  bool kmh = false;
  if (key.size() > 4 && key.ends_with("_kmh")) {
    key = key.substr(0, key.size() - 4);
    kmh = true;
  }
  auto speed = [&](double v) { return kmh ? kmh_to_ms(v) : v; };
  auto num = [&]() { return parse_double(raw_key, value); };

  if (kmh) {
    require(key == "v_min" || key == "v_max" || key == "init_speed_range",
            "key '" + raw_key + "': km/h suffix only applies to speeds");
  }

  if (key == "L") cfg.L = num();
  else if (key == "L_SZ") cfg.L_SZ = num();
  else if (key == "L_AZ") cfg.L_AZ = num();
  else if (key == "phi") cfg.phi = num();
  else if (key == "delta") cfg.delta = num();
  else if (key == "barrier_margin") cfg.barrier_margin = num();
  else if (key == "v_min") cfg.v_min = speed(num());
  else if (key == "v_max") cfg.v_max = speed(num());
  else if (key == "u_min") cfg.u_min = num();
  else if (key == "u_max") cfg.u_max = num();
  else if (key == "T_d") cfg.T_d = num();
  else if (key == "H") {
    const double h = num();
    require(h == std::floor(h), "H must be an integer");
    cfg.H = static_cast<int>(h);
  }
  else if (key == "beta1") cfg.beta1 = num();
  else if (key == "c3") cfg.c3 = num();
  else if (key == "k1") cfg.k1 = num();
  else if (key == "k2") cfg.k2 = num();
  else if (key == "k3") cfg.k3 = num();
  else if (key == "k4") cfg.k4 = num();
  else if (key == "k5") cfg.k5 = num();
  else if (key == "k6") cfg.k6 = num();
  else if (key == "gamma") cfg.gamma = num();
  else if (key == "arrival_rate_per_road") cfg.arrival_rate_per_road = num();
  else if (key == "penetration_rate") cfg.penetration_rate = num();
  else if (key == "init_speed_range") {
    const auto v = parse_list(raw_key, value);
    require(v.size() == 2, "init_speed_range needs two values");
    cfg.init_speed_lo = speed(v[0]);
    cfg.init_speed_hi = speed(v[1]);
  } else if (key == "fuel_coeffs") {
    const auto v = parse_list(raw_key, value);
    require(v.size() == 7, "fuel_coeffs needs seven values (w0..w3, r0..r2)");
    cfg.fuel = {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  } else if (key == "seed") {
    const double s = num();
    require(s >= 0.0 && s == std::floor(s), "seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "alpha_oracle") cfg.alpha_oracle = num();
  else if (key == "sequencing_policy") cfg.sequencing_policy = policy_from_string(trim(value));
  else if (key == "vehicles") {
    const double n = num();
    require(n >= 1 && n == std::floor(n), "vehicles must be a positive integer");
    cfg.n_vehicles = static_cast<int>(n);
  } else if (key == "t_max") cfg.t_max = num();
  else if (key == "enumeration_cap") {
    const double n = num();
    require(n >= 1 && n == std::floor(n), "enumeration_cap must be a positive integer");
    cfg.enumeration_cap = static_cast<std::size_t>(n);
  } else if (key == "hdv_model") cfg.hdv_model = hdv_model_from_string(trim(value));
  else if (key == "hdv_aggression") cfg.hdv_aggression = num();
  else throw Error(ErrorCode::InvalidConfig, "unknown config key '" + raw_key + "'");
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Zone zone_for_position(double x, const ScenarioConfig& cfg) {
  if (x >= cfg.L) return Zone::Exited;
  if (x >= cfg.sz_end()) return Zone::AwarenessZone;
  return Zone::SequencingZone;
}

std::vector<VehicleRecord> snapshot(const std::vector<VehicleRecord>& records, Zone zone,
                                    const SnapshotFilter& filter) {
  std::vector<VehicleRecord> out;
  for (const auto& r : records) {
    if (r.zone != zone) continue;
    if (filter.road && r.road != *filter.road) continue;
    if (filter.cls && r.cls != *filter.cls) continue;
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const VehicleRecord& a, const VehicleRecord& b) {
    if (a.state.position != b.state.position) return a.state.position > b.state.position;
    if (a.road != b.road) return a.road < b.road;
    return a.id < b.id;
  });
  return out;
}

const VehicleRecord* find_record(const std::vector<VehicleRecord>& records, VehicleId id) {
  for (const auto& r : records)
    if (r.id == id) return &r;
  return nullptr;
}

const VehicleRecord& require_record(const std::vector<VehicleRecord>& records, VehicleId id) {
  const auto* r = find_record(records, id);
  if (r == nullptr)
    throw Error(ErrorCode::TableInconsistency,
                "vehicle " + std::to_string(id.value) + " missing from table");
  return *r;
}

}  // namespace mergesim
