#include "mergesim/sequencing.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace mergesim {

const char* to_string(SequenceSource s) {
  switch (s) {
    case SequenceSource::SDF: return "sdf";
    case SequenceSource::SafeGenerated: return "safe_generated";
    case SequenceSource::ConstructiveFallback: return "constructive_fallback";
  }
  return "?";
}

std::size_t MergeSequence::position_of(VehicleId id) const {
  for (std::size_t k = 0; k < order.size(); ++k)
    if (order[k] == id) return k + 1;
  return 0;
}

const Assignment* SequencingOutcome::assignment_for(VehicleId cav) const {
  for (const auto& a : assignments)
    if (a.cav == cav) return &a;
  return nullptr;
}

MergeSequence sdf_sequence(const std::vector<VehicleRecord>& sz_records) {
  std::vector<const VehicleRecord*> sorted;
  sorted.reserve(sz_records.size());
  for (const auto& r : sz_records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const VehicleRecord* a, const VehicleRecord* b) {
    // smaller remaining distance L - x first
    if (a->state.position != b->state.position) return a->state.position > b->state.position;
    if (a->road != b->road) return a->road < b->road;
    return a->id < b->id;
  });
  MergeSequence seq;
  seq.source = SequenceSource::SDF;
  for (const auto* r : sorted) seq.order.push_back(r->id);
  return seq;
}

NeighborPair neighbors(const MergeSequence& seq, VehicleId i,
                       const std::vector<VehicleRecord>& table) {
  const std::size_t pos = seq.position_of(i);
  if (pos == 0)
    throw Error(ErrorCode::TableInconsistency,
                "vehicle " + std::to_string(i.value) + " not in sequence");
  const RoadId opposite = other(require_record(table, i).road);
  const std::size_t k = pos - 1;

  NeighborPair out;
  for (std::size_t j = k + 1; j < seq.order.size(); ++j) {
    if (require_record(table, seq.order[j]).road == opposite) {
      out.behind = seq.order[j];
      break;
    }
  }
  for (std::size_t j = k; j-- > 0;) {
    if (require_record(table, seq.order[j]).road == opposite) {
      out.ahead = seq.order[j];
      break;
    }
  }
  return out;
}

double delta_minus(const VehicleRecord& i, const VehicleRecord& j, const ScenarioConfig& cfg) {
  return i.state.position - j.state.position - cfg.Phi(j.state.position) * j.state.velocity -
         cfg.delta;
}

double delta_plus(const VehicleRecord& i, const VehicleRecord& j, const ScenarioConfig& cfg) {
  return j.state.position - i.state.position - cfg.Phi(i.state.position) * i.state.velocity -
         cfg.delta;
}

Assignment merging_pair(const VehicleRecord& i, const VehicleRecord* i_hat_plus,
                        const VehicleRecord* i_hat_minus, const ScenarioConfig& cfg) {
  Assignment a;
  a.cav = i.id;
  if (i_hat_plus != nullptr) {
    a.candidate_ahead = i_hat_plus->id;
    if (delta_plus(i, *i_hat_plus, cfg) < 0.0) a.ahead = i_hat_plus->id;
  }
  if (i_hat_minus != nullptr) {
    a.candidate_behind = i_hat_minus->id;
    if (delta_minus(i, *i_hat_minus, cfg) < 0.0) a.behind = i_hat_minus->id;
  }
  return a;
}

std::vector<Assignment> assignments_for(const MergeSequence& seq,
                                        const std::vector<VehicleRecord>& table,
                                        const ScenarioConfig& cfg) {
  std::vector<Assignment> out;
  for (const auto id : seq.order) {
    const auto& rec = require_record(table, id);
    if (!rec.is_cav()) continue;
    const auto nb = neighbors(seq, id, table);
    const VehicleRecord* plus = nb.ahead ? &require_record(table, *nb.ahead) : nullptr;
    const VehicleRecord* minus = nb.behind ? &require_record(table, *nb.behind) : nullptr;
    out.push_back(merging_pair(rec, plus, minus, cfg));
  }
  return out;
}

bool is_safe(const MergeSequence& seq, const std::vector<VehicleRecord>& table,
             const ScenarioConfig& cfg) {
  for (const auto& a : assignments_for(seq, table, cfg)) {
    if (a.behind && require_record(table, *a.behind).is_hdv()) return false;
  }
  return true;
}

std::size_t interleaving_count(std::size_t n1, std::size_t n2) {
  const std::size_t n = n1 + n2;
  const std::size_t k = std::min(n1, n2);
  std::size_t result = 1;
  for (std::size_t j = 1; j <= k; ++j) {
    const std::size_t num = n - k + j;
    if (result > std::numeric_limits<std::size_t>::max() / num)
      return std::numeric_limits<std::size_t>::max();
    result = result * num / j;
  }
  return result;
}

namespace {

// Dense per-snapshot view used by the enumeration hot path.
struct CompactTable {
  std::vector<VehicleId> ids;
  std::vector<int> road;  // 0 or 1
  std::vector<bool> cav;
  // unsafe_behind[a * n + b]: b would be a thresholded HDV i- of CAV a
  std::vector<char> unsafe_behind;
  std::size_t n = 0;
};

CompactTable make_compact(const std::vector<VehicleId>& road1, const std::vector<VehicleId>& road2,
                          const std::vector<VehicleRecord>& table, const ScenarioConfig& cfg) {
  CompactTable c;
  std::vector<const VehicleRecord*> recs;
  for (auto id : road1) {
    c.ids.push_back(id);
    c.road.push_back(0);
    recs.push_back(&require_record(table, id));
  }
  for (auto id : road2) {
    c.ids.push_back(id);
    c.road.push_back(1);
    recs.push_back(&require_record(table, id));
  }
  c.n = c.ids.size();
  for (const auto* r : recs) c.cav.push_back(r->is_cav());
  c.unsafe_behind.assign(c.n * c.n, 0);
  for (std::size_t a = 0; a < c.n; ++a) {
    if (!c.cav[a]) continue;
    for (std::size_t b = 0; b < c.n; ++b) {
      if (c.road[a] == c.road[b] || c.cav[b]) continue;
      c.unsafe_behind[a * c.n + b] = delta_minus(*recs[a], *recs[b], cfg) < 0.0 ? 1 : 0;
    }
  }
  return c;
}

// Depth-first generation of interleavings, pruning as soon as a CAV receives
// an unsafe HDV as its cross-road follower.
class SafeInterleaver {
 public:
  SafeInterleaver(const CompactTable& c, std::size_t n1) : c_(c), n1_(n1) {}

  std::vector<std::vector<int>> run() {
    seq_.clear();
    out_.clear();
    recurse(0, 0, 0);
    return std::move(out_);
  }

 private:
  void recurse(std::size_t i1, std::size_t i2, std::size_t run_start) {
    if (seq_.size() == c_.n) {
      out_.push_back(seq_);
      return;
    }
    if (i1 < n1_) place(static_cast<int>(i1), i1 + 1, i2, run_start);
    if (i2 < c_.n - n1_) place(static_cast<int>(n1_ + i2), i1, i2 + 1, run_start);
  }

  void place(int idx, std::size_t i1, std::size_t i2, std::size_t run_start) {
    std::size_t next_run = run_start;
    if (!seq_.empty() && c_.road[seq_.back()] != c_.road[idx]) {
      // every vehicle of the closing run gets `idx` as its cross-road follower
      for (std::size_t k = run_start; k < seq_.size(); ++k) {
        const int a = seq_[k];
        if (c_.unsafe_behind[static_cast<std::size_t>(a) * c_.n + idx]) return;
      }
      next_run = seq_.size();
    }
    seq_.push_back(idx);
    recurse(i1, i2, next_run);
    seq_.pop_back();
  }

  const CompactTable& c_;
  std::size_t n1_;
  std::vector<int> seq_;
  std::vector<std::vector<int>> out_;
};

std::vector<VehicleId> ids_on_road(const MergeSequence& seq, const std::vector<VehicleRecord>& table,
                                   RoadId road) {
  std::vector<VehicleId> out;
  for (auto id : seq.order)
    if (require_record(table, id).road == road) out.push_back(id);
  return out;
}

std::vector<VehicleRecord> records_for(const std::vector<VehicleId>& a,
                                       const std::vector<VehicleId>& b,
                                       const std::vector<VehicleRecord>& table) {
  std::vector<VehicleRecord> out;
  for (auto id : a) out.push_back(require_record(table, id));
  for (auto id : b) out.push_back(require_record(table, id));
  return out;
}

}  // namespace

std::vector<MergeSequence> enumerate_safe_sequences(const std::vector<VehicleId>& road1,
                                                    const std::vector<VehicleId>& road2,
                                                    const std::vector<VehicleRecord>& table,
                                                    const ScenarioConfig& cfg, std::size_t cap) {
  std::vector<MergeSequence> out;
  if (interleaving_count(road1.size(), road2.size()) > cap) {
    const auto sub = records_for(road1, road2, table);
    const MergeSequence s0 = sdf_sequence(sub);
    bool has_cav = std::any_of(sub.begin(), sub.end(), [](const auto& r) { return r.is_cav(); });
    if (has_cav) out.push_back(constructive_safe_sequence(s0, sub, cfg));
    if (is_safe(s0, sub, cfg) && (out.empty() || out.front().order != s0.order))
      out.push_back(s0);
    return out;
  }

  const CompactTable c = make_compact(road1, road2, table, cfg);
  SafeInterleaver gen(c, road1.size());
  for (const auto& idxs : gen.run()) {
    MergeSequence s;
    s.source = SequenceSource::SafeGenerated;
    s.order.reserve(idxs.size());
    for (int k : idxs) s.order.push_back(c.ids[static_cast<std::size_t>(k)]);
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t disruption(const MergeSequence& s, const MergeSequence& s0) {
  if (s.order.size() != s0.order.size())
    throw Error(ErrorCode::LengthMismatch, "disruption: sequences differ in length");
  std::size_t d = 0;
  for (std::size_t k = 0; k < s.order.size(); ++k)
    if (s.order[k] != s0.order[k]) ++d;
  return d;
}

MergeSequence select_optimal(const std::vector<MergeSequence>& safe_set, const MergeSequence& s0,
                             const std::vector<VehicleRecord>& table) {
  if (safe_set.empty()) throw Error(ErrorCode::EmptySafeSet, "select_optimal: empty safe set");

  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  std::vector<const MergeSequence*> minimal;
  for (const auto& s : safe_set) {
    const std::size_t d = disruption(s, s0);
    if (d < best_d) {
      best_d = d;
      minimal.clear();
    }
    if (d == best_d) minimal.push_back(&s);
  }
  if (minimal.size() == 1) return *minimal.front();

  double sum_v[2] = {0.0, 0.0};
  int count[2] = {0, 0};
  for (const auto& r : table) {
    if (r.zone != Zone::SequencingZone) continue;
    const int k = r.road == RoadId::Main ? 0 : 1;
    sum_v[k] += r.state.velocity;
    ++count[k];
  }
  const double avg_main = count[0] > 0 ? sum_v[0] / count[0] : 0.0;
  const double avg_side = count[1] > 0 ? sum_v[1] / count[1] : 0.0;
  const bool main_priority = avg_main >= avg_side;

  auto score = [&](const MergeSequence& s) {
    long long acc = 0;
    for (std::size_t k = 0; k < s.order.size(); ++k) {
      const long long pos = static_cast<long long>(k) + 1;
      acc += require_record(table, s.order[k]).road == RoadId::Main ? pos : -pos;
    }
    return main_priority ? acc : -acc;
  };

  const MergeSequence* best = nullptr;
  long long best_score = 0;
  for (const auto* s : minimal) {
    const long long sc = score(*s);
    if (best == nullptr || sc < best_score || (sc == best_score && s->order < best->order)) {
      best = s;
      best_score = sc;
    }
  }
  return *best;
}

MergeSequence constructive_safe_sequence(const MergeSequence& s0,
                                         const std::vector<VehicleRecord>& table,
                                         const ScenarioConfig& cfg) {
  const VehicleRecord* first_cav = nullptr;
  for (auto id : s0.order) {
    const auto& r = require_record(table, id);
    if (r.is_cav()) {
      first_cav = &r;
      break;
    }
  }
  if (first_cav == nullptr)
    throw Error(ErrorCode::NoCavInSz, "constructive_safe_sequence: no CAV in sequencing zone");

  if (is_safe(s0, table, cfg)) return s0;

  // Everything before the first CAV is an HDV, so the remaining vehicles keep
  // their s0 order and the CAV's road tail (the CAV included) moves last.
  const RoadId r = first_cav->road;
  const std::size_t cav_pos = s0.position_of(first_cav->id);
  MergeSequence out;
  out.source = SequenceSource::ConstructiveFallback;
  std::vector<VehicleId> tail;
  for (std::size_t k = 0; k < s0.order.size(); ++k) {
    const auto id = s0.order[k];
    const bool in_tail = require_record(table, id).road == r && k + 1 >= cav_pos;
    (in_tail ? tail : out.order).push_back(id);
  }
  out.order.insert(out.order.end(), tail.begin(), tail.end());
  return out;
}

SequencingOutcome sdf_outcome(const std::vector<VehicleRecord>& sz_snapshot,
                              const ScenarioConfig& cfg) {
  SequencingOutcome out;
  out.sequence = sdf_sequence(sz_snapshot);
  out.assignments = assignments_for(out.sequence, sz_snapshot, cfg);
  out.resequenced = false;
  return out;
}

std::optional<MergeSequence> carried_sequence(const std::optional<SequencingOutcome>& prev,
                                              const std::vector<VehicleRecord>& sz_snapshot,
                                              const ScenarioConfig& cfg) {
  if (!prev || !prev->resequenced) return std::nullopt;
  MergeSequence s;
  s.source = prev->sequence.source;
  for (auto id : prev->sequence.order)
    if (find_record(sz_snapshot, id) != nullptr) s.order.push_back(id);
  for (auto id : sdf_sequence(sz_snapshot).order)
    if (prev->sequence.position_of(id) == 0) s.order.push_back(id);
  if (!preserves_road_order(s, sz_snapshot) || !is_safe(s, sz_snapshot, cfg)) return std::nullopt;
  return s;
}

SequencingOutcome coordinate(const std::vector<VehicleRecord>& sz_snapshot,
                             const std::optional<SequencingOutcome>& prev,
                             const ScenarioConfig& cfg) {
  SequencingOutcome out = sdf_outcome(sz_snapshot, cfg);
  const MergeSequence& s0 = out.sequence;

  if (auto kept = carried_sequence(prev, sz_snapshot, cfg)) {
    out.resequenced = kept->order != s0.order;
    if (!out.resequenced) kept->source = SequenceSource::SDF;
    out.sequence = std::move(*kept);
    out.assignments = assignments_for(out.sequence, sz_snapshot, cfg);
    return out;
  }

  const bool unsafe = std::any_of(out.assignments.begin(), out.assignments.end(),
                                  [&](const Assignment& a) {
                                    return a.behind && require_record(sz_snapshot, *a.behind).is_hdv();
                                  });
  if (!unsafe) return out;

  const auto road1 = ids_on_road(s0, sz_snapshot, RoadId::Main);
  const auto road2 = ids_on_road(s0, sz_snapshot, RoadId::Side);
  const bool capped = interleaving_count(road1.size(), road2.size()) > cfg.enumeration_cap;

  MergeSequence chosen;
  if (capped) {
    chosen = constructive_safe_sequence(s0, sz_snapshot, cfg);
  } else {
    const auto safe = enumerate_safe_sequences(road1, road2, sz_snapshot, cfg, cfg.enumeration_cap);
    chosen = safe.empty() ? constructive_safe_sequence(s0, sz_snapshot, cfg)
                          : select_optimal(safe, s0, sz_snapshot);
  }

  out.resequenced = chosen.order != s0.order;
  if (!out.resequenced) chosen.source = SequenceSource::SDF;
  out.sequence = std::move(chosen);
  out.assignments = assignments_for(out.sequence, sz_snapshot, cfg);
  return out;
}

bool preserves_road_order(const MergeSequence& seq, const std::vector<VehicleRecord>& table) {
  double last_x[2] = {std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
  for (auto id : seq.order) {
    const auto& r = require_record(table, id);
    const int k = r.road == RoadId::Main ? 0 : 1;
    if (r.state.position > last_x[k]) return false;
    last_x[k] = r.state.position;
  }
  return true;
}

}  // namespace mergesim
