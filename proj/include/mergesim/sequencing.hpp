#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mergesim/core.hpp"

namespace mergesim {

enum class SequenceSource : std::uint8_t { SDF, SafeGenerated, ConstructiveFallback };

const char* to_string(SequenceSource s);

/// Crossing order at M; order[0] crosses first.
struct MergeSequence {
  std::vector<VehicleId> order;
  SequenceSource source = SequenceSource::SDF;

  std::size_t size() const { return order.size(); }
  /// 1-based position of `id`, 0 when absent.
  std::size_t position_of(VehicleId id) const;
};

/// Cross-road merging partners of one CAV.
///
/// `ahead`/`behind` are the thresholded i+ / i- that drive the barrier rows.
/// `candidate_ahead`/`candidate_behind` are the unthresholded sequence
/// neighbours, kept so mode selection can track resequencing events.
struct Assignment {
  VehicleId cav;
  std::optional<VehicleId> ahead;
  std::optional<VehicleId> behind;
  std::optional<VehicleId> candidate_ahead;
  std::optional<VehicleId> candidate_behind;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct SequencingOutcome {
  MergeSequence sequence;
  std::vector<Assignment> assignments;
  bool resequenced = false;

  const Assignment* assignment_for(VehicleId cav) const;
};

/// Shortest-distance-first order; ties by (road, id).
MergeSequence sdf_sequence(const std::vector<VehicleRecord>& sz_records);

struct NeighborPair {
  std::optional<VehicleId> ahead;   // nearest opposite-road predecessor
  std::optional<VehicleId> behind;  // nearest opposite-road successor
};

NeighborPair neighbors(const MergeSequence& seq, VehicleId i,
                       const std::vector<VehicleRecord>& table);

/// Margin of i over j when i crosses ahead of j (negative: too close).
double delta_minus(const VehicleRecord& i, const VehicleRecord& j, const ScenarioConfig& cfg);
/// Margin of j over i when i crosses behind j (negative: too close).
double delta_plus(const VehicleRecord& i, const VehicleRecord& j, const ScenarioConfig& cfg);

Assignment merging_pair(const VehicleRecord& i, const VehicleRecord* i_hat_plus,
                        const VehicleRecord* i_hat_minus, const ScenarioConfig& cfg);

/// Assignments for every CAV in `seq`.
std::vector<Assignment> assignments_for(const MergeSequence& seq,
                                        const std::vector<VehicleRecord>& table,
                                        const ScenarioConfig& cfg);

bool is_safe(const MergeSequence& seq, const std::vector<VehicleRecord>& table,
             const ScenarioConfig& cfg);

/// Binomial coefficient, saturating at SIZE_MAX.
std::size_t interleaving_count(std::size_t n1, std::size_t n2);

/// All order-preserving interleavings of the two road lists that pass
/// `is_safe`. Above `cap` candidates only the constructive sequence (plus
/// the SDF order when safe) is returned.
std::vector<MergeSequence> enumerate_safe_sequences(const std::vector<VehicleId>& road1,
                                                    const std::vector<VehicleId>& road2,
                                                    const std::vector<VehicleRecord>& table,
                                                    const ScenarioConfig& cfg, std::size_t cap);

std::size_t disruption(const MergeSequence& s, const MergeSequence& s0);

MergeSequence select_optimal(const std::vector<MergeSequence>& safe_set, const MergeSequence& s0,
                             const std::vector<VehicleRecord>& table);

/// Safe sequence that always exists when the SZ holds a CAV: s0 with the
/// first CAV and its same-road followers moved behind every opposite-road
/// vehicle.
MergeSequence constructive_safe_sequence(const MergeSequence& s0,
                                         const std::vector<VehicleRecord>& table,
                                         const ScenarioConfig& cfg);

/// A previous resequenced order restricted to the current snapshot, with new
/// arrivals appended in s0 order; empty unless it still preserves road order
/// and passes `is_safe`.
std::optional<MergeSequence> carried_sequence(const std::optional<SequencingOutcome>& prev,
                                              const std::vector<VehicleRecord>& sz_snapshot,
                                              const ScenarioConfig& cfg);

/// Upper-level safe sequencing over one SZ snapshot. A resequenced order from
/// `prev` is kept while `carried_sequence` accepts it.
SequencingOutcome coordinate(const std::vector<VehicleRecord>& sz_snapshot,
                             const std::optional<SequencingOutcome>& prev,
                             const ScenarioConfig& cfg);

/// Baseline: s0 with its thresholded assignments, no resequencing.
SequencingOutcome sdf_outcome(const std::vector<VehicleRecord>& sz_snapshot,
                              const ScenarioConfig& cfg);

/// Within-road order check used by tests and audits.
bool preserves_road_order(const MergeSequence& seq, const std::vector<VehicleRecord>& table);

}  // namespace mergesim
