#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oranlab/sim/scenario.hpp"
#include "oranlab/sim/scheduler.hpp"
#include "oranlab/sim/ue.hpp"

namespace oranlab::sim {

struct ControlResult {
  bool accepted = false;
  std::string reason;  // empty when accepted
};

/// What happened in the most recent TTI; used by property tests.
struct TtiTrace {
  std::int64_t tti = -1;
  std::array<int, kNumSlices> mask{};     // PRBs available to each slice
  std::array<int, kNumSlices> granted{};  // PRBs actually granted
  std::array<bool, kNumSlices> unmet_demand{};
  std::vector<int> ue_prbs;  // per UE, in cell order
};

/// One base station with three slices of UEs, advanced one 1 ms TTI at a time.
///
/// UEs are stored grouped by slice (eMBB, MTC, URLLC) and ue_id equals the
/// position in that order. All randomness is drawn from per-UE streams seeded
/// from (rng_seed, bs_id, ue_id), so two cells built from the same inputs and
/// driven by the same control sequence produce bit-identical KPM streams.
class Cell {
 public:
  /// Throws ConfigError when the scenario is invalid or has no UEs.
  Cell(const ScenarioConfig& cfg, BsId bs_id);

  /// Traffic arrival, channel update, per-slice scheduling under the current
  /// profiles, TB transmission, KPM accumulation; in that order.
  void step_tti();
  void run_ttis(std::int64_t n);

  /// Queues new profiles for the next TTI boundary. Invalid profiles are
  /// rejected and the active profiles are left untouched.
  ControlResult apply_control(const SlicingProfile& slicing, const SchedulingProfile& scheduling);

  /// One record per UE over the TTIs since the previous snapshot; resets the
  /// window counters.
  std::vector<KpmRecord> snapshot_kpms();
  /// Same as snapshot_kpms without resetting.
  std::vector<KpmRecord> peek_kpms() const;

  BsId bs_id() const { return bs_id_; }
  std::int64_t now_ms() const { return tti_ * cfg_.tti_ms; }
  std::int64_t tti() const { return tti_; }
  const ScenarioConfig& config() const { return cfg_; }
  std::span<const UeState> ues() const { return ues_; }
  std::span<const UeState> slice_ues(Slice s) const;
  /// Direct UE access for tests and diagnostics; bypasses conservation
  /// accounting.
  std::span<UeState> mutable_ues();
  /// TTIs accumulated in the current reporting window.
  std::int64_t window_ttis() const { return tti_ - window_start_tti_; }
  const SlicingProfile& slicing() const { return slicing_; }
  const SchedulingProfile& scheduling() const { return scheduling_; }
  bool has_pending_control() const { return pending_.has_value(); }
  /// TTI at which the current profiles became active (0 at construction).
  std::int64_t profile_applied_tti() const { return profile_applied_tti_; }
  const TtiTrace& last_tti() const { return trace_; }

  /// Replaces the source of every UE according to `profile`; keeps buffers.
  void set_traffic_profile(TrafficProfile profile);

 private:
  KpmRecord make_record(const UeState& ue) const;
  void sample_uplink(UeState& ue);
  void update_channel(UeState& ue);

  ScenarioConfig cfg_;
  BsId bs_id_;
  std::vector<UeState> ues_;
  std::array<std::size_t, kNumSlices + 1> slice_begin_{};
  std::array<SliceSchedulerState, kNumSlices> sched_state_{};
  SlicingProfile slicing_;
  SchedulingProfile scheduling_;
  std::optional<std::pair<SlicingProfile, SchedulingProfile>> pending_;
  std::int64_t tti_ = 0;
  std::int64_t window_start_tti_ = 0;
  std::int64_t profile_applied_tti_ = 0;
  TtiTrace trace_;
};

/// Seed for a named random stream: splitmix64 over (seed, bs, ue, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t bs, std::uint64_t ue, std::uint64_t stream);

}  // namespace oranlab::sim
