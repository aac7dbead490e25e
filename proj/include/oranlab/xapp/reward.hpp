#pragma once

#include <array>
#include <span>

#include "oranlab/sim/scenario.hpp"
#include "oranlab/sim/types.hpp"

namespace oranlab::xapp {

/// One slice's totals over one reporting window.
struct SliceAggregate {
  double rate = 0.0;       // sum of UE rates, bit/s
  double buffer = 0.0;     // sum of UE DL buffers, bytes
  double tbs = 0.0;        // sum of UE transport blocks
  double granted = 0.0;    // sum of mean granted PRBs
  double requested = 0.0;  // sum of mean requested PRBs
  int ues = 0;

  /// granted / requested clipped to [0, 1]; 1 when nothing was requested.
  double prb_ratio() const;
  friend bool operator==(const SliceAggregate&, const SliceAggregate&) = default;
};

struct WindowAggregate {
  std::int64_t timestamp_ms = 0;
  std::array<SliceAggregate, kNumSlices> slice{};

  const SliceAggregate& operator[](Slice s) const { return slice[index_of(s)]; }
  /// Cell downlink throughput, bit/s.
  double cell_rate() const { return slice[0].rate + slice[1].rate + slice[2].rate; }
  friend bool operator==(const WindowAggregate&, const WindowAggregate&) = default;
};

/// Sums records per slice; the timestamp is the largest record timestamp.
WindowAggregate aggregate(std::span<const KpmRecord> records);

/// Joint slicing/scheduling utility: +eMBB rate / rate_ref, +MTC TBs /
/// tbs_ref, -URLLC buffer / buf_ref, each weighted.
struct RewardSpec {
  double rate_ref = 1.0;
  double tbs_ref = 1.0;
  double buf_ref = 1.0;
  std::array<double, kNumSlices> weights{1.0, 1.0, 1.0};

  /// rate_ref: eMBB offered load; tbs_ref: MTC packets offered per window;
  /// buf_ref: URLLC bytes offered per window.
  static RewardSpec from_scenario(const sim::ScenarioConfig& cfg);
  /// Throws ConfigError unless every reference is positive and finite.
  void validate() const;
  std::array<double, kNumSlices> terms(const WindowAggregate& w) const;
  double operator()(const WindowAggregate& w) const;
};

/// Per-slice scheduling utility: rate / rate_ref for eMBB and MTC, PRB ratio
/// for URLLC.
struct SchedRewardSpec {
  std::array<double, kNumSlices> rate_ref{1.0, 1.0, 1.0};
  std::array<double, kNumSlices> weights{1.0, 1.0, 1.0};

  static SchedRewardSpec from_scenario(const sim::ScenarioConfig& cfg);
  void validate() const;
  double slice_reward(Slice s, const WindowAggregate& w) const;
  double operator()(const WindowAggregate& w) const;
};

}  // namespace oranlab::xapp
