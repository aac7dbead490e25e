#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "oranlab/sim/types.hpp"

namespace oranlab::sim {

/// Per-UE CQI model: a bounded random walk that drifts toward a per-UE mean.
struct ChannelConfig {
  double mean_cqi_min = 6.0;  // per-UE mean drawn uniformly in [min, max]
  double mean_cqi_max = 10.0;
  int step_period_ms = 10;    // one +/-1 step per period
  double reversion = 0.15;    // pull toward the mean per CQI unit of offset
};

/// Statistical uplink side-model feeding the three UL KPM columns.
struct UplinkConfig {
  std::array<double, kNumSlices> offered_bps{256e3, 16e3, 32e3};
  double rate_jitter = 0.2;          // relative std-dev of the per-window rate
  double errors_per_mbit = 2.0;      // mean UL errors per delivered Mbit
  double mean_buffer_ms = 20.0;      // mean queued UL data, in ms of offered load
};

struct ScenarioConfig {
  int n_bs = 1;
  int ues_per_slice_per_bs = 2;
  int total_prbs = 50;
  int tti_ms = 1;
  TrafficProfile traffic_profile = TrafficProfile::SliceBased;
  /// Per-UE source rates under the slice-based profile.
  std::array<double, kNumSlices> slice_rates_bps{4e6, 44.6e3, 89.3e3};
  /// Per-UE source rate for every slice under the uniform profile.
  double uniform_rate_bps = 1.5e6;
  std::array<int, kNumSlices> packet_bytes{12500, 125, 125};
  int reporting_period_ms = 250;
  std::uint64_t rng_seed = 1;
  std::uint64_t dl_buffer_cap_bytes = 200'000;
  double pf_ewma_alpha = 0.01;
  /// Unset means an even split of total_prbs.
  std::optional<SlicingProfile> initial_slicing;
  SchedulingProfile initial_scheduling{};
  ChannelConfig channel{};
  UplinkConfig uplink{};

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  /// Mean offered DL load of one UE of `s`, bits/s.
  double offered_rate_bps(Slice s) const;
  /// True when `s` receives constant-bitrate arrivals.
  bool is_constant_bitrate(Slice s) const;
  SlicingProfile default_slicing() const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
/// Reads and validates a JSON scenario file.
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace oranlab::sim
