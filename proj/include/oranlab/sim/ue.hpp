#pragma once

#include <cstdint>
#include <random>

#include "oranlab/sim/traffic.hpp"
#include "oranlab/sim/types.hpp"

namespace oranlab::sim {

/// Accumulators behind one KpmRecord; reset at every snapshot.
struct KpmAccumulator {
  std::int64_t ttis = 0;
  std::int64_t mcs_sum = 0;
  std::int64_t cqi_sum = 0;
  std::uint64_t tx_symbols = 0;
  std::uint64_t phy_tbs = 0;
  std::uint64_t delivered_bits = 0;
  std::uint64_t granted_prbs = 0;
  std::uint64_t requested_prbs = 0;
};

struct UeState {
  UeId ue_id = 0;
  Slice slice = Slice::eMBB;
  std::uint64_t dl_buffer = 0;  // bytes
  int cqi = 8;
  int mcs = 14;
  double ewma_rate = 0.0;  // bits/s
  std::uint64_t ul_buffer = 0;
  std::uint64_t ul_error_count = 0;  // errors in the last reported window
  double ul_rate = 0.0;              // bits/s over the last reported window

  double mean_cqi = 8.0;
  TrafficSource source{};

  // Lifetime conservation counters, bytes.
  std::uint64_t arrived_bytes = 0;  // accepted into the buffer
  std::uint64_t dropped_bytes = 0;  // rejected by the buffer cap
  std::uint64_t delivered_bytes = 0;
  std::uint64_t delivered_bits_total = 0;

  KpmAccumulator window{};

  // Independent streams so traffic and channel traces do not depend on
  // scheduling decisions.
  std::mt19937_64 traffic_rng;
  std::mt19937_64 channel_rng;
  std::mt19937_64 uplink_rng;
};

}  // namespace oranlab::sim
