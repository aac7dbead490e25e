#pragma once

#include <cstdint>
#include <random>

#include "oranlab/sim/scenario.hpp"

namespace oranlab::sim {

enum class ArrivalKind : std::uint8_t { ConstantBitrate, Poisson };

struct TrafficSource {
  ArrivalKind kind = ArrivalKind::ConstantBitrate;
  double rate_bps = 0.0;
  int packet_bytes = 1000;
  /// Bits accrued but not yet emitted as a whole packet (CBR only).
  double credit_bits = 0.0;
};

/// Source attached to a UE of `slice` under the scenario's traffic profile.
TrafficSource make_source(const ScenarioConfig& cfg, Slice slice);

/// Bytes generated by `src` over `dt_ms` milliseconds. CBR sources emit whole
/// packets from a bit credit; Poisson sources draw a packet count with mean
/// rate * dt / packet size.
std::uint64_t gen_traffic(TrafficSource& src, double dt_ms, std::mt19937_64& rng);

}  // namespace oranlab::sim
