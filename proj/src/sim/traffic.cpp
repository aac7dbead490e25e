#include "oranlab/sim/traffic.hpp"

#include <cmath>

namespace oranlab::sim {

TrafficSource make_source(const ScenarioConfig& cfg, Slice slice) {
  TrafficSource src;
  src.kind = cfg.is_constant_bitrate(slice) ? ArrivalKind::ConstantBitrate : ArrivalKind::Poisson;
  src.rate_bps = cfg.offered_rate_bps(slice);
  src.packet_bytes = cfg.packet_bytes[index_of(slice)];
  return src;
}

std::uint64_t gen_traffic(TrafficSource& src, double dt_ms, std::mt19937_64& rng) {
  if (!(dt_ms > 0.0)) return 0;
  const double packet_bits = 8.0 * src.packet_bytes;
  const double bits = src.rate_bps * dt_ms / 1000.0;
  if (src.kind == ArrivalKind::ConstantBitrate) {
    src.credit_bits += bits;
    // Small epsilon so that accumulated rounding never loses a packet.
    const double packets = std::floor((src.credit_bits + 1e-6) / packet_bits);
    src.credit_bits -= packets * packet_bits;
    if (src.credit_bits < 0.0) src.credit_bits = 0.0;
    return static_cast<std::uint64_t>(packets) * static_cast<std::uint64_t>(src.packet_bytes);
  }
  const double mean_packets = bits / packet_bits;
  std::poisson_distribution<std::uint64_t> arrivals(mean_packets);
  return arrivals(rng) * static_cast<std::uint64_t>(src.packet_bytes);
}

}  // namespace oranlab::sim
