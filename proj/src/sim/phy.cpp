#include "oranlab/sim/phy.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace oranlab::sim {

namespace {

// Single-PRB transport block bits per MCS, shaped after the LTE TBS table
// (MCS -> TBS index -> N_PRB = 1 column).
constexpr std::array<int, kMaxMcs + 1> kBitsPerPrb{
    16,  24,  32,  40,  56,  72,  88,  104, 120, 136,  // 0-9
    136, 144, 176, 208, 224, 256, 280, 280,            // 10-17
    328, 336, 376, 408, 440, 488, 520, 552, 584, 616, 712,  // 18-28
};

}  // namespace

int bits_per_prb(int mcs) {
  if (mcs < 0 || mcs > kMaxMcs) throw std::invalid_argument("mcs out of range: " + std::to_string(mcs));
  return kBitsPerPrb[static_cast<std::size_t>(mcs)];
}

double efficiency(int mcs) { return static_cast<double>(bits_per_prb(mcs)) / kSymbolsPerPrbPerTti; }

std::int64_t tb_size(int mcs, int n_prbs) {
  if (n_prbs < 0) throw std::invalid_argument("n_prbs must be >= 0: " + std::to_string(n_prbs));
  return static_cast<std::int64_t>(n_prbs) * bits_per_prb(mcs);
}

int control_symbols(int n_ues) {
  if (n_ues <= 2) return 1;
  if (n_ues <= 4) return 2;
  return 3;
}

int cqi_to_mcs(int cqi) { return std::clamp(2 * cqi - 2, 0, kMaxMcs); }

int prbs_for_bytes(std::uint64_t buffer_bytes, int mcs, int cap) {
  if (buffer_bytes == 0 || cap <= 0) return 0;
  const std::uint64_t bits = buffer_bytes * 8;
  const auto per_prb = static_cast<std::uint64_t>(bits_per_prb(mcs));
  const std::uint64_t need = (bits + per_prb - 1) / per_prb;
  return static_cast<int>(std::min<std::uint64_t>(need, static_cast<std::uint64_t>(cap)));
}

}  // namespace oranlab::sim
