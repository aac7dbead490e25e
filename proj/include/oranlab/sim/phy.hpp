#pragma once

#include <cstdint>

namespace oranlab::sim {

inline constexpr int kMaxMcs = 28;
inline constexpr int kMinCqi = 1;
inline constexpr int kMaxCqi = 15;

/// Data-carrying resource elements in one PRB over one TTI
/// (12 subcarriers x 10 OFDM symbols after control and reference signals).
inline constexpr int kSymbolsPerPrbPerTti = 120;

/// OFDM symbols in one TTI (normal cyclic prefix).
inline constexpr int kSymbolsPerTti = 14;

/// Control-region length in OFDM symbols for a TTI that schedules `n_ues`
/// UEs: 1 for up to 2, 2 for up to 4, 3 beyond.
int control_symbols(int n_ues);

/// Bits carried by one PRB in one TTI at `mcs`. Monotonically non-decreasing.
int bits_per_prb(int mcs);

/// Spectral efficiency in bits per resource element.
double efficiency(int mcs);

/// Transport block size in bits for `n_prbs` PRBs at `mcs`; exactly linear in
/// n_prbs. Throws std::invalid_argument when mcs is outside 0..28 or n_prbs < 0.
std::int64_t tb_size(int mcs, int n_prbs);

/// Affine CQI->MCS map clipped to 0..28: mcs = 2*cqi - 2.
int cqi_to_mcs(int cqi);

/// PRBs needed to drain `buffer_bytes` at `mcs`, capped at `cap`.
int prbs_for_bytes(std::uint64_t buffer_bytes, int mcs, int cap);

}  // namespace oranlab::sim
