#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oranlab {

/// Raised when a configuration value violates its invariants. The message
/// always starts with the offending field name.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using BsId = std::uint32_t;
using UeId = std::uint32_t;

enum class Slice : std::uint8_t { eMBB = 0, MTC = 1, URLLC = 2 };

inline constexpr std::size_t kNumSlices = 3;
inline constexpr std::array<Slice, kNumSlices> kAllSlices{Slice::eMBB, Slice::MTC, Slice::URLLC};

constexpr std::size_t index_of(Slice s) { return static_cast<std::size_t>(s); }

std::string_view to_string(Slice s);
std::optional<Slice> parse_slice(std::string_view text);

enum class Policy : std::uint8_t { RR = 0, WF = 1, PF = 2 };

std::string_view to_string(Policy p);
std::optional<Policy> parse_policy(std::string_view text);

enum class TrafficProfile : std::uint8_t { SliceBased, Uniform };

std::string_view to_string(TrafficProfile t);
std::optional<TrafficProfile> parse_traffic_profile(std::string_view text);

/// PRBs reserved for each slice, indexed by Slice.
struct SlicingProfile {
  std::array<int, kNumSlices> prbs{};

  int operator[](Slice s) const { return prbs[index_of(s)]; }
  int total() const { return prbs[0] + prbs[1] + prbs[2]; }
  friend bool operator==(const SlicingProfile&, const SlicingProfile&) = default;
  friend auto operator<=>(const SlicingProfile&, const SlicingProfile&) = default;
};

/// Scheduler used inside each slice's PRB mask.
struct SchedulingProfile {
  std::array<Policy, kNumSlices> policy{Policy::RR, Policy::RR, Policy::RR};

  Policy operator[](Slice s) const { return policy[index_of(s)]; }
  friend bool operator==(const SchedulingProfile&, const SchedulingProfile&) = default;
  friend auto operator<=>(const SchedulingProfile&, const SchedulingProfile&) = default;
};

/// Returns an error description if the profile is not applicable to a carrier
/// of `total_prbs` PRBs.
std::optional<std::string> check_slicing(const SlicingProfile& p, int total_prbs);

/// "36-3-11"
std::string format_slicing(const SlicingProfile& p);
/// "RR-WF-PF"
std::string format_scheduling(const SchedulingProfile& p);
std::optional<SlicingProfile> parse_slicing(std::string_view text);
std::optional<SchedulingProfile> parse_scheduling(std::string_view text);

/// One UE's metrics over one reporting window. Rates are window averages,
/// counters are window totals, buffers and the PRB figures are described per
/// field.
struct KpmRecord {
  std::int64_t timestamp_ms = 0;  // end of the window
  BsId bs_id = 0;
  UeId ue_id = 0;
  Slice slice = Slice::eMBB;
  double dl_mcs = 0.0;                // mean MCS over the window
  std::uint64_t dl_tx_symbols = 0;    // OFDM data symbols of TTIs carrying a DL TB
  std::uint64_t dl_buffer = 0;        // bytes queued at window end
  double dl_rate = 0.0;               // delivered bits / window seconds
  std::uint64_t dl_phy_tbs = 0;       // TTIs with a DL transport block
  double dl_cqi = 0.0;                // mean CQI over the window
  std::uint64_t ul_buffer = 0;        // bytes
  double ul_rate = 0.0;               // bits/s
  std::uint64_t ul_errors = 0;
  double granted_prbs = 0.0;          // mean PRBs granted per TTI
  double requested_prbs = 0.0;        // mean PRBs requested per TTI

  friend bool operator==(const KpmRecord&, const KpmRecord&) = default;
};

}  // namespace oranlab
