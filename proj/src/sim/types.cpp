#include "oranlab/sim/types.hpp"

#include <charconv>
#include <vector>

namespace oranlab {

namespace {

std::vector<std::string_view> split_dash(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find('-', start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Slice s) {
  switch (s) {
    case Slice::eMBB: return "eMBB";
    case Slice::MTC: return "MTC";
    case Slice::URLLC: return "URLLC";
  }
  return "?";
}

std::optional<Slice> parse_slice(std::string_view text) {
  for (auto s : kAllSlices) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::RR: return "RR";
    case Policy::WF: return "WF";
    case Policy::PF: return "PF";
  }
  return "?";
}

std::optional<Policy> parse_policy(std::string_view text) {
  for (auto p : {Policy::RR, Policy::WF, Policy::PF}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

std::string_view to_string(TrafficProfile t) {
  return t == TrafficProfile::SliceBased ? "slice-based" : "uniform";
}

std::optional<TrafficProfile> parse_traffic_profile(std::string_view text) {
  if (text == "slice-based") return TrafficProfile::SliceBased;
  if (text == "uniform") return TrafficProfile::Uniform;
  return std::nullopt;
}

std::optional<std::string> check_slicing(const SlicingProfile& p, int total_prbs) {
  for (auto s : kAllSlices) {
    if (p[s] < 1) {
      return "slicing: slice " + std::string(to_string(s)) + " has " + std::to_string(p[s]) +
             " PRBs, at least 1 required";
    }
  }
  if (p.total() > total_prbs) {
    return "slicing: " + format_slicing(p) + " uses " + std::to_string(p.total()) + " PRBs, carrier has " +
           std::to_string(total_prbs);
  }
  return std::nullopt;
}

std::string format_slicing(const SlicingProfile& p) {
  return std::to_string(p.prbs[0]) + "-" + std::to_string(p.prbs[1]) + "-" + std::to_string(p.prbs[2]);
}

std::string format_scheduling(const SchedulingProfile& p) {
  std::string out;
  for (std::size_t i = 0; i < kNumSlices; ++i) {
    if (i) out += '-';
    out += to_string(p.policy[i]);
  }
  return out;
}

std::optional<SlicingProfile> parse_slicing(std::string_view text) {
  auto parts = split_dash(text);
  if (parts.size() != kNumSlices) return std::nullopt;
  SlicingProfile p;
  for (std::size_t i = 0; i < kNumSlices; ++i) {
    auto part = parts[i];
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), p.prbs[i]);
    if (ec != std::errc{} || ptr != part.data() + part.size()) return std::nullopt;
  }
  return p;
}

std::optional<SchedulingProfile> parse_scheduling(std::string_view text) {
  auto parts = split_dash(text);
  if (parts.size() != kNumSlices) return std::nullopt;
  SchedulingProfile p;
  for (std::size_t i = 0; i < kNumSlices; ++i) {
    auto pol = parse_policy(parts[i]);
    if (!pol) return std::nullopt;
    p.policy[i] = *pol;
  }
  return p;
}

}  // namespace oranlab
