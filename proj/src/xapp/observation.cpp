#include "oranlab/xapp/observation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

namespace oranlab::xapp {

NormScales NormScales::from_scenario(const sim::ScenarioConfig& cfg) {
  const double ues = cfg.ues_per_slice_per_bs;
  NormScales n;
  n.rate = 0.0;
  for (auto s : kAllSlices) n.rate = std::max(n.rate, cfg.offered_rate_bps(s) * ues);
  n.buffer = static_cast<double>(cfg.dl_buffer_cap_bytes) * ues;
  n.tbs = static_cast<double>(cfg.reporting_period_ms / cfg.tti_ms) * ues;
  return n;
}

void NormScales::validate() const {
  for (double v : {rate, buffer, tbs}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("norm_scales: must be positive and finite");
  }
}

std::map<std::string, std::string> NormScales::to_meta(const std::string& prefix) const {
  auto f = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
  };
  return {{prefix + ".rate", f(rate)}, {prefix + ".buffer", f(buffer)}, {prefix + ".tbs", f(tbs)}};
}

NormScales NormScales::from_meta(const std::map<std::string, std::string>& meta, const std::string& prefix) {
  auto get = [&](const std::string& k) {
    auto it = meta.find(prefix + "." + k);
    if (it == meta.end()) throw ConfigError("norm_scales: missing " + k);
    double v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc{}) throw ConfigError("norm_scales: bad " + k);
    return v;
  };
  NormScales n{get("rate"), get("buffer"), get("tbs")};
  n.validate();
  return n;
}

void WindowHistory::push(const WindowAggregate& w) {
  windows_.push_back(w);
  while (windows_.size() > static_cast<std::size_t>(ml::kWindowT)) windows_.pop_front();
}

ml::VectorXd observation(const WindowHistory& h, Slice s, ObsKind kind, const NormScales& scales) {
  ml::VectorXd x = ml::VectorXd::Zero(ml::kObsDim);
  const auto& w = h.windows();
  const int offset = ml::kWindowT - static_cast<int>(w.size());
  auto norm = [](double v, double scale) { return std::clamp(v / scale, 0.0, 1.0); };
  for (std::size_t t = 0; t < w.size(); ++t) {
    const auto& a = w[t][s];
    const int row = offset + static_cast<int>(t);
    x(row * ml::kWindowN + 0) = norm(a.rate, scales.rate);
    x(row * ml::kWindowN + 1) = norm(a.buffer, scales.buffer);
    x(row * ml::kWindowN + 2) = kind == ObsKind::Slicing ? norm(a.tbs, scales.tbs) : a.prb_ratio();
  }
  return x;
}

ml::VectorXd assemble_observation(std::span<const KpmRecord> records, Slice s, ObsKind kind,
                                  const NormScales& scales) {
  std::map<std::int64_t, std::vector<KpmRecord>> by_time;
  for (const auto& r : records) by_time[r.timestamp_ms].push_back(r);
  WindowHistory h;
  for (const auto& [t, rs] : by_time) h.push(aggregate(rs));
  return observation(h, s, kind, scales);
}

}  // namespace oranlab::xapp
