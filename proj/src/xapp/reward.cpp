#include "oranlab/xapp/reward.hpp"

#include <algorithm>
#include <cmath>

namespace oranlab::xapp {

double SliceAggregate::prb_ratio() const {
  if (requested <= 0.0) return 1.0;
  return std::clamp(granted / requested, 0.0, 1.0);
}

WindowAggregate aggregate(std::span<const KpmRecord> records) {
  WindowAggregate w;
  for (const auto& r : records) {
    auto& s = w.slice[index_of(r.slice)];
    s.rate += r.dl_rate;
    s.buffer += static_cast<double>(r.dl_buffer);
    s.tbs += static_cast<double>(r.dl_phy_tbs);
    s.granted += r.granted_prbs;
    s.requested += r.requested_prbs;
    ++s.ues;
    w.timestamp_ms = std::max(w.timestamp_ms, r.timestamp_ms);
  }
  return w;
}

namespace {

void check_ref(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + ": must be positive and finite");
}

}  // namespace

RewardSpec RewardSpec::from_scenario(const sim::ScenarioConfig& cfg) {
  const double ues = cfg.ues_per_slice_per_bs;
  const double window_s = cfg.reporting_period_ms / 1000.0;
  RewardSpec r;
  r.rate_ref = cfg.offered_rate_bps(Slice::eMBB) * ues;
  r.tbs_ref = cfg.offered_rate_bps(Slice::MTC) * ues * window_s / (8.0 * cfg.packet_bytes[index_of(Slice::MTC)]);
  r.buf_ref = cfg.offered_rate_bps(Slice::URLLC) * ues * window_s / 8.0;
  return r;
}

void RewardSpec::validate() const {
  check_ref(rate_ref, "reward.rate_ref");
  check_ref(tbs_ref, "reward.tbs_ref");
  check_ref(buf_ref, "reward.buf_ref");
  for (double w : weights) {
    if (!std::isfinite(w)) throw ConfigError("reward.weights: must be finite");
  }
}

std::array<double, kNumSlices> RewardSpec::terms(const WindowAggregate& w) const {
  return {weights[0] * w.slice[0].rate / rate_ref, weights[1] * w.slice[1].tbs / tbs_ref,
          -weights[2] * w.slice[2].buffer / buf_ref};
}

double RewardSpec::operator()(const WindowAggregate& w) const {
  const auto t = terms(w);
  return t[0] + t[1] + t[2];
}

SchedRewardSpec SchedRewardSpec::from_scenario(const sim::ScenarioConfig& cfg) {
  SchedRewardSpec r;
  for (auto s : kAllSlices) r.rate_ref[index_of(s)] = cfg.offered_rate_bps(s) * cfg.ues_per_slice_per_bs;
  return r;
}

void SchedRewardSpec::validate() const {
  check_ref(rate_ref[0], "sched_reward.rate_ref[eMBB]");
  check_ref(rate_ref[1], "sched_reward.rate_ref[MTC]");
  for (double w : weights) {
    if (!std::isfinite(w)) throw ConfigError("sched_reward.weights: must be finite");
  }
}

double SchedRewardSpec::slice_reward(Slice s, const WindowAggregate& w) const {
  const auto i = index_of(s);
  if (s == Slice::URLLC) return weights[i] * w.slice[i].prb_ratio();
  return weights[i] * w.slice[i].rate / rate_ref[i];
}

double SchedRewardSpec::operator()(const WindowAggregate& w) const {
  double r = 0.0;
  for (auto s : kAllSlices) r += slice_reward(s, w);
  return r;
}

}  // namespace oranlab::xapp
