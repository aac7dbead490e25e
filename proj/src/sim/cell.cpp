#include "oranlab/sim/cell.hpp"

#include <algorithm>
#include <cmath>

#include "oranlab/sim/phy.hpp"

namespace oranlab::sim {

namespace {

enum Stream : std::uint64_t { kTrafficStream = 1, kChannelStream = 2, kUplinkStream = 3 };

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t bs, std::uint64_t ue, std::uint64_t stream) {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t v : {bs, ue, stream}) {
    state ^= h + v;
    h = splitmix64(state);
  }
  return h;
}

Cell::Cell(const ScenarioConfig& cfg, BsId bs_id) : cfg_(cfg), bs_id_(bs_id) {
  cfg_.validate();
  slicing_ = cfg_.default_slicing();
  if (auto err = check_slicing(slicing_, cfg_.total_prbs)) throw ConfigError("initial_slicing: " + *err);
  scheduling_ = cfg_.initial_scheduling;

  const auto per_slice = static_cast<std::size_t>(cfg_.ues_per_slice_per_bs);
  ues_.reserve(per_slice * kNumSlices);
  for (auto s : kAllSlices) {
    slice_begin_[index_of(s)] = ues_.size();
    for (std::size_t k = 0; k < per_slice; ++k) {
      UeState ue;
      ue.ue_id = static_cast<UeId>(ues_.size());
      ue.slice = s;
      ue.traffic_rng.seed(derive_seed(cfg_.rng_seed, bs_id, ue.ue_id, kTrafficStream));
      ue.channel_rng.seed(derive_seed(cfg_.rng_seed, bs_id, ue.ue_id, kChannelStream));
      ue.uplink_rng.seed(derive_seed(cfg_.rng_seed, bs_id, ue.ue_id, kUplinkStream));
      std::uniform_real_distribution<double> mean(cfg_.channel.mean_cqi_min, cfg_.channel.mean_cqi_max);
      ue.mean_cqi = mean(ue.channel_rng);
      ue.cqi = std::clamp(static_cast<int>(std::lround(ue.mean_cqi)), kMinCqi, kMaxCqi);
      ue.mcs = cqi_to_mcs(ue.cqi);
      ue.source = make_source(cfg_, s);
      // Random CBR phase so that UEs of a slice are not frame-synchronous.
      std::uniform_real_distribution<double> phase(0.0, 8.0 * ue.source.packet_bytes);
      ue.source.credit_bits = phase(ue.traffic_rng);
      ues_.push_back(std::move(ue));
    }
  }
  slice_begin_[kNumSlices] = ues_.size();
  trace_.ue_prbs.assign(ues_.size(), 0);
}

std::span<const UeState> Cell::slice_ues(Slice s) const {
  const auto b = slice_begin_[index_of(s)];
  const auto e = slice_begin_[index_of(s) + 1];
  return std::span<const UeState>(ues_).subspan(b, e - b);
}

std::span<UeState> Cell::mutable_ues() { return ues_; }

void Cell::set_traffic_profile(TrafficProfile profile) {
  cfg_.traffic_profile = profile;
  for (auto& ue : ues_) ue.source = make_source(cfg_, ue.slice);
}

ControlResult Cell::apply_control(const SlicingProfile& slicing, const SchedulingProfile& scheduling) {
  if (auto err = check_slicing(slicing, cfg_.total_prbs)) return {false, *err};
  pending_.emplace(slicing, scheduling);
  return {true, {}};
}

void Cell::update_channel(UeState& ue) {
  const auto& ch = cfg_.channel;
  const double p_up = std::clamp(0.5 - ch.reversion * (ue.cqi - ue.mean_cqi), 0.05, 0.95);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int step = u(ue.channel_rng) < p_up ? 1 : -1;
  if (ue.cqi + step < kMinCqi || ue.cqi + step > kMaxCqi) step = -step;
  ue.cqi += step;
  ue.mcs = cqi_to_mcs(ue.cqi);
}

void Cell::step_tti() {
  if (pending_) {
    slicing_ = pending_->first;
    scheduling_ = pending_->second;
    pending_.reset();
    profile_applied_tti_ = tti_;
  }

  // Traffic arrival.
  for (auto& ue : ues_) {
    const std::uint64_t bytes = gen_traffic(ue.source, static_cast<double>(cfg_.tti_ms), ue.traffic_rng);
    const std::uint64_t room = cfg_.dl_buffer_cap_bytes - std::min(ue.dl_buffer, cfg_.dl_buffer_cap_bytes);
    const std::uint64_t accepted = std::min(bytes, room);
    ue.dl_buffer += accepted;
    ue.arrived_bytes += accepted;
    ue.dropped_bytes += bytes - accepted;
  }

  // Channel.
  if (tti_ > 0 && tti_ % cfg_.channel.step_period_ms == 0) {
    for (auto& ue : ues_) update_channel(ue);
  }

  // Scheduling inside each slice's PRB mask.
  trace_.tti = tti_;
  std::fill(trace_.ue_prbs.begin(), trace_.ue_prbs.end(), 0);
  for (auto s : kAllSlices) {
    const auto idx = index_of(s);
    const auto b = slice_begin_[idx];
    const auto e = slice_begin_[idx + 1];
    const std::span<const UeState> group(ues_.data() + b, e - b);
    const int mask = slicing_[s];
    const auto alloc = schedule_slice(scheduling_[s], group, mask, sched_state_[idx], cfg_.pf_ewma_alpha);
    trace_.mask[idx] = mask;
    trace_.granted[idx] = alloc.total();
    trace_.unmet_demand[idx] = false;
    for (std::size_t i = 0; i < group.size(); ++i) {
      trace_.ue_prbs[b + i] = alloc.prbs[i];
      if (prb_demand(group[i], mask) > alloc.prbs[i]) trace_.unmet_demand[idx] = true;
    }
  }

  // Transmission and KPM accounting. The control region grows with the
  // number of UEs scheduled in this TTI.
  const auto scheduled = std::count_if(trace_.ue_prbs.begin(), trace_.ue_prbs.end(), [](int p) { return p > 0; });
  const int data_symbols = kSymbolsPerTti - control_symbols(static_cast<int>(scheduled));
  const double alpha = cfg_.pf_ewma_alpha;
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    auto& ue = ues_[i];
    const int prbs = trace_.ue_prbs[i];
    const int requested = prb_demand(ue, cfg_.total_prbs);
    const std::uint64_t capacity_bytes = static_cast<std::uint64_t>(tb_size(ue.mcs, prbs)) / 8;
    const std::uint64_t sent = std::min(capacity_bytes, ue.dl_buffer);
    ue.dl_buffer -= sent;
    ue.delivered_bytes += sent;
    ue.delivered_bits_total += sent * 8;

    auto& w = ue.window;
    ++w.ttis;
    w.mcs_sum += ue.mcs;
    w.cqi_sum += ue.cqi;
    w.tx_symbols += prbs > 0 ? static_cast<std::uint64_t>(data_symbols) : 0;
    w.phy_tbs += prbs > 0 ? 1 : 0;
    w.delivered_bits += sent * 8;
    w.granted_prbs += static_cast<std::uint64_t>(prbs);
    w.requested_prbs += static_cast<std::uint64_t>(requested);

    ue.ewma_rate = (1.0 - alpha) * ue.ewma_rate + alpha * (1000.0 / cfg_.tti_ms) * static_cast<double>(sent * 8);
  }

  ++tti_;
}

void Cell::run_ttis(std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) step_tti();
}

void Cell::sample_uplink(UeState& ue) {
  const auto& ul = cfg_.uplink;
  const double window_s = static_cast<double>(ue.window.ttis * cfg_.tti_ms) / 1000.0;
  const double offered = ul.offered_bps[index_of(ue.slice)];
  if (window_s <= 0.0 || offered <= 0.0) {
    ue.ul_rate = 0.0;
    ue.ul_error_count = 0;
    ue.ul_buffer = 0;
    return;
  }
  std::normal_distribution<double> jitter(0.0, ul.rate_jitter);
  ue.ul_rate = std::max(0.0, offered * (1.0 + jitter(ue.uplink_rng)));
  const double mean_errors = ul.errors_per_mbit * ue.ul_rate * window_s / 1e6;
  ue.ul_error_count = mean_errors > 0.0 ? std::poisson_distribution<std::uint64_t>(mean_errors)(ue.uplink_rng) : 0;
  const double mean_buffer = ul.mean_buffer_ms / 1000.0 * offered / 8.0;
  ue.ul_buffer = mean_buffer > 0.0 ? std::poisson_distribution<std::uint64_t>(mean_buffer)(ue.uplink_rng) : 0;
}

KpmRecord Cell::make_record(const UeState& ue) const {
  const auto& w = ue.window;
  KpmRecord r;
  r.timestamp_ms = now_ms();
  r.bs_id = bs_id_;
  r.ue_id = ue.ue_id;
  r.slice = ue.slice;
  r.dl_buffer = ue.dl_buffer;
  r.ul_buffer = ue.ul_buffer;
  r.ul_rate = ue.ul_rate;
  r.ul_errors = ue.ul_error_count;
  if (w.ttis > 0) {
    const double n = static_cast<double>(w.ttis);
    const double window_s = n * cfg_.tti_ms / 1000.0;
    r.dl_mcs = static_cast<double>(w.mcs_sum) / n;
    r.dl_cqi = static_cast<double>(w.cqi_sum) / n;
    r.dl_rate = static_cast<double>(w.delivered_bits) / window_s;
    r.granted_prbs = static_cast<double>(w.granted_prbs) / n;
    r.requested_prbs = static_cast<double>(w.requested_prbs) / n;
  } else {
    r.dl_mcs = ue.mcs;
    r.dl_cqi = ue.cqi;
  }
  r.dl_tx_symbols = w.tx_symbols;
  r.dl_phy_tbs = w.phy_tbs;
  return r;
}

std::vector<KpmRecord> Cell::snapshot_kpms() {
  std::vector<KpmRecord> out;
  out.reserve(ues_.size());
  for (auto& ue : ues_) {
    sample_uplink(ue);
    out.push_back(make_record(ue));
    ue.window = KpmAccumulator{};
  }
  window_start_tti_ = tti_;
  return out;
}

std::vector<KpmRecord> Cell::peek_kpms() const {
  std::vector<KpmRecord> out;
  out.reserve(ues_.size());
  for (const auto& ue : ues_) out.push_back(make_record(ue));
  return out;
}

}  // namespace oranlab::sim
