#include "oranlab/xapp/xapps.hpp"

#include <algorithm>
#include <cmath>

namespace oranlab::xapp {

MetricsLog::MetricsLog(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << header() << '\n';
}

std::string MetricsLog::header() {
  std::string h = "timestamp_ms,bs_id,action,reward";
  for (auto s : {"embb", "mtc", "urllc"}) {
    for (auto m : {"rate", "buffer", "tbs", "prb_ratio"}) h += std::string(",") + s + "_" + m;
  }
  return h;
}

void MetricsLog::write(const WindowLog& w) {
  if (!out_.is_open()) return;
  out_ << w.agg.timestamp_ms << ',' << w.bs_id << ',' << w.action << ',' << w.reward;
  for (const auto& a : w.agg.slice) out_ << ',' << a.rate << ',' << a.buffer << ',' << a.tbs << ',' << a.prb_ratio();
  out_ << '\n';
}

XappBase::XappBase(ric::RicService& ric, std::string name)
    : ric_(ric), name_(std::move(name)), id_(ric.attach_xapp(name_)) {}

XappBase::~XappBase() {
  try {
    ric_.detach_xapp(id_, 0);
  } catch (...) {
  }
}

void XappBase::start(std::int64_t now, std::uint32_t period_ms, bool on_event) {
  for (BsId bs : ric_.registered_nodes()) {
    const auto sub = ric_.subscribe(id_, bs, e2::SmId::KpmReport, period_ms, e2::Trigger::Periodic, now);
    subs_[sub] = {bs, e2::Trigger::Periodic};
    if (on_event) {
      const auto ev = ric_.subscribe(id_, bs, e2::SmId::KpmReport, 0, e2::Trigger::OnEvent, now);
      subs_[ev] = {bs, e2::Trigger::OnEvent};
    }
    bs_[bs];
  }
}

std::optional<Action> XappBase::current(BsId bs) const {
  auto it = bs_.find(bs);
  if (it == bs_.end()) return std::nullopt;
  return it->second.current;
}

void XappBase::poll(std::int64_t now) {
  for (const auto& r : ric_.poll_control_results(id_)) {
    auto it = bs_.find(r.bs_id);
    if (it == bs_.end() || it->second.pending_ticket != r.ticket) continue;
    auto& st = it->second;
    if (r.outcome == ric::ControlOutcome::Ok) {
      st.current = st.pending;
    } else {
      ++controls_failed_;
      events_.push_back("t=" + std::to_string(now) + " ev=control_failed bs=" + std::to_string(r.bs_id) +
                        " outcome=" + std::string(to_string(r.outcome)));
      on_control_failed(r.bs_id, st, r);
    }
    st.pending.reset();
    st.pending_ticket = 0;
  }
  for (const auto& d : ric_.poll(id_)) {
    auto sub = subs_.find(d.indication.sub_id);
    if (sub == subs_.end()) continue;
    const BsId bs = sub->second.first;
    if (sub->second.second == e2::Trigger::OnEvent) {
      if (on_event_hook) on_event_hook(bs, d.indication, now);
      continue;
    }
    auto& st = bs_[bs];
    WindowLog log;
    log.bs_id = bs;
    log.agg = aggregate(d.indication.payload);
    log.applied = st.current;
    st.history.push(log.agg);
    on_window(bs, st, d.indication, log, now);
    metrics_.write(log);
    windows_.push_back(std::move(log));
  }
}

bool XappBase::request(BsId bs, BsState& st, const Action& a, std::int64_t now) {
  if (st.current == a || st.pending == a) return false;
  try {
    st.pending_ticket = ric_.send_control(id_, bs, a.slicing, a.scheduling, now);
    st.pending = a;
    ++controls_sent_;
    return true;
  } catch (const ric::NoSuchNode&) {
    events_.push_back("t=" + std::to_string(now) + " ev=control_failed bs=" + std::to_string(bs) + " outcome=no-node");
    ++controls_failed_;
    return false;
  }
}

void XappBase::note_inference_failure(BsId bs, const std::string& what, std::int64_t now) {
  ++inference_failures_;
  events_.push_back("t=" + std::to_string(now) + " ev=inference_failed bs=" + std::to_string(bs) + " what=" + what);
}

StaticXapp::StaticXapp(ric::RicService& ric, std::optional<Action> profile, RewardSpec reward)
    : XappBase(ric, "static"), profile_(profile), reward_(reward) {}

void StaticXapp::on_window(BsId bs, BsState& st, const e2::Indication&, WindowLog& log, std::int64_t now) {
  log.reward = reward_(log.agg);
  if (profile_) request(bs, st, *profile_, now);
}

SchedSlicingXapp::SchedSlicingXapp(ric::RicService& ric, const SlicingAgent& agent, RewardSpec reward,
                                   int cadence_windows)
    : XappBase(ric, "sched-slicing"),
      agent_(agent),
      reward_(reward),
      cadence_(std::max(1, cadence_windows)),
      hist_(agent.catalogue().size(), 0) {}

void SchedSlicingXapp::on_window(BsId bs, BsState& st, const e2::Indication&, WindowLog& log, std::int64_t now) {
  log.reward = reward_(log.agg);
  if (seen_++ % static_cast<std::uint64_t>(cadence_) != 0) return;
  Eigen::Index idx = 0;
  try {
    const auto p = agent_.ppo().policy(agent_.state(st.history));
    if (!p.allFinite()) throw std::runtime_error("non-finite policy output");
    p.maxCoeff(&idx);
  } catch (const std::exception& e) {
    note_inference_failure(bs, e.what(), now);
    return;
  }
  log.action = static_cast<int>(idx);
  ++hist_[static_cast<std::size_t>(idx)];
  request(bs, st, agent_.catalogue()[static_cast<std::size_t>(idx)], now);
}

SchedXapp::SchedXapp(ric::RicService& ric, const SchedAgents& agents, SlicingProfile slicing, SchedRewardSpec reward)
    : XappBase(ric, "sched"), agents_(agents), slicing_(slicing), reward_(reward) {}

void SchedXapp::on_window(BsId bs, BsState& st, const e2::Indication&, WindowLog& log, std::int64_t now) {
  log.reward = reward_(log.agg);
  SchedulingProfile sched = st.current ? st.current->scheduling : SchedulingProfile{};
  int code = 0;
  try {
    for (auto s : kAllSlices) {
      const auto p = agents_.agent(s).policy(agents_.state(st.history, s));
      if (!p.allFinite()) throw std::runtime_error("non-finite policy output");
      Eigen::Index a = 0;
      p.maxCoeff(&a);
      sched.policy[index_of(s)] = static_cast<Policy>(a);
      code = code * 3 + static_cast<int>(a);
    }
  } catch (const std::exception& e) {
    note_inference_failure(bs, e.what(), now);
    return;
  }
  log.action = code;
  request(bs, st, Action{slicing_, sched}, now);
}

OnlineTrainingXapp::OnlineTrainingXapp(ric::RicService& ric, SlicingAgent& agent, RewardSpec reward,
                                       OnlineConfig cfg)
    : XappBase(ric, "online-training"),
      agent_(agent),
      reward_(reward),
      cfg_(std::move(cfg)),
      buf_(agent.ppo().new_buffer()),
      hist_(agent.catalogue().size(), 0),
      plateau_(cfg_.plateau_window, cfg_.plateau_threshold) {
  if (cfg_.rollout_len < 1) throw ConfigError("online.rollout_len: must be >= 1");
}

void OnlineTrainingXapp::on_window(BsId bs, BsState& st, const e2::Indication&, WindowLog& log, std::int64_t now) {
  const double r = reward_(log.agg);
  log.reward = r;
  ml::VectorXd s;
  try {
    s = agent_.state(st.history);
  } catch (const std::exception& e) {
    note_inference_failure(bs, e.what(), now);
    return;
  }
  auto& ppo = agent_.ppo();
  if (stopped_) {
    Eigen::Index idx = 0;
    ppo.policy(s).maxCoeff(&idx);
    log.action = static_cast<int>(idx);
    request(bs, st, agent_.catalogue()[static_cast<std::size_t>(idx)], now);
    return;
  }

  const double v = ppo.value(s);
  if (auto it = pending_.find(bs); it != pending_.end()) {
    ml::Transition t{it->second.state, it->second.action, it->second.log_prob, r, it->second.value, false};
    // Interleaved nodes cannot share one advantage chain.
    if (bs_.size() > 1) {
      t.truncated = true;
      t.bootstrap = v;
    }
    buf_.add(std::move(t));
    ppo.add_steps(1);
  }
  if (static_cast<int>(buf_.size()) >= cfg_.rollout_len) {
    buf_.bootstrap_value = v;
    UpdateLog u;
    u.losses = ppo.update(buf_);
    u.step = ppo.global_step();
    u.histogram = hist_;
    std::fill(hist_.begin(), hist_.end(), 0);
    updates_.push_back(u);
    buf_ = ppo.new_buffer();
    plateau_.push(u.losses.entropy);
    if (cfg_.checkpoint_every > 0 && !cfg_.checkpoint_path.empty() &&
        ppo.updates() % static_cast<std::uint64_t>(cfg_.checkpoint_every) == 0) {
      agent_.save(cfg_.checkpoint_path);
    }
    if ((cfg_.plateau_threshold > 0.0 && plateau_.plateaued()) ||
        (cfg_.max_steps > 0 && ppo.global_step() >= cfg_.max_steps)) {
      stopped_ = true;
      pending_.clear();
    }
  }
  if (stopped_) {
    Eigen::Index idx = 0;
    ppo.policy(s).maxCoeff(&idx);
    log.action = static_cast<int>(idx);
    request(bs, st, agent_.catalogue()[static_cast<std::size_t>(idx)], now);
    return;
  }
  const auto c = ppo.act(s, ml::SelectMode::Explore);
  pending_[bs] = Pending{s, c.action, c.log_prob, v};
  log.action = c.action;
  ++hist_[static_cast<std::size_t>(c.action)];
  request(bs, st, agent_.catalogue()[static_cast<std::size_t>(c.action)], now);
}

void OnlineTrainingXapp::on_control_failed(BsId bs, BsState& st, const ric::ControlResult&) {
  // Record what the cell actually kept.
  auto it = pending_.find(bs);
  if (it == pending_.end() || !st.current) return;
  if (auto idx = agent_.catalogue().index_of(*st.current)) {
    const auto p = agent_.ppo().policy(it->second.state);
    it->second.action = static_cast<int>(*idx);
    it->second.log_prob = std::log(std::max(p(static_cast<Eigen::Index>(*idx)), 1e-12));
  }
}

CollectorXapp::CollectorXapp(ric::RicService& ric, ActionCatalogue catalogue, data::DatasetWriter& out,
                             int dwell_windows, int settle_windows)
    : XappBase(ric, "collector"),
      cat_(std::move(catalogue)),
      out_(out),
      dwell_(std::max(1, dwell_windows)),
      settle_(std::max(0, settle_windows)) {}

std::size_t CollectorXapp::completed_actions() const {
  if (sweep_.empty()) return 0;
  std::size_t m = SIZE_MAX;
  for (const auto& [bs, s] : sweep_) m = std::min(m, s.done);
  return m;
}

void CollectorXapp::on_window(BsId bs, BsState& st, const e2::Indication& ind, WindowLog& log, std::int64_t now) {
  auto& sw = sweep_[bs];
  const Action target = cat_[sw.next];
  log.action = static_cast<int>(sw.next);
  if (st.current != target) {
    request(bs, st, target, now);
    return;
  }
  ++sw.held;
  if (sw.held > settle_) {
    out_.append(ind.payload, data::Context{target.slicing, target.scheduling});
    rows_ += ind.payload.size();
  }
  if (sw.held >= dwell_ + settle_) {
    ++sw.done;
    sw.held = 0;
    sw.next = (sw.next + 1) % cat_.size();
    request(bs, st, cat_[sw.next], now);
  }
}

}  // namespace oranlab::xapp
