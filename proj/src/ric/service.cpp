#include "oranlab/ric/service.hpp"

#include <algorithm>
#include <sstream>

namespace oranlab::ric {

namespace {
constexpr std::size_t kLogLimit = 100000;

std::string sm_list(const std::vector<e2::SmId>& sms) {
  std::string out;
  for (std::size_t i = 0; i < sms.size(); ++i) {
    if (i) out.push_back(',');
    out.append(e2::to_string(sms[i]));
  }
  return out.empty() ? "-" : out;
}
}  // namespace

std::string_view to_string(Arbitration a) { return a == Arbitration::Exclusive ? "exclusive" : "last-writer-wins"; }

std::optional<Arbitration> parse_arbitration(std::string_view text) {
  if (text == "exclusive") return Arbitration::Exclusive;
  if (text == "last-writer-wins") return Arbitration::LastWriterWins;
  return std::nullopt;
}

std::string_view to_string(ControlOutcome o) {
  switch (o) {
    case ControlOutcome::Ok: return "ok";
    case ControlOutcome::Rejected: return "rejected";
    case ControlOutcome::Timeout: return "timeout";
    case ControlOutcome::Conflict: return "conflict";
  }
  return "?";
}

RicService::RicService(RicConfig cfg) : cfg_(cfg) {}

void RicService::log(std::int64_t now, std::string_view ev, const std::string& rest) {
  std::string line = "t=" + std::to_string(now) + " ev=" + std::string(ev);
  if (!rest.empty()) {
    line.push_back(' ');
    line += rest;
  }
  if (sink_) *sink_ << line << '\n';
  if (log_.size() >= kLogLimit) log_.erase(log_.begin(), log_.begin() + kLogLimit / 2);
  log_.push_back(std::move(line));
}

ConnId RicService::open_connection(SendFn send, CloseFn close) {
  std::lock_guard lk(mu_);
  const ConnId id = next_conn_++;
  Connection c;
  c.session = e2::SessionState::make(e2::Role::Ric);
  c.send = std::move(send);
  c.close = std::move(close);
  conns_.emplace(id, std::move(c));
  return id;
}

void RicService::on_bytes(ConnId conn, std::span<const std::uint8_t> bytes, std::int64_t now_ms) {
  std::lock_guard lk(mu_);
  auto it = conns_.find(conn);
  if (it == conns_.end()) return;
  if (it->second.bs_id) {
    auto reg = registry_.find(*it->second.bs_id);
    if (reg != registry_.end() && reg->second.conn == conn) reg->second.last_seen_ms = now_ms;
  }
  step_conn(conn, it->second, e2::BytesIn{std::vector<std::uint8_t>(bytes.begin(), bytes.end()), now_ms}, now_ms);
}

void RicService::step_conn(ConnId id, Connection& c, const e2::Event& ev, std::int64_t now) {
  const auto dups_before = c.session.duplicates_dropped;
  auto res = e2::session_step(std::move(c.session), ev);
  c.session = std::move(res.state);
  stats_.duplicate_drops += c.session.duplicates_dropped - dups_before;
  bool reset = false;
  std::string reset_reason;
  for (auto& action : res.actions) {
    if (auto* f = std::get_if<e2::SendFrame>(&action)) {
      if (c.send) c.send(f->bytes);
    } else if (auto* d = std::get_if<e2::Deliver>(&action)) {
      handle_delivery(id, c, d->msg, now);
    } else if (auto* r = std::get_if<e2::Reset>(&action)) {
      reset = true;
      reset_reason = r->reason;
    } else if (auto* lr = std::get_if<e2::LocalReject>(&action)) {
      log(now, "local_reject", "conn=" + std::to_string(id) + " reason=\"" + lr->reason + "\"");
    }
  }
  if (reset) {
    ++stats_.protocol_resets;
    drop_connection(id, now, "protocol reset: " + reset_reason, true);
  }
}

void RicService::handle_delivery(ConnId id, Connection& c, const e2::E2Message& msg, std::int64_t now) {
  if (auto* setup = std::get_if<e2::SetupRequest>(&msg)) {
    if (c.session.phase == e2::Phase::Idle) {
      log(now, "setup_rejected", "conn=" + std::to_string(id) + " bs=" + std::to_string(setup->bs_id) +
                                     " sms=" + sm_list(setup->supported_sm_ids));
      return;
    }
    const BsId bs = setup->bs_id;
    auto prior = registry_.find(bs);
    if (prior != registry_.end() && prior->second.conn != id) {
      const ConnId old = prior->second.conn;
      log(now, "node_replaced", "bs=" + std::to_string(bs) + " old_conn=" + std::to_string(old) +
                                    " new_conn=" + std::to_string(id));
      drop_connection(old, now, "replaced by new session", true);
    }
    c.bs_id = bs;
    registry_[bs] = NodeEntry{id, setup->supported_sm_ids, now};
    log(now, "node_registered", "bs=" + std::to_string(bs) + " conn=" + std::to_string(id) +
                                    " sms=" + sm_list(setup->supported_sm_ids));
    return;
  }
  if (auto* sr = std::get_if<e2::SubscriptionResponse>(&msg)) {
    auto rt = routes_.find(sr->sub_id);
    if (rt == routes_.end()) return;
    const XappId xapp = rt->second.xapp;
    const BsId bs = rt->second.bs_id;
    if (sr->accepted) {
      rt->second.accepted = true;
    } else {
      routes_.erase(rt);
      node_subs_[bs].erase(sr->sub_id);
    }
    auto xs = xapps_.find(xapp);
    if (xs != xapps_.end()) xs->second.sub_events.push_back(SubscriptionEvent{sr->sub_id, bs, sr->accepted});
    log(now, sr->accepted ? "sub_accepted" : "sub_rejected",
        "sub=" + std::to_string(sr->sub_id) + " bs=" + std::to_string(bs) + " xapp=" + std::to_string(xapp));
    return;
  }
  if (auto* ind = std::get_if<e2::Indication>(&msg)) {
    route_locked(*ind, now);
    return;
  }
  if (auto* ack = std::get_if<e2::ControlAck>(&msg)) {
    if (!c.bs_id) return;
    auto p = pending_.find({*c.bs_id, ack->seq_no});
    if (p == pending_.end()) {
      log(now, "stray_ack", "bs=" + std::to_string(*c.bs_id) + " seq=" + std::to_string(ack->seq_no));
      return;
    }
    const auto pc = p->second;
    pending_.erase(p);
    const auto outcome = ack->status == e2::ControlStatus::Ok ? ControlOutcome::Ok : ControlOutcome::Rejected;
    auto xs = xapps_.find(pc.xapp);
    if (xs != xapps_.end()) {
      xs->second.results.push_back(ControlResult{pc.ticket, pc.bs_id, ack->seq_no, outcome, pc.sent_ms, now});
    }
    log(now, "control_ack", "bs=" + std::to_string(pc.bs_id) + " seq=" + std::to_string(ack->seq_no) +
                                " xapp=" + std::to_string(pc.xapp) + " status=" + std::string(e2::to_string(ack->status)) +
                                " rtt_ms=" + std::to_string(now - pc.sent_ms));
  }
}

void RicService::forget_node(BsId bs, std::int64_t now) {
  registry_.erase(bs);
  auto ns = node_subs_.find(bs);
  if (ns != node_subs_.end()) {
    for (SubId s : ns->second) routes_.erase(s);
    node_subs_.erase(ns);
  }
  controller_.erase(bs);
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (it->first.first == bs) {
      auto xs = xapps_.find(it->second.xapp);
      if (xs != xapps_.end()) {
        xs->second.results.push_back(ControlResult{it->second.ticket, bs, it->first.second, ControlOutcome::Timeout,
                                                   it->second.sent_ms, now});
      }
      ++stats_.control_timeouts;
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

void RicService::drop_connection(ConnId id, std::int64_t now, std::string_view why, bool call_close) {
  auto it = conns_.find(id);
  if (it == conns_.end()) return;
  auto conn = std::move(it->second);
  conns_.erase(it);
  if (conn.bs_id) {
    auto reg = registry_.find(*conn.bs_id);
    if (reg != registry_.end() && reg->second.conn == id) forget_node(*conn.bs_id, now);
  }
  log(now, "conn_closed", "conn=" + std::to_string(id) +
                              (conn.bs_id ? " bs=" + std::to_string(*conn.bs_id) : std::string()) + " reason=\"" +
                              std::string(why) + "\"");
  if (call_close && conn.close) conn.close();
}

void RicService::close_connection(ConnId conn, std::int64_t now_ms) {
  std::lock_guard lk(mu_);
  drop_connection(conn, now_ms, "peer closed", false);
}

void RicService::tick(std::int64_t now_ms) {
  std::lock_guard lk(mu_);
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (now_ms - it->second.sent_ms >= cfg_.control_deadline_ms) {
      auto xs = xapps_.find(it->second.xapp);
      if (xs != xapps_.end()) {
        xs->second.results.push_back(ControlResult{it->second.ticket, it->second.bs_id, it->first.second,
                                                   ControlOutcome::Timeout, it->second.sent_ms, now_ms});
      }
      ++stats_.control_timeouts;
      log(now_ms, "control_timeout", "bs=" + std::to_string(it->second.bs_id) + " seq=" +
                                         std::to_string(it->first.second) + " xapp=" + std::to_string(it->second.xapp));
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  std::vector<ConnId> stale;
  for (const auto& [bs, entry] : registry_) {
    if (now_ms - entry.last_seen_ms > cfg_.node_timeout_ms) stale.push_back(entry.conn);
  }
  for (ConnId c : stale) {
    ++stats_.evictions;
    drop_connection(c, now_ms, "liveness timeout", true);
  }
}

XappId RicService::attach_xapp(std::string name) {
  std::lock_guard lk(mu_);
  const XappId id = next_xapp_++;
  xapps_[id].name = std::move(name);
  return id;
}

void RicService::detach_xapp(XappId id, std::int64_t now_ms) {
  std::lock_guard lk(mu_);
  xapps_.erase(id);
  for (auto it = routes_.begin(); it != routes_.end();) {
    if (it->second.xapp == id) {
      node_subs_[it->second.bs_id].erase(it->first);
      it = routes_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = controller_.begin(); it != controller_.end();) {
    it = it->second == id ? controller_.erase(it) : std::next(it);
  }
  log(now_ms, "xapp_detached", "xapp=" + std::to_string(id));
}

RicService::XappState& RicService::xapp_state(XappId id) {
  auto it = xapps_.find(id);
  if (it == xapps_.end()) throw NoSuchXapp(id);
  return it->second;
}

SubId RicService::subscribe(XappId xapp, BsId bs, e2::SmId sm, std::uint32_t period_ms, e2::Trigger trigger,
                            std::int64_t now_ms) {
  std::lock_guard lk(mu_);
  xapp_state(xapp);
  auto reg = registry_.find(bs);
  if (reg == registry_.end()) throw NoSuchNode(bs);
  auto& conn = conns_.at(reg->second.conn);
  const SubId sub = next_sub_++;
  routes_[sub] = Route{xapp, bs, sm, period_ms, trigger, false};
  node_subs_[bs].insert(sub);
  log(now_ms, "subscribe", "sub=" + std::to_string(sub) + " bs=" + std::to_string(bs) + " xapp=" +
                               std::to_string(xapp) + " sm=" + std::string(e2::to_string(sm)) +
                               " period_ms=" + std::to_string(period_ms) + " trigger=" + std::string(e2::to_string(trigger)));
  step_conn(reg->second.conn, conn, e2::LocalCommand{e2::SubscriptionRequest{sub, sm, period_ms, trigger}, now_ms},
            now_ms);
  return sub;
}

std::uint64_t RicService::send_control(XappId xapp, BsId bs, const SlicingProfile& slicing,
                                       const SchedulingProfile& scheduling, std::int64_t now_ms) {
  std::lock_guard lk(mu_);
  auto& xs = xapp_state(xapp);
  auto reg = registry_.find(bs);
  if (reg == registry_.end()) throw NoSuchNode(bs);
  const std::uint64_t ticket = next_ticket_++;
  if (cfg_.arbitration == Arbitration::Exclusive) {
    auto [owner, inserted] = controller_.try_emplace(bs, xapp);
    if (!inserted && owner->second != xapp) {
      ++stats_.control_conflicts;
      xs.results.push_back(ControlResult{ticket, bs, 0, ControlOutcome::Conflict, now_ms, now_ms});
      log(now_ms, "control_conflict", "bs=" + std::to_string(bs) + " xapp=" + std::to_string(xapp) +
                                          " owner=" + std::to_string(owner->second));
      return ticket;
    }
  }
  const ConnId cid = reg->second.conn;
  auto& conn = conns_.at(cid);
  const e2::SeqNo seq = conn.session.next_tx_seq;
  pending_[{bs, seq}] = PendingControl{ticket, xapp, bs, cid, now_ms};
  ++stats_.controls_sent;
  log(now_ms, "control_sent", "bs=" + std::to_string(bs) + " seq=" + std::to_string(seq) + " xapp=" +
                                  std::to_string(xapp) + " slicing=" + format_slicing(slicing) +
                                  " scheduling=" + format_scheduling(scheduling));
  step_conn(cid, conn, e2::LocalCommand{e2::ControlRequest{bs, 0, slicing, scheduling}, now_ms}, now_ms);
  return ticket;
}

std::size_t RicService::route_locked(const e2::Indication& ind, std::int64_t now) {
  auto rt = routes_.find(ind.sub_id);
  if (rt == routes_.end() || !rt->second.accepted || rt->second.bs_id != ind.bs_id) {
    ++stats_.unknown_sub_drops;
    log(now, "unknown_sub_drop", "sub=" + std::to_string(ind.sub_id) + " bs=" + std::to_string(ind.bs_id));
    return 0;
  }
  auto xs = xapps_.find(rt->second.xapp);
  if (xs == xapps_.end()) {
    ++stats_.unknown_sub_drops;
    return 0;
  }
  auto& q = xs->second.queue;
  if (cfg_.queue_bound > 0 && q.size() >= cfg_.queue_bound) {
    q.pop_front();
    ++xs->second.drops;
    ++stats_.queue_overflow_drops;
  }
  q.push_back(Delivery{ind, now});
  ++stats_.indications_routed;
  return 1;
}

std::size_t RicService::route_indication(const e2::Indication& ind, std::int64_t now_ms) {
  std::lock_guard lk(mu_);
  return route_locked(ind, now_ms);
}

std::vector<Delivery> RicService::poll(XappId xapp) {
  std::lock_guard lk(mu_);
  auto& xs = xapp_state(xapp);
  std::vector<Delivery> out(std::make_move_iterator(xs.queue.begin()), std::make_move_iterator(xs.queue.end()));
  xs.queue.clear();
  return out;
}

std::vector<ControlResult> RicService::poll_control_results(XappId xapp) {
  std::lock_guard lk(mu_);
  return std::exchange(xapp_state(xapp).results, {});
}

std::vector<SubscriptionEvent> RicService::poll_subscription_events(XappId xapp) {
  std::lock_guard lk(mu_);
  return std::exchange(xapp_state(xapp).sub_events, {});
}

std::size_t RicService::registry_size() const {
  std::lock_guard lk(mu_);
  return registry_.size();
}

bool RicService::is_registered(BsId bs) const {
  std::lock_guard lk(mu_);
  return registry_.count(bs) > 0;
}

std::vector<BsId> RicService::registered_nodes() const {
  std::lock_guard lk(mu_);
  std::vector<BsId> out;
  for (const auto& [bs, e] : registry_) out.push_back(bs);
  return out;
}

std::optional<NodeEntry> RicService::node(BsId bs) const {
  std::lock_guard lk(mu_);
  auto it = registry_.find(bs);
  if (it == registry_.end()) return std::nullopt;
  return it->second;
}

std::optional<Route> RicService::route(SubId sub) const {
  std::lock_guard lk(mu_);
  auto it = routes_.find(sub);
  if (it == routes_.end()) return std::nullopt;
  return it->second;
}

std::set<SubId> RicService::subs_for_node(BsId bs) const {
  std::lock_guard lk(mu_);
  auto it = node_subs_.find(bs);
  return it == node_subs_.end() ? std::set<SubId>{} : it->second;
}

std::size_t RicService::queue_length(XappId xapp) const {
  std::lock_guard lk(mu_);
  auto it = xapps_.find(xapp);
  return it == xapps_.end() ? 0 : it->second.queue.size();
}

std::uint64_t RicService::queue_drops(XappId xapp) const {
  std::lock_guard lk(mu_);
  auto it = xapps_.find(xapp);
  return it == xapps_.end() ? 0 : it->second.drops;
}

std::optional<XappId> RicService::controller_of(BsId bs) const {
  std::lock_guard lk(mu_);
  auto it = controller_.find(bs);
  if (it == controller_.end()) return std::nullopt;
  return it->second;
}

RicStats RicService::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

std::vector<std::string> RicService::event_log() const {
  std::lock_guard lk(mu_);
  return log_;
}

void RicService::set_log_sink(std::ostream* out) {
  std::lock_guard lk(mu_);
  sink_ = out;
}

}  // namespace oranlab::ric
