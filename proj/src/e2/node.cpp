#include "oranlab/e2/node.hpp"

namespace oranlab::e2 {

E2Node::E2Node(sim::Cell& cell, SendFn send)
    : cell_(cell), send_(std::move(send)), session_(SessionState::make(Role::Node)) {}

void E2Node::start(std::int64_t now_ms) {
  step(LocalCommand{SetupRequest{cell_.bs_id(), {SmId::KpmReport, SmId::RanControl}}, now_ms}, now_ms);
}

void E2Node::on_bytes(std::span<const std::uint8_t> bytes, std::int64_t now_ms) {
  step(BytesIn{std::vector<std::uint8_t>(bytes.begin(), bytes.end()), now_ms}, now_ms);
}

void E2Node::disconnect() {
  session_ = SessionState::make(Role::Node);
  awaiting_event_ = false;
}

void E2Node::step(const Event& ev, std::int64_t now) {
  auto res = session_step(std::move(session_), ev);
  session_ = std::move(res.state);
  for (auto& action : res.actions) {
    if (auto* f = std::get_if<SendFrame>(&action)) {
      if (send_) send_(f->bytes);
    } else if (auto* d = std::get_if<Deliver>(&action)) {
      handle(d->msg, now);
    } else if (std::holds_alternative<Reset>(action)) {
      ++stats_.resets;
      awaiting_event_ = false;
    }
  }
}

void E2Node::handle(const E2Message& msg, std::int64_t now) {
  if (auto* sub = std::get_if<SubscriptionRequest>(&msg)) {
    bool ok = true;
    if (sub->sm_id == SmId::KpmReport && sub->trigger == Trigger::Periodic) {
      ok = sub->report_period_ms == static_cast<std::uint32_t>(cell_.config().reporting_period_ms);
    }
    if (!ok) ++stats_.subscriptions_rejected;
    step(LocalCommand{SubscriptionResponse{sub->sub_id, ok}, now}, now);
    return;
  }
  if (auto* ctl = std::get_if<ControlRequest>(&msg)) {
    ControlStatus status = ControlStatus::Ok;
    if (ctl->bs_id != cell_.bs_id()) {
      status = ControlStatus::Rejected;
      control_log_.push_back("bs_id mismatch: " + std::to_string(ctl->bs_id));
    } else {
      auto r = cell_.apply_control(ctl->slicing, ctl->scheduling);
      if (r.accepted) {
        ++stats_.controls_applied;
        awaiting_event_ = true;
      } else {
        status = ControlStatus::Rejected;
        control_log_.push_back(r.reason);
      }
    }
    if (status != ControlStatus::Ok) ++stats_.controls_rejected;
    if (control_log_.size() > 64) control_log_.erase(control_log_.begin());
    step(LocalCommand{ControlAck{ctl->seq_no, status}, now}, now);
  }
}

void E2Node::send_indications(Trigger trigger, const std::vector<KpmRecord>& records, std::int64_t now) {
  if (session_.phase != Phase::Subscribed) return;
  std::vector<SubId> subs;
  for (const auto& [id, info] : session_.subscriptions) {
    if (info.active && info.sm_id == SmId::KpmReport && info.trigger == trigger) subs.push_back(id);
  }
  for (SubId id : subs) {
    Indication ind;
    ind.sub_id = id;
    ind.bs_id = cell_.bs_id();
    ind.payload = records;
    step(LocalCommand{std::move(ind), now}, now);
    ++stats_.indications_sent;
  }
}

void E2Node::step_tti() {
  const bool applying = cell_.has_pending_control();
  cell_.step_tti();
  const std::int64_t now = cell_.now_ms();
  if (applying && awaiting_event_) {
    awaiting_event_ = false;
    send_indications(Trigger::OnEvent, cell_.peek_kpms(), now);
  }
  const std::int64_t period_ttis = cell_.config().reporting_period_ms / cell_.config().tti_ms;
  if (period_ttis > 0 && cell_.tti() % period_ttis == 0) {
    auto records = cell_.snapshot_kpms();
    send_indications(Trigger::Periodic, records, now);
  }
}

}  // namespace oranlab::e2
