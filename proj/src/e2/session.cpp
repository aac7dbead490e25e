#include "oranlab/e2/session.hpp"

#include <algorithm>

namespace oranlab::e2 {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::SetupSent: return "SetupSent";
    case Phase::Established: return "Established";
    case Phase::Subscribed: return "Subscribed";
  }
  return "?";
}

namespace {

bool established(const SessionState& s) { return s.phase == Phase::Established || s.phase == Phase::Subscribed; }

void refresh_phase(SessionState& s) {
  if (!established(s)) return;
  const bool any = std::any_of(s.subscriptions.begin(), s.subscriptions.end(),
                               [](const auto& kv) { return kv.second.active; });
  s.phase = any ? Phase::Subscribed : Phase::Established;
}

class Stepper {
 public:
  explicit Stepper(SessionState s) : s_(std::move(s)) {}

  StepResult finish() { return StepResult{std::move(s_), std::move(actions_)}; }

  void on(const BytesIn& ev) {
    s_.decoder.feed(ev.bytes);
    while (true) {
      auto res = s_.decoder.next();
      if (!res) break;
      if (!res->ok()) {
        reset(std::string(to_string(res->status)) + " at offset " + std::to_string(res->error_offset) + ": " +
              res->detail);
        return;
      }
      const std::uint64_t resets_before = s_.resets;
      receive(*res->message, ev.now_ms);
      if (s_.resets != resets_before) return;  // remaining bytes belong to the dead session
    }
  }

  void on(const Timer& ev) {
    if (s_.phase == Phase::SetupSent && s_.setup_deadline_ms >= 0 && ev.now_ms >= s_.setup_deadline_ms) {
      reset("setup response timeout");
    }
  }

  void on(const LocalCommand& ev) {
    std::visit([&](const auto& m) { send_local(m, ev.now_ms); }, ev.msg);
  }

 private:
  SessionState s_;
  std::vector<Action> actions_;

  void emit(E2Message msg) {
    auto bytes = encode(msg);
    actions_.push_back(SendFrame{std::move(bytes), std::move(msg)});
  }

  void reject(std::string reason) { actions_.push_back(LocalReject{std::move(reason)}); }

  void reset(std::string reason) {
    const Role role = s_.role;
    const auto timeout = s_.setup_timeout_ms;
    const auto resets = s_.resets + 1;
    const auto dups = s_.duplicates_dropped;
    s_ = SessionState::make(role);
    s_.setup_timeout_ms = timeout;
    s_.resets = resets;
    s_.duplicates_dropped = dups;
    actions_.push_back(Reset{std::move(reason)});
  }

  void protocol_error(std::string_view what) {
    reset("ProtocolError: " + std::string(what) + " in phase " + std::string(to_string(s_.phase)));
  }

  /// Returns false and counts when `seq` is not newer than the last one seen.
  bool fresh(SeqNo seq) {
    if (seq <= s_.last_rx_seq) {
      ++s_.duplicates_dropped;
      return false;
    }
    s_.last_rx_seq = seq;
    return true;
  }

  // ---- outbound ----

  void send_local(const SetupRequest& m, std::int64_t now) {
    if (s_.role != Role::Node) return reject("only a node sends SetupRequest");
    if (s_.phase != Phase::Idle) return reject("setup already in progress");
    s_.bs_id = m.bs_id;
    s_.phase = Phase::SetupSent;
    s_.setup_deadline_ms = now + s_.setup_timeout_ms;
    emit(m);
  }

  void send_local(const SetupResponse&, std::int64_t) { reject("SetupResponse is generated by the session"); }

  void send_local(const SubscriptionRequest& m, std::int64_t) {
    if (s_.role != Role::Ric) return reject("only the RIC sends SubscriptionRequest");
    if (!established(s_)) return reject("not established");
    if (s_.subscriptions.count(m.sub_id)) return reject("sub_id " + std::to_string(m.sub_id) + " in use");
    s_.subscriptions[m.sub_id] = SubscriptionInfo{m.sm_id, m.report_period_ms, m.trigger, false};
    emit(m);
  }

  void send_local(const SubscriptionResponse& m, std::int64_t) {
    if (s_.role != Role::Node) return reject("only a node sends SubscriptionResponse");
    auto it = s_.subscriptions.find(m.sub_id);
    if (it == s_.subscriptions.end() || it->second.active) return reject("no pending subscription " + std::to_string(m.sub_id));
    if (m.accepted) {
      it->second.active = true;
    } else {
      s_.subscriptions.erase(it);
    }
    refresh_phase(s_);
    emit(m);
  }

  void send_local(const Indication& m, std::int64_t) {
    if (s_.role != Role::Node) return reject("only a node sends Indication");
    if (s_.phase != Phase::Subscribed) return reject("not subscribed");
    auto it = s_.subscriptions.find(m.sub_id);
    if (it == s_.subscriptions.end() || !it->second.active) return reject("unknown sub_id " + std::to_string(m.sub_id));
    Indication out = m;
    out.bs_id = s_.bs_id.value_or(m.bs_id);
    out.seq_no = s_.next_tx_seq++;
    emit(std::move(out));
  }

  void send_local(const ControlRequest& m, std::int64_t) {
    if (s_.role != Role::Ric) return reject("only the RIC sends ControlRequest");
    if (!established(s_)) return reject("not established");
    ControlRequest out = m;
    out.seq_no = s_.next_tx_seq++;
    emit(std::move(out));
  }

  void send_local(const ControlAck& m, std::int64_t) {
    if (s_.role != Role::Node) return reject("only a node sends ControlAck");
    if (!established(s_)) return reject("not established");
    emit(m);
  }

  // ---- inbound ----

  void receive(const E2Message& msg, std::int64_t now) {
    std::visit([&](const auto& m) { recv(m, now); }, msg);
  }

  void recv(const SetupRequest& m, std::int64_t) {
    if (s_.role != Role::Ric || s_.phase != Phase::Idle) return protocol_error("unexpected SetupRequest");
    const bool ok = !m.supported_sm_ids.empty();
    if (ok) {
      s_.bs_id = m.bs_id;
      s_.peer_sms = m.supported_sm_ids;
      s_.phase = Phase::Established;
    }
    actions_.push_back(Deliver{m});
    emit(SetupResponse{ok});
  }

  void recv(const SetupResponse& m, std::int64_t) {
    if (s_.role != Role::Node || s_.phase != Phase::SetupSent) return protocol_error("unexpected SetupResponse");
    s_.setup_deadline_ms = -1;
    s_.phase = m.accepted ? Phase::Established : Phase::Idle;
    actions_.push_back(Deliver{m});
  }

  void recv(const SubscriptionRequest& m, std::int64_t) {
    if (s_.role != Role::Node || !established(s_)) return protocol_error("unexpected SubscriptionRequest");
    if (s_.subscriptions.count(m.sub_id)) {
      // A reused id is answered negatively without disturbing the live one.
      emit(SubscriptionResponse{m.sub_id, false});
      return;
    }
    s_.subscriptions[m.sub_id] = SubscriptionInfo{m.sm_id, m.report_period_ms, m.trigger, false};
    actions_.push_back(Deliver{m});
  }

  void recv(const SubscriptionResponse& m, std::int64_t) {
    if (s_.role != Role::Ric || !established(s_)) return protocol_error("unexpected SubscriptionResponse");
    auto it = s_.subscriptions.find(m.sub_id);
    if (it == s_.subscriptions.end() || it->second.active) return protocol_error("response for unknown subscription");
    if (m.accepted) {
      it->second.active = true;
    } else {
      s_.subscriptions.erase(it);
    }
    refresh_phase(s_);
    actions_.push_back(Deliver{m});
  }

  void recv(const Indication& m, std::int64_t) {
    if (s_.role != Role::Ric || s_.phase != Phase::Subscribed) return protocol_error("unexpected Indication");
    if (s_.bs_id && m.bs_id != *s_.bs_id) return protocol_error("Indication for foreign bs_id");
    if (!fresh(m.seq_no)) return;
    actions_.push_back(Deliver{m});
  }

  void recv(const ControlRequest& m, std::int64_t) {
    if (s_.role != Role::Node || !established(s_)) return protocol_error("unexpected ControlRequest");
    if (!fresh(m.seq_no)) return;
    actions_.push_back(Deliver{m});
  }

  void recv(const ControlAck& m, std::int64_t) {
    if (s_.role != Role::Ric || !established(s_)) return protocol_error("unexpected ControlAck");
    actions_.push_back(Deliver{m});
  }
};

}  // namespace

StepResult session_step(SessionState state, const Event& event) {
  Stepper st(std::move(state));
  std::visit([&](const auto& ev) { st.on(ev); }, event);
  return st.finish();
}

}  // namespace oranlab::e2
