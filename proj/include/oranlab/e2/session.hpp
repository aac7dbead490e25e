#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "oranlab/e2/codec.hpp"
#include "oranlab/e2/messages.hpp"

namespace oranlab::e2 {

enum class Role : std::uint8_t { Node, Ric };
enum class Phase : std::uint8_t { Idle, SetupSent, Established, Subscribed };

std::string_view to_string(Phase p);

struct SubscriptionInfo {
  SmId sm_id = SmId::KpmReport;
  std::uint32_t report_period_ms = 0;
  Trigger trigger = Trigger::Periodic;
  bool active = false;  // false while awaiting the response
};

/// One end of an E2-lite association. Value type: the transition function
/// consumes it and returns the successor, so a session can be checkpointed or
/// compared by copying it.
struct SessionState {
  Role role = Role::Node;
  Phase phase = Phase::Idle;
  std::optional<BsId> bs_id;
  std::vector<SmId> peer_sms;
  std::map<SubId, SubscriptionInfo> subscriptions;
  /// Next seq_no stamped on outbound Indication / ControlRequest.
  SeqNo next_tx_seq = 1;
  /// Highest seq_no accepted inbound; 0 means none yet.
  SeqNo last_rx_seq = 0;
  std::uint64_t duplicates_dropped = 0;
  std::uint64_t resets = 0;
  std::int64_t setup_deadline_ms = -1;
  std::int64_t setup_timeout_ms = 1000;
  StreamDecoder decoder;

  static SessionState make(Role role) {
    SessionState s;
    s.role = role;
    return s;
  }
};

struct BytesIn {
  std::vector<std::uint8_t> bytes;
  std::int64_t now_ms = 0;
};
struct Timer {
  std::int64_t now_ms = 0;
};
/// The local application asks the session to send `msg`.
struct LocalCommand {
  E2Message msg;
  std::int64_t now_ms = 0;
};
using Event = std::variant<BytesIn, Timer, LocalCommand>;

struct SendFrame {
  std::vector<std::uint8_t> bytes;
  E2Message msg;  // as sent, with the stamped seq_no
};
struct Deliver {
  E2Message msg;
};
struct Reset {
  std::string reason;
};
struct LocalReject {
  std::string reason;
};
using Action = std::variant<SendFrame, Deliver, Reset, LocalReject>;

struct StepResult {
  SessionState state;
  std::vector<Action> actions;
};

/// The protocol state machine. Inbound messages that are illegal in the
/// current phase reset the session; duplicate inbound sequence numbers are
/// dropped and counted. The RIC side answers SetupRequest by itself.
StepResult session_step(SessionState state, const Event& event);

}  // namespace oranlab::e2
