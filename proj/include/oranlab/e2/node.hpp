#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "oranlab/e2/session.hpp"
#include "oranlab/sim/cell.hpp"

namespace oranlab::e2 {

struct NodeStats {
  std::uint64_t indications_sent = 0;
  std::uint64_t controls_applied = 0;
  std::uint64_t controls_rejected = 0;
  std::uint64_t subscriptions_rejected = 0;
  std::uint64_t resets = 0;
};

/// RAN-side E2 agent wrapping one simulated cell. It registers with the RIC,
/// serves KPM_REPORT subscriptions and applies RAN_CONTROL requests.
///
/// The cell snapshots its KPM window once per reporting period, so periodic
/// subscriptions must use exactly that period; others are refused. OnEvent
/// subscriptions get an Indication (window-to-date, without resetting) at the
/// TTI where a received control takes effect.
class E2Node {
 public:
  using SendFn = std::function<void(std::span<const std::uint8_t>)>;

  E2Node(sim::Cell& cell, SendFn send);

  /// Sends the SetupRequest.
  void start(std::int64_t now_ms);
  void on_bytes(std::span<const std::uint8_t> bytes, std::int64_t now_ms);
  /// Steps the cell one TTI and emits any due Indications.
  void step_tti();
  /// Drops the association (the transport went away).
  void disconnect();

  sim::Cell& cell() { return cell_; }
  const sim::Cell& cell() const { return cell_; }
  const SessionState& session() const { return session_; }
  bool established() const { return session_.phase == Phase::Established || session_.phase == Phase::Subscribed; }
  const NodeStats& stats() const { return stats_; }
  /// Rejection reasons of the most recent controls, newest last.
  const std::vector<std::string>& control_log() const { return control_log_; }

 private:
  void step(const Event& ev, std::int64_t now);
  void handle(const E2Message& msg, std::int64_t now);
  void send_indications(Trigger trigger, const std::vector<KpmRecord>& records, std::int64_t now);

  sim::Cell& cell_;
  SendFn send_;
  SessionState session_;
  NodeStats stats_;
  bool awaiting_event_ = false;
  std::vector<std::string> control_log_;
};

}  // namespace oranlab::e2
