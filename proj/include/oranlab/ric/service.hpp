#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oranlab/e2/session.hpp"

namespace oranlab::ric {

using ConnId = std::uint64_t;
using XappId = std::uint32_t;
using e2::SubId;

enum class Arbitration : std::uint8_t { Exclusive, LastWriterWins };

std::string_view to_string(Arbitration a);
std::optional<Arbitration> parse_arbitration(std::string_view text);

struct RicConfig {
  /// Per-xApp Indication queue bound; the oldest entry is dropped on overflow.
  std::size_t queue_bound = 64;
  /// Nodes silent for longer than this are evicted.
  std::int64_t node_timeout_ms = 5000;
  /// Control acks must arrive within this deadline (one reporting period).
  std::int64_t control_deadline_ms = 250;
  Arbitration arbitration = Arbitration::Exclusive;
};

class NoSuchNode : public std::runtime_error {
 public:
  explicit NoSuchNode(BsId bs) : std::runtime_error("no such node: bs_id " + std::to_string(bs)), bs_id(bs) {}
  BsId bs_id;
};

class NoSuchXapp : public std::runtime_error {
 public:
  explicit NoSuchXapp(XappId id) : std::runtime_error("no such xApp: " + std::to_string(id)) {}
};

struct NodeEntry {
  ConnId conn = 0;
  std::vector<e2::SmId> sms;
  std::int64_t last_seen_ms = 0;
};

struct Route {
  XappId xapp = 0;
  BsId bs_id = 0;
  e2::SmId sm_id = e2::SmId::KpmReport;
  std::uint32_t period_ms = 0;
  e2::Trigger trigger = e2::Trigger::Periodic;
  bool accepted = false;
};

struct Delivery {
  e2::Indication indication;
  std::int64_t received_ms = 0;
};

enum class ControlOutcome : std::uint8_t { Ok, Rejected, Timeout, Conflict };
std::string_view to_string(ControlOutcome o);

struct ControlResult {
  std::uint64_t ticket = 0;
  BsId bs_id = 0;
  e2::SeqNo seq_no = 0;  // 0 when nothing was sent
  ControlOutcome outcome = ControlOutcome::Ok;
  std::int64_t sent_ms = 0;
  std::int64_t resolved_ms = 0;
};

struct SubscriptionEvent {
  SubId sub_id = 0;
  BsId bs_id = 0;
  bool accepted = false;
};

struct RicStats {
  std::uint64_t indications_routed = 0;
  std::uint64_t unknown_sub_drops = 0;
  std::uint64_t queue_overflow_drops = 0;
  std::uint64_t duplicate_drops = 0;
  std::uint64_t protocol_resets = 0;
  std::uint64_t evictions = 0;
  std::uint64_t controls_sent = 0;
  std::uint64_t control_timeouts = 0;
  std::uint64_t control_conflicts = 0;
};

/// Near-RT RIC core, independent of transport. Byte streams from nodes enter
/// through on_bytes; outbound bytes leave through the per-connection send
/// callback. xApps attach in-process and poll their queues. Every public
/// method takes the service lock, so updates are linearizable.
///
/// Event log lines: "t=<ms> ev=<name>" followed by space-separated key=value
/// pairs; see docs/event-log.md.
class RicService {
 public:
  using SendFn = std::function<void(std::span<const std::uint8_t>)>;
  using CloseFn = std::function<void()>;

  explicit RicService(RicConfig cfg = {});

  // ---- transport side ----
  ConnId open_connection(SendFn send, CloseFn close = {});
  void on_bytes(ConnId conn, std::span<const std::uint8_t> bytes, std::int64_t now_ms);
  /// Peer went away; drops its registry entry and routes.
  void close_connection(ConnId conn, std::int64_t now_ms);
  /// Control deadlines and liveness eviction.
  void tick(std::int64_t now_ms);

  // ---- xApp side ----
  XappId attach_xapp(std::string name);
  void detach_xapp(XappId id, std::int64_t now_ms);
  /// Throws NoSuchNode for unregistered bs_id. The route becomes active once
  /// the node accepts.
  SubId subscribe(XappId xapp, BsId bs, e2::SmId sm, std::uint32_t period_ms, e2::Trigger trigger,
                  std::int64_t now_ms);
  /// Returns a ticket; the outcome arrives through poll_control_results.
  /// Throws NoSuchNode for unregistered bs_id.
  std::uint64_t send_control(XappId xapp, BsId bs, const SlicingProfile& slicing,
                             const SchedulingProfile& scheduling, std::int64_t now_ms);
  std::vector<Delivery> poll(XappId xapp);
  std::vector<ControlResult> poll_control_results(XappId xapp);
  std::vector<SubscriptionEvent> poll_subscription_events(XappId xapp);

  /// Delivers an Indication to the owning xApp's queue; 0 or 1.
  std::size_t route_indication(const e2::Indication& ind, std::int64_t now_ms = 0);

  // ---- introspection ----
  std::size_t registry_size() const;
  bool is_registered(BsId bs) const;
  std::vector<BsId> registered_nodes() const;
  std::optional<NodeEntry> node(BsId bs) const;
  std::optional<Route> route(SubId sub) const;
  std::set<SubId> subs_for_node(BsId bs) const;
  std::size_t queue_length(XappId xapp) const;
  std::uint64_t queue_drops(XappId xapp) const;
  std::optional<XappId> controller_of(BsId bs) const;
  RicStats stats() const;
  std::vector<std::string> event_log() const;
  /// Mirror every new log line to `out` (nullptr to stop).
  void set_log_sink(std::ostream* out);
  const RicConfig& config() const { return cfg_; }

 private:
  struct Connection {
    e2::SessionState session;
    SendFn send;
    CloseFn close;
    std::optional<BsId> bs_id;
  };
  struct XappState {
    std::string name;
    std::deque<Delivery> queue;
    std::uint64_t drops = 0;
    std::vector<ControlResult> results;
    std::vector<SubscriptionEvent> sub_events;
  };
  struct PendingControl {
    std::uint64_t ticket = 0;
    XappId xapp = 0;
    BsId bs_id = 0;
    ConnId conn = 0;
    std::int64_t sent_ms = 0;
  };

  void log(std::int64_t now, std::string_view ev, const std::string& rest);
  void step_conn(ConnId id, Connection& c, const e2::Event& ev, std::int64_t now);
  void handle_delivery(ConnId id, Connection& c, const e2::E2Message& msg, std::int64_t now);
  void drop_connection(ConnId id, std::int64_t now, std::string_view why, bool call_close);
  void forget_node(BsId bs, std::int64_t now);
  std::size_t route_locked(const e2::Indication& ind, std::int64_t now);
  XappState& xapp_state(XappId id);

  RicConfig cfg_;
  mutable std::mutex mu_;
  ConnId next_conn_ = 1;
  XappId next_xapp_ = 1;
  SubId next_sub_ = 1;
  std::uint64_t next_ticket_ = 1;
  std::map<ConnId, Connection> conns_;
  std::map<BsId, NodeEntry> registry_;
  std::map<SubId, Route> routes_;
  std::map<BsId, std::set<SubId>> node_subs_;
  std::map<XappId, XappState> xapps_;
  std::map<std::pair<BsId, e2::SeqNo>, PendingControl> pending_;
  std::map<BsId, XappId> controller_;
  RicStats stats_;
  std::vector<std::string> log_;
  std::ostream* sink_ = nullptr;
};

}  // namespace oranlab::ric
