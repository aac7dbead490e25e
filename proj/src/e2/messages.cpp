#include "oranlab/e2/messages.hpp"

namespace oranlab::e2 {

std::string_view to_string(SmId id) { return id == SmId::KpmReport ? "KPM_REPORT" : "RAN_CONTROL"; }

std::string_view to_string(Trigger t) { return t == Trigger::Periodic ? "PERIODIC" : "ON_EVENT"; }

std::string_view to_string(ControlStatus s) {
  switch (s) {
    case ControlStatus::Ok: return "OK";
    case ControlStatus::Rejected: return "REJECTED";
    case ControlStatus::Conflict: return "CONFLICT";
  }
  return "?";
}

std::optional<SmId> parse_sm_id(std::string_view text) {
  if (text == "KPM_REPORT") return SmId::KpmReport;
  if (text == "RAN_CONTROL") return SmId::RanControl;
  return std::nullopt;
}

std::optional<Trigger> parse_trigger(std::string_view text) {
  if (text == "PERIODIC") return Trigger::Periodic;
  if (text == "ON_EVENT") return Trigger::OnEvent;
  return std::nullopt;
}

std::optional<ControlStatus> parse_control_status(std::string_view text) {
  for (auto s : {ControlStatus::Ok, ControlStatus::Rejected, ControlStatus::Conflict}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

std::string_view message_tag(const E2Message& msg) {
  struct Visitor {
    std::string_view operator()(const SetupRequest&) const { return "SETUP_REQUEST"; }
    std::string_view operator()(const SetupResponse&) const { return "SETUP_RESPONSE"; }
    std::string_view operator()(const SubscriptionRequest&) const { return "SUBSCRIPTION_REQUEST"; }
    std::string_view operator()(const SubscriptionResponse&) const { return "SUBSCRIPTION_RESPONSE"; }
    std::string_view operator()(const Indication&) const { return "INDICATION"; }
    std::string_view operator()(const ControlRequest&) const { return "CONTROL_REQUEST"; }
    std::string_view operator()(const ControlAck&) const { return "CONTROL_ACK"; }
  };
  return std::visit(Visitor{}, msg);
}

}  // namespace oranlab::e2
