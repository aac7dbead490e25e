#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "oranlab/sim/types.hpp"

namespace oranlab::e2 {

enum class SmId : std::uint8_t { KpmReport = 1, RanControl = 2 };
enum class Trigger : std::uint8_t { Periodic, OnEvent };
enum class ControlStatus : std::uint8_t { Ok, Rejected, Conflict };

std::string_view to_string(SmId id);
std::string_view to_string(Trigger t);
std::string_view to_string(ControlStatus s);
std::optional<SmId> parse_sm_id(std::string_view text);
std::optional<Trigger> parse_trigger(std::string_view text);
std::optional<ControlStatus> parse_control_status(std::string_view text);

using SubId = std::uint32_t;
using SeqNo = std::uint64_t;

struct SetupRequest {
  BsId bs_id = 0;
  std::vector<SmId> supported_sm_ids;
  friend bool operator==(const SetupRequest&, const SetupRequest&) = default;
};

struct SetupResponse {
  bool accepted = false;
  friend bool operator==(const SetupResponse&, const SetupResponse&) = default;
};

struct SubscriptionRequest {
  SubId sub_id = 0;
  SmId sm_id = SmId::KpmReport;
  std::uint32_t report_period_ms = 0;
  Trigger trigger = Trigger::Periodic;
  friend bool operator==(const SubscriptionRequest&, const SubscriptionRequest&) = default;
};

struct SubscriptionResponse {
  SubId sub_id = 0;
  bool accepted = false;
  friend bool operator==(const SubscriptionResponse&, const SubscriptionResponse&) = default;
};

struct Indication {
  SubId sub_id = 0;
  BsId bs_id = 0;
  SeqNo seq_no = 0;
  std::vector<KpmRecord> payload;
  friend bool operator==(const Indication&, const Indication&) = default;
};

struct ControlRequest {
  BsId bs_id = 0;
  SeqNo seq_no = 0;
  SlicingProfile slicing;
  SchedulingProfile scheduling;
  friend bool operator==(const ControlRequest&, const ControlRequest&) = default;
};

struct ControlAck {
  SeqNo seq_no = 0;
  ControlStatus status = ControlStatus::Ok;
  friend bool operator==(const ControlAck&, const ControlAck&) = default;
};

using E2Message = std::variant<SetupRequest, SetupResponse, SubscriptionRequest, SubscriptionResponse, Indication,
                               ControlRequest, ControlAck>;

/// Wire tag of the message, e.g. "INDICATION".
std::string_view message_tag(const E2Message& msg);

}  // namespace oranlab::e2
