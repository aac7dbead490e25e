#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "oranlab/sim/types.hpp"

namespace oranlab::xapp {

struct Action {
  SlicingProfile slicing;
  SchedulingProfile scheduling;
  friend bool operator==(const Action&, const Action&) = default;
};

std::string format_action(const Action& a);

/// Discrete action space: the cross product of slicing and scheduling
/// options, slicing-major. Index k maps to slicings[k / S], schedulings[k % S].
class ActionCatalogue {
 public:
  ActionCatalogue() = default;
  /// Throws ConfigError on empty lists, duplicates, or profiles invalid for
  /// `total_prbs`.
  ActionCatalogue(std::vector<SlicingProfile> slicings, std::vector<SchedulingProfile> schedulings,
                  int total_prbs = 50);

  /// Nine slicing triples over 50 PRBs times all-RR, all-WF, all-PF and
  /// PF-RR-WF.
  static ActionCatalogue make_default();
  /// Same catalogue without every action using `slicing`.
  ActionCatalogue without(const SlicingProfile& slicing) const;

  std::size_t size() const { return slicings_.size() * schedulings_.size(); }
  Action operator[](std::size_t k) const;
  std::optional<std::size_t> index_of(const Action& a) const;
  bool contains(const Action& a) const { return index_of(a).has_value(); }
  const std::vector<SlicingProfile>& slicings() const { return slicings_; }
  const std::vector<SchedulingProfile>& schedulings() const { return schedulings_; }
  int total_prbs() const { return total_prbs_; }

  /// "36-3-11,36-9-5|RR-RR-RR,PF-RR-WF"
  std::string to_text() const;
  static ActionCatalogue from_text(std::string_view text, int total_prbs = 50);
  friend bool operator==(const ActionCatalogue&, const ActionCatalogue&) = default;

 private:
  std::vector<SlicingProfile> slicings_;
  std::vector<SchedulingProfile> schedulings_;
  int total_prbs_ = 50;
};

void to_json(nlohmann::json& j, const ActionCatalogue& c);
void from_json(const nlohmann::json& j, ActionCatalogue& c);

}  // namespace oranlab::xapp
