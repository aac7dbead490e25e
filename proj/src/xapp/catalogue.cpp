#include "oranlab/xapp/catalogue.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

namespace oranlab::xapp {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

std::string format_action(const Action& a) {
  return format_slicing(a.slicing) + "/" + format_scheduling(a.scheduling);
}

ActionCatalogue::ActionCatalogue(std::vector<SlicingProfile> slicings, std::vector<SchedulingProfile> schedulings,
                                 int total_prbs)
    : slicings_(std::move(slicings)), schedulings_(std::move(schedulings)), total_prbs_(total_prbs) {
  if (slicings_.empty()) throw ConfigError("catalogue.slicing: at least one option required");
  if (schedulings_.empty()) throw ConfigError("catalogue.scheduling: at least one option required");
  for (const auto& s : slicings_) {
    if (auto err = check_slicing(s, total_prbs_)) throw ConfigError("catalogue.slicing: " + *err);
  }
  if (std::set(slicings_.begin(), slicings_.end()).size() != slicings_.size()) {
    throw ConfigError("catalogue.slicing: duplicate option");
  }
  if (std::set(schedulings_.begin(), schedulings_.end()).size() != schedulings_.size()) {
    throw ConfigError("catalogue.scheduling: duplicate option");
  }
}

ActionCatalogue ActionCatalogue::make_default() {
  using P = Policy;
  return ActionCatalogue(
      {{{36, 3, 11}}, {{36, 9, 5}}, {{42, 3, 5}}, {{30, 10, 10}}, {{30, 5, 15}}, {{24, 13, 13}}, {{20, 15, 15}},
       {{16, 17, 17}}, {{10, 20, 20}}},
      {{{P::RR, P::RR, P::RR}}, {{P::WF, P::WF, P::WF}}, {{P::PF, P::PF, P::PF}}, {{P::PF, P::RR, P::WF}}}, 50);
}

ActionCatalogue ActionCatalogue::without(const SlicingProfile& slicing) const {
  auto s = slicings_;
  s.erase(std::remove(s.begin(), s.end(), slicing), s.end());
  return ActionCatalogue(std::move(s), schedulings_, total_prbs_);
}

Action ActionCatalogue::operator[](std::size_t k) const {
  if (k >= size()) throw std::out_of_range("action index " + std::to_string(k));
  return {slicings_[k / schedulings_.size()], schedulings_[k % schedulings_.size()]};
}

std::optional<std::size_t> ActionCatalogue::index_of(const Action& a) const {
  auto i = std::find(slicings_.begin(), slicings_.end(), a.slicing);
  auto j = std::find(schedulings_.begin(), schedulings_.end(), a.scheduling);
  if (i == slicings_.end() || j == schedulings_.end()) return std::nullopt;
  return static_cast<std::size_t>(i - slicings_.begin()) * schedulings_.size() +
         static_cast<std::size_t>(j - schedulings_.begin());
}

std::string ActionCatalogue::to_text() const {
  std::string s;
  for (std::size_t i = 0; i < slicings_.size(); ++i) s += (i ? "," : "") + format_slicing(slicings_[i]);
  s += '|';
  for (std::size_t i = 0; i < schedulings_.size(); ++i) s += (i ? "," : "") + format_scheduling(schedulings_[i]);
  return s;
}

ActionCatalogue ActionCatalogue::from_text(std::string_view text, int total_prbs) {
  const auto halves = split(text, '|');
  if (halves.size() != 2) throw ConfigError("catalogue: expected '<slicings>|<schedulings>'");
  std::vector<SlicingProfile> sl;
  std::vector<SchedulingProfile> sc;
  for (auto part : split(halves[0], ',')) {
    auto p = parse_slicing(part);
    if (!p) throw ConfigError("catalogue.slicing: cannot parse '" + std::string(part) + "'");
    sl.push_back(*p);
  }
  for (auto part : split(halves[1], ',')) {
    auto p = parse_scheduling(part);
    if (!p) throw ConfigError("catalogue.scheduling: cannot parse '" + std::string(part) + "'");
    sc.push_back(*p);
  }
  return ActionCatalogue(std::move(sl), std::move(sc), total_prbs);
}

void to_json(nlohmann::json& j, const ActionCatalogue& c) {
  j = nlohmann::json::object();
  auto& sl = j["slicing"] = nlohmann::json::array();
  for (const auto& s : c.slicings()) sl.push_back(format_slicing(s));
  auto& sc = j["scheduling"] = nlohmann::json::array();
  for (const auto& s : c.schedulings()) sc.push_back(format_scheduling(s));
  j["total_prbs"] = c.total_prbs();
}

void from_json(const nlohmann::json& j, ActionCatalogue& c) {
  std::string text;
  for (const auto& s : j.at("slicing")) text += (text.empty() ? "" : ",") + s.get<std::string>();
  text += '|';
  bool first = true;
  for (const auto& s : j.at("scheduling")) {
    text += (first ? "" : ",") + s.get<std::string>();
    first = false;
  }
  c = ActionCatalogue::from_text(text, j.value("total_prbs", 50));
}

}  // namespace oranlab::xapp
