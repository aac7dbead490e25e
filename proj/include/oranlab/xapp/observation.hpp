#pragma once

#include <deque>
#include <map>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "oranlab/ml/autoencoder.hpp"
#include "oranlab/xapp/reward.hpp"

namespace oranlab::xapp {

/// Metric columns of a per-slice window.
enum class ObsKind : std::uint8_t {
  Slicing,  // rate, buffer, TBs
  Sched,    // rate, buffer, PRB ratio
};

/// Reference scales mapping raw slice totals into [0, 1].
struct NormScales {
  double rate = 1.0;
  double buffer = 1.0;
  double tbs = 1.0;

  /// rate: largest per-slice offered load; buffer: per-slice buffer cap;
  /// tbs: TTIs per window times UEs per slice.
  static NormScales from_scenario(const sim::ScenarioConfig& cfg);
  void validate() const;
  std::map<std::string, std::string> to_meta(const std::string& prefix) const;
  static NormScales from_meta(const std::map<std::string, std::string>& meta, const std::string& prefix);
  friend bool operator==(const NormScales&, const NormScales&) = default;
};

/// The most recent T reporting windows of one base station.
class WindowHistory {
 public:
  void push(const WindowAggregate& w);
  std::size_t size() const { return windows_.size(); }
  bool empty() const { return windows_.empty(); }
  const WindowAggregate& latest() const { return windows_.back(); }
  const std::deque<WindowAggregate>& windows() const { return windows_; }
  void clear() { windows_.clear(); }

 private:
  std::deque<WindowAggregate> windows_;
};

/// One slice's T x N window, flattened row-major (oldest row first) into 30
/// entries. Missing leading rows are zero.
ml::VectorXd observation(const WindowHistory& h, Slice s, ObsKind kind, const NormScales& scales);

/// Groups records by timestamp, keeps the last T windows and builds the
/// observation as above.
ml::VectorXd assemble_observation(std::span<const KpmRecord> records, Slice s, ObsKind kind,
                                  const NormScales& scales);

}  // namespace oranlab::xapp
