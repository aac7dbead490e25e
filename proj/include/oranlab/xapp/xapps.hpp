#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "oranlab/data/dataset.hpp"
#include "oranlab/ric/service.hpp"
#include "oranlab/xapp/agent.hpp"
#include "oranlab/xapp/reward.hpp"

namespace oranlab::xapp {

/// One reporting window as seen by an xApp.
struct WindowLog {
  BsId bs_id = 0;
  WindowAggregate agg;
  double reward = 0.0;
  /// Catalogue index chosen after this window, -1 for none.
  int action = -1;
  /// Profile in force during the window as far as the xApp knows.
  std::optional<Action> applied;
};

/// Metrics CSV: timestamp_ms, bs_id, action, reward and per-slice rate,
/// buffer, TBs and PRB ratio.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::filesystem::path& path);
  bool is_open() const { return out_.is_open(); }
  void write(const WindowLog& w);
  static std::string header();

 private:
  std::ofstream out_;
};

/// Common xApp plumbing: subscriptions, indication intake, control tracking.
class XappBase {
 public:
  XappBase(ric::RicService& ric, std::string name);
  virtual ~XappBase();
  XappBase(const XappBase&) = delete;
  XappBase& operator=(const XappBase&) = delete;

  /// Subscribes to periodic KPM reports of every registered node, plus
  /// on-event reports when `on_event` is set.
  void start(std::int64_t now_ms, std::uint32_t period_ms = 250, bool on_event = false);
  /// Drains the xApp's queues; call once per simulated millisecond.
  void poll(std::int64_t now_ms);

  ric::XappId id() const { return id_; }
  const std::vector<WindowLog>& windows() const { return windows_; }
  std::uint64_t controls_sent() const { return controls_sent_; }
  std::uint64_t controls_failed() const { return controls_failed_; }
  std::uint64_t inference_failures() const { return inference_failures_; }
  /// xApp-level event lines ("t=<ms> ev=<name> ...").
  const std::vector<std::string>& events() const { return events_; }
  /// Last profile the node acknowledged.
  std::optional<Action> current(BsId bs) const;
  void set_metrics(const std::filesystem::path& path) { metrics_ = MetricsLog(path); }
  /// Hook for tests: called when an on-event indication arrives.
  std::function<void(BsId, const e2::Indication&, std::int64_t)> on_event_hook;

 protected:
  struct BsState {
    WindowHistory history;
    std::optional<Action> current;
    std::optional<Action> pending;
    std::uint64_t pending_ticket = 0;
  };

  /// Called once per periodic indication, after the history was updated.
  virtual void on_window(BsId bs, BsState& st, const e2::Indication& ind, WindowLog& log, std::int64_t now) = 0;
  virtual void on_control_failed(BsId, BsState&, const ric::ControlResult&) {}
  /// Sends `a` unless it is already in force or in flight.
  bool request(BsId bs, BsState& st, const Action& a, std::int64_t now);
  void note_inference_failure(BsId bs, const std::string& what, std::int64_t now);

  ric::RicService& ric_;
  std::string name_;
  ric::XappId id_;
  std::map<BsId, BsState> bs_;

 private:
  std::map<e2::SubId, std::pair<BsId, e2::Trigger>> subs_;
  std::vector<WindowLog> windows_;
  std::vector<std::string> events_;
  MetricsLog metrics_;
  std::uint64_t controls_sent_ = 0;
  std::uint64_t controls_failed_ = 0;
  std::uint64_t inference_failures_ = 0;
};

/// Applies one fixed profile at the first window, or only observes.
class StaticXapp : public XappBase {
 public:
  StaticXapp(ric::RicService& ric, std::optional<Action> profile, RewardSpec reward);

 protected:
  void on_window(BsId bs, BsState& st, const e2::Indication& ind, WindowLog& log, std::int64_t now) override;

 private:
  std::optional<Action> profile_;
  RewardSpec reward_;
};

/// Joint slicing and scheduling control with a greedy agent. A control is
/// sent only when the chosen profile differs from the one in force.
class SchedSlicingXapp : public XappBase {
 public:
  SchedSlicingXapp(ric::RicService& ric, const SlicingAgent& agent, RewardSpec reward, int cadence_windows = 1);
  const std::vector<std::uint64_t>& action_histogram() const { return hist_; }

 protected:
  void on_window(BsId bs, BsState& st, const e2::Indication& ind, WindowLog& log, std::int64_t now) override;

 private:
  const SlicingAgent& agent_;
  RewardSpec reward_;
  int cadence_;
  std::uint64_t seen_ = 0;
  std::vector<std::uint64_t> hist_;
};

/// Per-slice scheduler selection under a fixed slicing profile; agents are
/// evaluated in slice order eMBB, MTC, URLLC.
class SchedXapp : public XappBase {
 public:
  SchedXapp(ric::RicService& ric, const SchedAgents& agents, SlicingProfile slicing, SchedRewardSpec reward);

 protected:
  void on_window(BsId bs, BsState& st, const e2::Indication& ind, WindowLog& log, std::int64_t now) override;

 private:
  const SchedAgents& agents_;
  SlicingProfile slicing_;
  SchedRewardSpec reward_;
};

struct OnlineConfig {
  int rollout_len = 128;
  /// Write a checkpoint every this many updates (0: never).
  int checkpoint_every = 10;
  std::filesystem::path checkpoint_path;
  /// Stop exploring once the entropy loss plateaus.
  std::size_t plateau_window = 20;
  double plateau_threshold = 0.0;
  std::uint64_t max_steps = 0;  // 0: unbounded
};

struct UpdateLog {
  std::uint64_t step = 0;
  ml::PpoLosses losses;
  std::vector<std::uint64_t> histogram;  // actions over the rollout
};

/// Online exploration: samples actions from the policy, appends transitions
/// and runs a PPO update every rollout_len windows.
class OnlineTrainingXapp : public XappBase {
 public:
  OnlineTrainingXapp(ric::RicService& ric, SlicingAgent& agent, RewardSpec reward, OnlineConfig cfg);
  const std::vector<UpdateLog>& updates() const { return updates_; }
  bool stopped() const { return stopped_; }
  std::size_t buffer_size() const { return buf_.size(); }

 protected:
  void on_window(BsId bs, BsState& st, const e2::Indication& ind, WindowLog& log, std::int64_t now) override;
  void on_control_failed(BsId bs, BsState& st, const ric::ControlResult& r) override;

 private:
  struct Pending {
    ml::VectorXd state;
    int action = 0;
    double log_prob = 0.0;
    double value = 0.0;
  };
  SlicingAgent& agent_;
  RewardSpec reward_;
  OnlineConfig cfg_;
  ml::TrajectoryBuffer buf_;
  std::map<BsId, Pending> pending_;
  std::vector<UpdateLog> updates_;
  std::vector<std::uint64_t> hist_;
  ml::PlateauDetector plateau_;
  bool stopped_ = false;
};

/// Sweeps the action catalogue on every node, holding each profile for
/// `dwell_windows` windows and logging KPM records with their profile
/// context. The first `settle_windows` windows after a change are skipped.
class CollectorXapp : public XappBase {
 public:
  CollectorXapp(ric::RicService& ric, ActionCatalogue catalogue, data::DatasetWriter& out, int dwell_windows,
                int settle_windows = 1);
  std::size_t rows() const { return rows_; }
  /// Actions completed on every node.
  std::size_t completed_actions() const;

 protected:
  void on_window(BsId bs, BsState& st, const e2::Indication& ind, WindowLog& log, std::int64_t now) override;

 private:
  struct Sweep {
    std::size_t next = 0;
    int held = 0;
    std::size_t done = 0;
  };
  ActionCatalogue cat_;
  data::DatasetWriter& out_;
  int dwell_;
  int settle_;
  std::map<BsId, Sweep> sweep_;
  std::size_t rows_ = 0;
};

}  // namespace oranlab::xapp
