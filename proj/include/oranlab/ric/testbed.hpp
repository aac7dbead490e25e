#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oranlab/e2/capture.hpp"
#include "oranlab/e2/node.hpp"
#include "oranlab/ric/service.hpp"
#include "oranlab/sim/cell.hpp"

namespace oranlab::ric {

struct TestbedConfig {
  sim::ScenarioConfig scenario;
  RicConfig ric;
  /// One-way latency of every node<->RIC link, ms.
  std::int64_t link_delay_ms = 1;
  /// When set, every frame in both directions is appended here.
  std::string capture_path;
};

/// Simulated-time closed loop: n_bs cells with their E2 agents, the RIC, and
/// in-process links with fixed delay. Each simulated millisecond runs, in
/// order: RIC-bound deliveries, agents, node-bound deliveries, one TTI per
/// responsive node, RIC timers.
class Testbed {
 public:
  using Agent = std::function<void(std::int64_t now_ms)>;

  explicit Testbed(TestbedConfig cfg);

  RicService& ric() { return ric_; }
  std::size_t n_nodes() const { return nodes_.size(); }
  e2::E2Node& node(std::size_t i) { return *nodes_.at(i)->node; }
  sim::Cell& cell(std::size_t i) { return *nodes_.at(i)->cell; }
  std::int64_t now_ms() const { return now_; }

  /// Registers a callback invoked once per simulated millisecond.
  void add_agent(Agent agent) { agents_.push_back(std::move(agent)); }
  /// Sends every node's SetupRequest and runs until all are established or
  /// `max_ms` elapses; returns true when all registered.
  bool start(std::int64_t max_ms = 100);
  void run_for(std::int64_t ms);
  void step_ms();

  /// An unresponsive node neither steps nor reads its link.
  void set_responsive(std::size_t i, bool responsive) { nodes_.at(i)->responsive = responsive; }

 private:
  struct Packet {
    std::int64_t due = 0;
    std::vector<std::uint8_t> bytes;
  };
  struct NodeSlot {
    std::unique_ptr<sim::Cell> cell;
    std::unique_ptr<e2::E2Node> node;
    ConnId conn = 0;
    bool responsive = true;
    bool connected = true;
    std::deque<Packet> to_ric;
    std::deque<Packet> to_node;
  };

  void capture(std::span<const std::uint8_t> bytes);

  TestbedConfig cfg_;
  RicService ric_;
  std::vector<std::unique_ptr<NodeSlot>> nodes_;
  std::vector<Agent> agents_;
  std::optional<e2::CaptureWriter> capture_;
  std::int64_t now_ = 0;
};

}  // namespace oranlab::ric
