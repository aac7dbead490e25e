#include "oranlab/ric/testbed.hpp"

namespace oranlab::ric {

Testbed::Testbed(TestbedConfig cfg) : cfg_(std::move(cfg)), ric_(cfg_.ric) {
  cfg_.scenario.validate();
  if (!cfg_.capture_path.empty()) capture_.emplace(cfg_.capture_path);
  for (int bs = 0; bs < cfg_.scenario.n_bs; ++bs) {
    auto slot = std::make_unique<NodeSlot>();
    NodeSlot* raw = slot.get();
    slot->cell = std::make_unique<sim::Cell>(cfg_.scenario, static_cast<BsId>(bs));
    slot->node = std::make_unique<e2::E2Node>(*slot->cell, [this, raw](std::span<const std::uint8_t> b) {
      capture(b);
      if (raw->connected) raw->to_ric.push_back(Packet{now_ + 1 + cfg_.link_delay_ms, {b.begin(), b.end()}});
    });
    slot->conn = ric_.open_connection(
        [this, raw](std::span<const std::uint8_t> b) {
          capture(b);
          raw->to_node.push_back(Packet{now_ + cfg_.link_delay_ms, {b.begin(), b.end()}});
        },
        // Runs under the RIC lock; must not call back into the service.
        [raw]() {
          raw->connected = false;
          raw->to_node.clear();
          raw->node->disconnect();
        });
    nodes_.push_back(std::move(slot));
  }
}

void Testbed::capture(std::span<const std::uint8_t> bytes) {
  if (capture_) capture_->write(bytes);
}

bool Testbed::start(std::int64_t max_ms) {
  for (auto& n : nodes_) n->node->start(now_);
  auto ready = [&] {
    if (ric_.registry_size() != nodes_.size()) return false;
    for (auto& n : nodes_) {
      if (!n->node->established()) return false;
    }
    return true;
  };
  for (std::int64_t i = 0; i < max_ms && !ready(); ++i) step_ms();
  return ready();
}

void Testbed::step_ms() {
  for (auto& n : nodes_) {
    while (!n->to_ric.empty() && n->to_ric.front().due <= now_) {
      auto p = std::move(n->to_ric.front());
      n->to_ric.pop_front();
      if (n->connected) ric_.on_bytes(n->conn, p.bytes, now_);
    }
  }
  for (auto& a : agents_) a(now_);
  for (auto& n : nodes_) {
    if (!n->responsive) continue;
    while (!n->to_node.empty() && n->to_node.front().due <= now_) {
      auto p = std::move(n->to_node.front());
      n->to_node.pop_front();
      n->node->on_bytes(p.bytes, now_);
    }
  }
  for (auto& n : nodes_) {
    if (n->responsive) n->node->step_tti();
  }
  ric_.tick(now_);
  ++now_;
}

void Testbed::run_for(std::int64_t ms) {
  for (std::int64_t i = 0; i < ms; ++i) step_ms();
}

}  // namespace oranlab::ric
