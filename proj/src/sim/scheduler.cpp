#include "oranlab/sim/scheduler.hpp"

#include <algorithm>
#include <numeric>

#include "oranlab/sim/phy.hpp"

namespace oranlab::sim {

int Allocation::total() const { return std::accumulate(prbs.begin(), prbs.end(), 0); }

int prb_demand(const UeState& ue, int cap) { return prbs_for_bytes(ue.dl_buffer, ue.mcs, cap); }

namespace {

void round_robin(std::span<const UeState> ues, std::vector<int>& demand, int mask, SliceSchedulerState& st,
                 std::vector<int>& out) {
  const std::size_t n = ues.size();
  if (st.rr_next >= n) st.rr_next = 0;
  int left = mask;
  while (left > 0) {
    std::size_t pick = n;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t i = (st.rr_next + k) % n;
      if (demand[i] > 0) {
        pick = i;
        break;
      }
    }
    if (pick == n) break;
    ++out[pick];
    --demand[pick];
    --left;
    st.rr_next = (pick + 1) % n;
  }
}

void waterfill(std::span<const UeState> ues, std::vector<int>& demand, int mask, std::vector<int>& out) {
  std::vector<std::size_t> order(ues.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ues[a].cqi != ues[b].cqi) return ues[a].cqi > ues[b].cqi;
    return ues[a].ue_id < ues[b].ue_id;
  });
  int left = mask;
  for (std::size_t i : order) {
    if (left == 0) break;
    const int give = std::min(left, demand[i]);
    out[i] += give;
    demand[i] -= give;
    left -= give;
  }
}

void proportional_fair(std::span<const UeState> ues, std::vector<int>& demand, int mask, double alpha,
                       std::vector<int>& out) {
  constexpr double kFloor = 1.0;  // bits/s, avoids division by zero for fresh UEs
  int left = mask;
  while (left > 0) {
    std::size_t best = ues.size();
    double best_metric = -1.0;
    for (std::size_t i = 0; i < ues.size(); ++i) {
      if (demand[i] <= 0) continue;
      const double inst = 1000.0 * bits_per_prb(ues[i].mcs);
      const double granted_bps = 1000.0 * static_cast<double>(tb_size(ues[i].mcs, out[i]));
      const double avg = std::max((1.0 - alpha) * ues[i].ewma_rate + alpha * granted_bps, kFloor);
      const double metric = inst / avg;
      if (metric > best_metric ||
          (metric == best_metric && best < ues.size() && ues[i].ue_id < ues[best].ue_id)) {
        best = i;
        best_metric = metric;
      }
    }
    if (best == ues.size()) break;
    ++out[best];
    --demand[best];
    --left;
  }
}

}  // namespace

Allocation schedule_slice(Policy policy, std::span<const UeState> ues, int prb_mask, SliceSchedulerState& state,
                          double pf_ewma_alpha) {
  Allocation alloc;
  alloc.prbs.assign(ues.size(), 0);
  if (ues.empty() || prb_mask <= 0) return alloc;

  std::vector<int> demand(ues.size());
  for (std::size_t i = 0; i < ues.size(); ++i) demand[i] = prb_demand(ues[i], prb_mask);

  switch (policy) {
    case Policy::RR: round_robin(ues, demand, prb_mask, state, alloc.prbs); break;
    case Policy::WF: waterfill(ues, demand, prb_mask, alloc.prbs); break;
    case Policy::PF: proportional_fair(ues, demand, prb_mask, pf_ewma_alpha, alloc.prbs); break;
  }
  return alloc;
}

}  // namespace oranlab::sim
