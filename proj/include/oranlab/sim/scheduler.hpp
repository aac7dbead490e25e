#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oranlab/sim/ue.hpp"

namespace oranlab::sim {

/// Scheduler memory carried across TTIs for one slice.
struct SliceSchedulerState {
  std::size_t rr_next = 0;  // index into the slice's UE list
};

/// PRBs granted to each UE, aligned with the UE span passed to schedule_slice.
struct Allocation {
  std::vector<int> prbs;

  int total() const;
};

/// Allocates up to `prb_mask` PRBs among the UEs of one slice for one TTI.
///
/// Every policy is demand-aware: a UE never receives more PRBs than it needs
/// to drain its buffer at its current MCS, and UEs with an empty buffer get
/// nothing. Within that bound:
///   - RR hands out one PRB at a time from a rotating pointer that persists
///     across TTIs in `state`;
///   - WF visits UEs by CQI (descending) and fills each to its demand;
///   - PF grants PRB by PRB to the UE maximizing instantaneous rate over its
///     EWMA rate, with the EWMA tentatively updated by grants already made in
///     this TTI so that the carrier is shared within the TTI.
/// Ties always go to the lowest ue_id.
Allocation schedule_slice(Policy policy, std::span<const UeState> ues, int prb_mask,
                          SliceSchedulerState& state, double pf_ewma_alpha);

/// PRBs each UE would need this TTI to empty its buffer, capped at `cap`.
int prb_demand(const UeState& ue, int cap);

}  // namespace oranlab::sim
