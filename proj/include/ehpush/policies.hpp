#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ehpush/model.hpp"
#include "ehpush/solver.hpp"

namespace ehpush {

/// Optimal policy over the full action set.
PolicyIterationResult solve_optimal(const Model& model, const PolicyIterationOptions& options = {});

/// Optimal policy when the push action is removed.
PolicyIterationResult non_push_optimal(const Model& model, const PolicyIterationOptions& options = {});

/// Greedy baseline: serve any affordable request, push only when idle.
Action unicast_priority(const SystemState& x, const Model& model);
PolicyTable unicast_priority_policy(const Model& model);

PolicyTable always_sleep_policy(const Model& model);

/// Sleep/non-Sleep pattern of one (Q, C) slice as a function of E.
struct SliceThreshold {
    int request = 0;
    int pushed = 0;
    std::vector<Action> actions;   // indexed by E
    std::optional<int> threshold;  // smallest E with a non-Sleep action
    bool clean = true;             // Sleep below the threshold, non-Sleep from it on
};

struct ThresholdProfile {
    int num_rings = 0;
    int num_contents = 0;
    std::vector<SliceThreshold> slices;   // ordered by (C, Q)

    const SliceThreshold& slice(int request, int pushed) const;
    bool all_clean() const;
};

ThresholdProfile threshold_profile(const PolicyTable& policy, const StateSpace& space);

/// One file per C: rows are E from E_max down to 0, columns are Q, cells are
/// action codes (0 sleep, 1 unicast, 2 push).
void write_threshold_grids(const PolicyTable& policy, const StateSpace& space, const std::filesystem::path& dir);

}  // namespace ehpush
