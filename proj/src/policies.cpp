#include "ehpush/policies.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "ehpush/transition.hpp"

namespace ehpush {

PolicyIterationResult solve_optimal(const Model& model, const PolicyIterationOptions& options) {
    return policy_iteration(build_kernel(model), stage_costs(model), options);
}

PolicyIterationResult non_push_optimal(const Model& model, const PolicyIterationOptions& options) {
    ActionSet allowed = ActionSet::all();
    allowed.erase(Action::Push);
    return policy_iteration(build_kernel(model, allowed), stage_costs(model), options);
}

Action unicast_priority(const SystemState& x, const Model& model) {
    const ActionSet feasible = model.feasible(x);
    if (x.request >= 1) return feasible.contains(Action::Unicast) ? Action::Unicast : Action::Sleep;
    return feasible.contains(Action::Push) ? Action::Push : Action::Sleep;
}

PolicyTable unicast_priority_policy(const Model& model) {
    const StateSpace space = model.space();
    PolicyTable policy(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) policy[s] = unicast_priority(space.state(s), model);
    return policy;
}

PolicyTable always_sleep_policy(const Model& model) { return PolicyTable(model.space().size(), Action::Sleep); }

const SliceThreshold& ThresholdProfile::slice(int request, int pushed) const {
    if (request < 0 || request > num_rings || pushed < 0 || pushed > num_contents)
        throw std::out_of_range("threshold slice out of range");
    return slices[std::size_t(pushed) * std::size_t(num_rings + 1) + std::size_t(request)];
}

bool ThresholdProfile::all_clean() const {
    for (const auto& s : slices)
        if (!s.clean) return false;
    return true;
}

ThresholdProfile threshold_profile(const PolicyTable& policy, const StateSpace& space) {
    if (policy.size() != space.size()) throw std::invalid_argument("policy does not match state space");
    ThresholdProfile profile;
    profile.num_rings = space.num_rings();
    profile.num_contents = space.num_contents();
    for (int c = 0; c <= space.num_contents(); ++c) {
        for (int q = 0; q <= space.num_rings(); ++q) {
            SliceThreshold slice;
            slice.request = q;
            slice.pushed = c;
            for (int e = 0; e <= space.battery_levels(); ++e) {
                const Action u = policy[space.index({e, q, c})];
                slice.actions.push_back(u);
                if (u != Action::Sleep && !slice.threshold) slice.threshold = e;
                if (u == Action::Sleep && slice.threshold) slice.clean = false;
            }
            profile.slices.push_back(std::move(slice));
        }
    }
    return profile;
}

void write_threshold_grids(const PolicyTable& policy, const StateSpace& space, const std::filesystem::path& dir) {
    if (policy.size() != space.size()) throw std::invalid_argument("policy does not match state space");
    std::filesystem::create_directories(dir);
    for (int c = 0; c <= space.num_contents(); ++c) {
        const auto path = dir / ("threshold_C" + std::to_string(c) + ".txt");
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << "# C=" << c << " rows: E=" << space.battery_levels() << "..0, columns: Q=0.." << space.num_rings()
            << ", cells: 0 sleep 1 unicast 2 push\n";
        for (int e = space.battery_levels(); e >= 0; --e) {
            out << e << ':';
            for (int q = 0; q <= space.num_rings(); ++q) out << ' ' << action_index(policy[space.index({e, q, c})]);
            out << '\n';
        }
    }
}

}  // namespace ehpush
