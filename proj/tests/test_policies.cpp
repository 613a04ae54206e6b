#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "ehpush/policies.hpp"
#include "ehpush/transition.hpp"

using namespace ehpush;

namespace {

const Model& reference_model() {
    static const Model model = make_model(SystemParams{}, RadioParams{});
    return model;
}

const PolicyIterationResult& reference_optimal() {
    static const PolicyIterationResult r = solve_optimal(reference_model());
    return r;
}

}  // namespace

TEST_CASE("non-push optimum without requests is free") {
    SystemParams p;
    p.request_prob = 0.0;
    const auto r = non_push_optimal(make_model(p, RadioParams{}));
    CHECK(std::abs(r.values.gain) < 1e-12);
}

TEST_CASE("removing push cannot help") {
    for (double pu : {0.2, 0.7, 1.0}) {
        SystemParams p;
        p.battery_levels = 8;
        p.num_contents = 6;
        p.request_prob = pu;
        const Model model = make_model(p, RadioParams{});
        const double with_push = solve_optimal(model).values.gain;
        const double without = non_push_optimal(model).values.gain;
        CHECK(without >= with_push - 1e-12);
    }
}

TEST_CASE("non-push policy never grows the cache") {
    SystemParams p;
    p.battery_levels = 8;
    p.num_contents = 6;
    const Model model = make_model(p, RadioParams{});
    const auto r = non_push_optimal(model);
    for (Action u : r.policy) CHECK(u != Action::Push);
    const TransitionKernel kernel = build_kernel(model);
    const StateSpace space = model.space();
    for (std::size_t s = 0; s < space.size(); ++s)
        for (const Successor& e : kernel.row(s, r.policy[s])) CHECK(space.state(e.state).pushed <= space.state(s).pushed);
}

TEST_CASE("unicast priority") {
    const Model& model = reference_model();
    CHECK(unicast_priority({4, 4, 3}, model) == Action::Unicast);
    CHECK(unicast_priority({3, 4, 3}, model) == Action::Sleep);
    CHECK(unicast_priority({1, 1, 0}, model) == Action::Unicast);
    CHECK(unicast_priority({0, 1, 0}, model) == Action::Sleep);
    CHECK(unicast_priority({4, 0, 3}, model) == Action::Push);
    CHECK(unicast_priority({3, 0, 3}, model) == Action::Sleep);
    CHECK(unicast_priority({15, 0, 20}, model) == Action::Sleep);

    const PolicyTable policy = unicast_priority_policy(model);
    const StateSpace space = model.space();
    for (std::size_t s = 0; s < space.size(); ++s) CHECK(model.feasible(space.state(s)).contains(policy[s]));
}

TEST_CASE("always sleep") {
    const PolicyTable p = always_sleep_policy(reference_model());
    CHECK(p.size() == 1680);
    for (Action u : p) CHECK(u == Action::Sleep);
}

TEST_CASE("threshold profile of a hand-made policy") {
    const StateSpace space(3, 1, 1);
    PolicyTable policy(space.size());
    policy[space.index({2, 1, 0})] = Action::Unicast;
    policy[space.index({3, 1, 0})] = Action::Unicast;
    policy[space.index({1, 0, 1})] = Action::Push;
    policy[space.index({3, 0, 1})] = Action::Push;
    const ThresholdProfile profile = threshold_profile(policy, space);
    CHECK(profile.slices.size() == 4);

    const auto& a = profile.slice(1, 0);
    CHECK(a.threshold == 2);
    CHECK(a.clean);
    const auto& b = profile.slice(0, 1);
    CHECK(b.threshold == 1);
    CHECK_FALSE(b.clean);
    CHECK_FALSE(profile.slice(0, 0).threshold.has_value());
    CHECK(profile.slice(0, 0).clean);
    CHECK_FALSE(profile.all_clean());
    CHECK_THROWS_AS(profile.slice(2, 0), std::out_of_range);
    CHECK_THROWS_AS(threshold_profile(PolicyTable(3), space), std::invalid_argument);
}

TEST_CASE("optimal policy has sleep thresholds in the battery") {
    const Model& model = reference_model();
    const ThresholdProfile profile = threshold_profile(reference_optimal().policy, model.space());
    CHECK(profile.slices.size() == 21 * 5);
    CHECK(profile.all_clean());
    // Fully cached: only idle periods remain, and a cached request never
    // reaches the small cell.
    for (int e = 0; e <= 15; ++e) CHECK(profile.slice(0, 20).actions[std::size_t(e)] == Action::Sleep);
}

TEST_CASE("threshold grid files") {
    const Model& model = reference_model();
    const auto dir = std::filesystem::temp_directory_path() / "ehpush_policies_grids";
    std::filesystem::remove_all(dir);
    write_threshold_grids(reference_optimal().policy, model.space(), dir);
    int files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 21);

    std::ifstream in(dir / "threshold_C0.txt");
    std::string line;
    std::getline(in, line);
    CHECK(line.front() == '#');
    int rows = 0;
    int first_e = -1;
    while (std::getline(in, line)) {
        if (rows == 0) first_e = std::stoi(line);
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ' ') == 5);
    }
    CHECK(rows == 16);
    CHECK(first_e == 15);
    std::filesystem::remove_all(dir);
}
