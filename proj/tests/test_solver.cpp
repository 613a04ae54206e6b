#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ehpush/cli.hpp"
#include "ehpush/policies.hpp"
#include "ehpush/sim.hpp"
#include "ehpush/solver.hpp"
#include "oracles.hpp"

using namespace ehpush;

namespace {

// Two states, one action (Sleep): 0 -> 1 w.p. a, 1 -> 0 w.p. b.
struct TwoState {
    TransitionKernel kernel{2};
    CostTable costs{2};

    TwoState(double a, double b, double c0, double c1) {
        kernel.set_row(0, Action::Sleep, {{0, 1.0 - a}, {1, a}});
        kernel.set_row(1, Action::Sleep, {{0, b}, {1, 1.0 - b}});
        costs.set(0, Action::Sleep, c0);
        costs.set(1, Action::Sleep, c1);
    }
};

struct Solved {
    Model model;
    TransitionKernel kernel;
    CostTable costs;
    PolicyIterationResult result;
};

const Solved& reference_solution() {
    static const Solved solved = [] {
        Model model = make_model(SystemParams{}, RadioParams{});
        TransitionKernel kernel = build_kernel(model);
        CostTable costs = stage_costs(model);
        PolicyIterationResult result = policy_iteration(kernel, costs);
        return Solved{std::move(model), std::move(kernel), std::move(costs), std::move(result)};
    }();
    return solved;
}

}  // namespace

TEST_SUITE("policy evaluation") {
    TEST_CASE("two-state chain matches the closed form") {
        const TwoState m(0.3, 0.1, 1.0, 0.0);
        const ValueSolution v = policy_evaluation(PolicyTable(2), m.kernel, m.costs);
        CHECK(v.gain == doctest::Approx(oracle::two_state_gain(0.3, 0.1, 1.0, 0.0)).epsilon(1e-14));
        CHECK(v.gain == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(v.bias[0] == 0.0);
        // h(1) = (lambda - c0) / a
        CHECK(v.bias[1] == doctest::Approx(-2.5).epsilon(1e-13));
        CHECK(bellman_residual(v, m.kernel, m.costs) < 1e-14);
    }

    TEST_CASE("reference state can move") {
        const TwoState m(0.2, 0.7, 0.4, 1.3);
        const ValueSolution v0 = policy_evaluation(PolicyTable(2), m.kernel, m.costs, 0);
        const ValueSolution v1 = policy_evaluation(PolicyTable(2), m.kernel, m.costs, 1);
        CHECK(v0.gain == doctest::Approx(v1.gain).epsilon(1e-14));
        CHECK(v1.bias[1] == 0.0);
        CHECK(v1.bias[0] == doctest::Approx(v0.bias[0] - v0.bias[1]).epsilon(1e-13));
    }

    TEST_CASE("sleeping without requests costs nothing in the long run") {
        SystemParams p;
        p.request_prob = 0.0;
        const Model model = make_model(p, RadioParams{});
        const TransitionKernel kernel = build_kernel(model);
        const ValueSolution v = policy_evaluation(always_sleep_policy(model), kernel, stage_costs(model));
        CHECK(std::abs(v.gain) < 1e-12);
        const StateSpace space = model.space();
        for (std::size_t s = 0; s < space.size(); ++s) {
            // Only the initial pending request is ever paid for.
            const double expected = space.state(s).request > 0 ? 1.0 : 0.0;
            CHECK(v.bias[s] == doctest::Approx(expected).epsilon(1e-10));
        }
    }

    TEST_CASE("multichain policies are singular") {
        TransitionKernel kernel(2);
        kernel.set_row(0, Action::Sleep, {{0, 1.0}});
        kernel.set_row(1, Action::Sleep, {{1, 1.0}});
        CostTable costs(2);
        costs.set(1, Action::Sleep, 1.0);
        CHECK_THROWS_AS(policy_evaluation(PolicyTable(2), kernel, costs), SingularSystemError);
    }

    TEST_CASE("singular evaluation falls back to value iteration") {
        TransitionKernel kernel(2);
        kernel.set_row(0, Action::Sleep, {{0, 1.0}});
        kernel.set_row(1, Action::Sleep, {{1, 1.0}});
        CostTable costs(2);
        costs.set(0, Action::Sleep, 0.5);
        costs.set(1, Action::Sleep, 0.5);
        const EvaluatedPolicy e = evaluate_policy(PolicyTable(2), kernel, costs);
        CHECK(e.used_fallback);
        CHECK(e.values.gain == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(bellman_residual(e.values, kernel, costs) < 1e-9);
    }

    TEST_CASE("policies must use existing rows") {
        const TwoState m(0.3, 0.1, 1.0, 0.0);
        PolicyTable bad(2);
        bad[1] = Action::Push;
        CHECK_THROWS_AS(check_policy(bad, m.kernel), std::invalid_argument);
        CHECK_THROWS_AS(policy_evaluation(bad, m.kernel, m.costs), std::invalid_argument);
        CHECK_THROWS_AS(check_policy(PolicyTable(3), m.kernel), std::invalid_argument);
    }
}

TEST_SUITE("policy improvement") {
    TEST_CASE("ties go to the lowest action index") {
        TransitionKernel kernel(1);
        CostTable costs(1);
        for (Action u : kAllActions) kernel.set_row(0, u, {{0, 1.0}});
        costs.set(0, Action::Sleep, 1.0);
        costs.set(0, Action::Unicast, 0.25);
        costs.set(0, Action::Push, 0.25 + 1e-13);
        const ValueSolution v{0.25, {0.0}, 0};
        CHECK(policy_improvement(v, kernel, costs)[0] == Action::Unicast);
        costs.set(0, Action::Push, 0.25 - 1e-6);
        CHECK(policy_improvement(v, kernel, costs)[0] == Action::Push);
    }

    TEST_CASE("a singleton action set is always chosen") {
        const TwoState m(0.3, 0.1, 5.0, 0.0);
        const ValueSolution v{0.0, {100.0, -100.0}, 0};
        const PolicyTable u = policy_improvement(v, m.kernel, m.costs);
        CHECK(u[0] == Action::Sleep);
        CHECK(u[1] == Action::Sleep);
    }
}

TEST_SUITE("policy iteration") {
    TEST_CASE("reference instance") {
        const Solved& s = reference_solution();
        const auto& r = s.result;
        CHECK(r.iterations <= 50);
        CHECK(r.fallbacks == 0);
        REQUIRE_FALSE(r.trace.empty());
        for (std::size_t j = 1; j < r.trace.size(); ++j) CHECK(r.trace[j] <= r.trace[j - 1] + 1e-12);
        CHECK(r.values.gain == r.trace.back());
        CHECK(r.values.bias[r.values.ref_state] == 0.0);
        CHECK(bellman_residual(r.values, s.kernel, s.costs) <= 1e-9);
        // Improvement reproduces the returned policy.
        CHECK(policy_improvement(r.values, s.kernel, s.costs) == r.policy);
        CHECK(r.values.gain >= 0.0);
        CHECK(r.values.gain <= s.model.params.request_prob);
    }

    TEST_CASE("value iteration agrees with exact evaluation") {
        const Solved& s = reference_solution();
        RviOptions opts;
        opts.tol = 1e-12;
        opts.record_spans = true;
        const RviResult rvi = relative_value_iteration(s.kernel, s.costs, opts);
        CHECK(std::abs(rvi.values.gain - s.result.values.gain) <= 1e-8);
        double worst = 0.0;
        for (std::size_t x = 0; x < s.kernel.num_states(); ++x)
            worst = std::max(worst, std::abs(rvi.values.bias[x] - s.result.values.bias[x]));
        CHECK(worst <= 1e-6);
        REQUIRE(rvi.spans.size() == rvi.iterations);
        for (std::size_t j = 1; j < rvi.spans.size(); ++j) CHECK(rvi.spans[j] <= rvi.spans[j - 1] + 1e-12);
        CHECK(rvi.spans.back() < 1e-12);
    }

    TEST_CASE("value iteration gives up when told to") {
        const Solved& s = reference_solution();
        RviOptions opts;
        opts.max_iter = 3;
        CHECK_THROWS_AS(relative_value_iteration(s.kernel, s.costs, opts), ConvergenceError);
    }

    TEST_CASE("residual detects a perturbed gain") {
        const Solved& s = reference_solution();
        ValueSolution v = s.result.values;
        v.gain += 0.1;
        CHECK(bellman_residual(v, s.kernel, s.costs) == doctest::Approx(0.1).epsilon(1e-6));
        v = s.result.values;
        v.bias[123] += 0.5;
        CHECK(bellman_residual(v, s.kernel, s.costs) >= 0.09);
    }

    TEST_CASE("zero-cost problem") {
        SystemParams p;
        p.battery_levels = 3;
        p.num_rings = 2;
        p.num_contents = 2;
        const Model model = make_model(p, RadioParams{});
        const TransitionKernel kernel = build_kernel(model);
        const CostTable zero(kernel.num_states());
        const auto r = policy_iteration(kernel, zero);
        CHECK(r.values.gain == 0.0);
        CHECK(bellman_residual(r.values, kernel, zero) == 0.0);
        for (Action u : r.policy) CHECK(u == Action::Sleep);
    }

    TEST_CASE("gain lies in [0, p_u]") {
        for (double pu : {0.0, 0.15, 0.5, 0.95}) {
            SystemParams p;
            p.battery_levels = 6;
            p.num_rings = 3;
            p.num_contents = 5;
            p.request_prob = pu;
            const Model model = make_model(p, RadioParams{});
            const auto r = solve_optimal(model);
            CHECK(r.values.gain >= -1e-12);
            CHECK(r.values.gain <= pu + 1e-12);
        }
    }
}

TEST_SUITE("exhaustive oracle") {
    TEST_CASE("two-state chain") {
        const TwoState m(0.3, 0.1, 1.0, 0.0);
        const OracleResult o = brute_force_oracle(m.kernel, m.costs);
        CHECK(o.policies_enumerated == 1);
        CHECK(o.gain == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(stationary_gain(PolicyTable(2), m.kernel, m.costs) == doctest::Approx(0.25).epsilon(1e-12));
    }

    TEST_CASE("small model agrees with policy iteration") {
        SystemParams p;
        p.battery_levels = 2;
        p.num_rings = 1;
        p.num_contents = 2;
        const Model model = make_model(p, RadioParams{});
        const TransitionKernel kernel = build_kernel(model);
        const CostTable costs = stage_costs(model);
        const auto pi = policy_iteration(kernel, costs);
        const OracleResult o = brute_force_oracle(kernel, costs);
        CHECK(o.policies_enumerated > 1);
        CHECK(std::abs(pi.values.gain - o.gain) <= 1e-9);
        CHECK(std::abs(stationary_gain(pi.policy, kernel, costs) - o.gain) <= 1e-9);
    }

    TEST_CASE("random tiny instances") {
        for (std::uint64_t i = 0; i < 20; ++i) {
            const SystemParams p = random_tiny_params(derive_seed(77, i));
            const Model model = make_model(p, RadioParams{});
            const TransitionKernel kernel = build_kernel(model);
            const CostTable costs = stage_costs(model);
            const double pi = policy_iteration(kernel, costs).values.gain;
            const double brute = brute_force_oracle(kernel, costs).gain;
            CAPTURE(i);
            CHECK(std::abs(pi - brute) <= 1e-9);
        }
    }

    TEST_CASE("size guards") {
        TransitionKernel big(kOracleMaxStates + 1);
        for (std::size_t s = 0; s < big.num_states(); ++s)
            big.set_row(s, Action::Sleep, {{static_cast<std::uint32_t>(s), 1.0}});
        CHECK_THROWS_AS(brute_force_oracle(big, CostTable(big.num_states())), std::length_error);

        // 3^13 > 10^6 policies
        TransitionKernel wide(13);
        for (std::size_t s = 0; s < 13; ++s)
            for (Action u : kAllActions) wide.set_row(s, u, {{static_cast<std::uint32_t>(s), 1.0}});
        CHECK_THROWS_AS(brute_force_oracle(wide, CostTable(13)), std::length_error);
    }
}
