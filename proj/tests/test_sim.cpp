#include "doctest.h"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "ehpush/policies.hpp"
#include "ehpush/sim.hpp"
#include "ehpush/transition.hpp"

using namespace ehpush;

namespace {

const Model& reference_model() {
    static const Model model = make_model(SystemParams{}, RadioParams{});
    return model;
}

SimConfig short_run(std::uint64_t seed) {
    SimConfig cfg;
    cfg.horizon = 200'000;
    cfg.warmup = 2'000;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_SUITE("rng") {
    TEST_CASE("seed derivation") {
        CHECK(derive_seed(1, 0) == derive_seed(1, 0));
        std::set<std::uint64_t> seen;
        for (std::uint64_t m = 0; m < 20; ++m)
            for (std::uint64_t s = 0; s < 50; ++s) seen.insert(derive_seed(m, s));
        CHECK(seen.size() == 1000);
        CHECK(mix_seed(0) != 0);
    }

    TEST_CASE("uniform and poisson moments") {
        SimRng rng(5);
        constexpr int n = 400'000;
        double su = 0.0, sp = 0.0, sp2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            su += u;
            const double k = rng.poisson(0.8);
            sp += k;
            sp2 += k * k;
        }
        CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
        const double mean = sp / n;
        CHECK(std::abs(mean - 0.8) < 4.0 * std::sqrt(0.8 / n));
        CHECK(sp2 / n - mean * mean == doctest::Approx(0.8).epsilon(0.02));
    }
}

TEST_SUITE("simulator") {
    TEST_CASE("runs are reproducible") {
        const Model& model = reference_model();
        const PolicyTable policy = unicast_priority_policy(model);
        const SimMetrics a = simulate(short_run(11), policy, model);
        const SimMetrics b = simulate(short_run(11), policy, model);
        const SimMetrics c = simulate(short_run(12), policy, model);
        CHECK(a.macro_handled == b.macro_handled);
        CHECK(a.requests_generated == b.requests_generated);
        CHECK(a.macro_ratio_se == b.macro_ratio_se);
        CHECK(a.macro_handled != c.macro_handled);
    }

    TEST_CASE("no requests, no macro traffic") {
        SystemParams p;
        p.request_prob = 0.0;
        const Model model = make_model(p, RadioParams{});
        const SimMetrics m = simulate(short_run(3), always_sleep_policy(model), model);
        CHECK(m.macro_handled == 0);
        CHECK(m.requests_generated == 0);
        CHECK(m.periods == 198'000);
    }

    TEST_CASE("sleeping with an empty cache sends every request to the macro cell") {
        const Model& model = reference_model();
        const SimMetrics m = simulate(short_run(4), always_sleep_policy(model), model);
        CHECK(std::abs(m.macro_ratio() - 0.7) <= 3.0 * m.macro_ratio_se);
        CHECK(m.macro_ratio_se > 0.0);
        CHECK(m.cache_hits == 0);
        CHECK(m.macro_handled == m.requests_generated);
    }

    TEST_CASE("counter invariants") {
        const Model& model = reference_model();
        const auto opt = solve_optimal(model);
        for (const PolicyTable& policy : {opt.policy, unicast_priority_policy(model)}) {
            SimConfig cfg = short_run(8);
            cfg.debug_checks = true;
            const SimMetrics m = simulate(cfg, policy, model);
            CHECK(m.periods == cfg.horizon - cfg.warmup);
            CHECK(m.macro_handled <= m.requests_generated);
            CHECK(m.requests_generated <= m.periods);
            CHECK(m.cache_hits <= m.requests_generated);
            CHECK(m.macro_per_request() <= 1.0);
        }
    }

    TEST_CASE("simulated ratio tracks the solver gain") {
        const Model& model = reference_model();
        const auto opt = solve_optimal(model);
        SimConfig cfg = short_run(21);
        cfg.horizon = 1'000'000;
        const SimMetrics m = simulate(cfg, opt.policy, model);
        CHECK(std::abs(m.macro_ratio() - opt.values.gain) <= 4.0 * m.macro_ratio_se);
    }

    TEST_CASE("infeasible actions are reported with the period") {
        const Model& model = reference_model();
        PolicyTable policy = always_sleep_policy(model);
        policy[0] = Action::Unicast;   // (0, 0, 0): nothing to serve
        try {
            simulate(short_run(1), policy, model);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("period 0") != std::string::npos);
        }
    }

    TEST_CASE("configuration checks") {
        SimConfig cfg;
        cfg.horizon = 10;
        cfg.warmup = 10;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg.horizon = 100;
        cfg.batches = 0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        const Model& model = reference_model();
        CHECK_THROWS_AS(simulate(short_run(1), PolicyTable(4), model), std::invalid_argument);
        SimConfig off = short_run(1);
        off.initial = {16, 0, 0};
        CHECK_THROWS_AS(simulate(off, always_sleep_policy(model), model), std::invalid_argument);
    }

    TEST_CASE("sampled transitions pass a chi-square test against the kernel") {
        const Model& model = reference_model();
        const StateSpace space = model.space();
        const TransitionKernel kernel = build_kernel(model);
        SimRng rng(99);
        constexpr int n = 200'000;
        const std::vector<std::pair<SystemState, Action>> cases{
            {{10, 2, 7}, Action::Unicast}, {{4, 0, 0}, Action::Push}, {{0, 3, 19}, Action::Sleep}};
        for (const auto& [x, u] : cases) {
            const auto row = kernel.row(space.index(x), u);
            std::map<std::uint32_t, double> observed;
            for (int i = 0; i < n; ++i) observed[static_cast<std::uint32_t>(space.index(sample_step(x, u, model, rng).next))] += 1.0;
            // Pool successors with expected count below 5 into one cell.
            double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
            int cells = 0;
            for (const Successor& e : row) {
                const double expected = e.prob * n;
                const double obs = observed[e.state];
                if (expected < 5.0) {
                    pooled_obs += obs;
                    pooled_exp += expected;
                } else {
                    stat += (obs - expected) * (obs - expected) / expected;
                    ++cells;
                }
            }
            if (pooled_exp > 0.0) {
                stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
                ++cells;
            }
            REQUIRE(cells >= 2);
            const boost::math::chi_squared dist(cells - 1);
            const double pvalue = boost::math::cdf(boost::math::complement(dist, stat));
            CAPTURE(stat);
            CHECK(pvalue > 1e-4);
        }
    }
}

TEST_SUITE("sweep") {
    TEST_CASE("rows per grid point and policy") {
        SystemParams p;
        p.battery_levels = 6;
        p.num_contents = 4;
        p.num_rings = 2;
        SweepOptions opts;
        opts.request_probs = {0.3, 0.9};
        opts.horizon = 30'000;
        opts.warmup = 1'000;
        opts.master_seed = 5;
        opts.threads = 2;
        const auto rows = sweep(p, RadioParams{}, opts);
        REQUIRE(rows.size() == 6);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i].request_prob == (i < 3 ? 0.3 : 0.9));
            CHECK(rows[i].policy == opts.policies[i % 3]);
            CHECK(rows[i].periods == 29'000);
            CHECK(rows[i].ratio >= 0.0);
            CHECK(rows[i].ratio <= 1.0);
        }
        // Optimal gain never exceeds the non-push optimum.
        CHECK(rows[0].gain <= rows[1].gain + 1e-12);
        CHECK(rows[3].gain <= rows[4].gain + 1e-12);

        const auto again = sweep(p, RadioParams{}, opts);
        for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].ratio == again[i].ratio);

        opts.request_probs = {0.0};
        CHECK_THROWS_AS(sweep(p, RadioParams{}, opts), std::invalid_argument);
    }

    TEST_CASE("policy names") {
        for (PolicyKind k : {PolicyKind::OptimalPush, PolicyKind::NonPushOptimal, PolicyKind::UnicastPriority})
            CHECK(parse_policy_kind(to_string(k)) == k);
        CHECK_THROWS_AS(parse_policy_kind("greedy"), std::invalid_argument);
    }
}
