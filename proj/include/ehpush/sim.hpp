#pragma once

// Seeded Monte Carlo simulation of the slotted small-cell system. Within a
// period: observe (E, Q, C), act and spend, then harvest, replace content and
// draw the next request.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "ehpush/model.hpp"
#include "ehpush/solver.hpp"

namespace ehpush {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed of stream `stream` under `master`. Distinct streams get unrelated seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

class SimRng {
public:
    explicit SimRng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer in [0, n).
    int below(int n) { return static_cast<int>(uniform() * n); }
    /// Poisson variate by sequential inversion.
    int poisson(double mean);

private:
    std::mt19937_64 engine_;
};

struct StepOutcome {
    SystemState next;
    bool request_generated = false;   // a request was drawn for the next period
    bool cache_hit = false;           // ... and the users already hold the content
    int overflow_units = 0;           // harvested energy lost to the capacity clamp
};

/// Samples the next state by simulating the physical events: Poisson harvest,
/// uniform content replacement, Zipf request rank and a uniform user position.
/// Throws std::invalid_argument if u is infeasible in x.
StepOutcome sample_step(const SystemState& x, Action u, const Model& model, SimRng& rng);

struct SimConfig {
    std::uint64_t horizon = 1'000'000;   // total periods, warmup included
    std::uint64_t warmup = 10'000;
    std::uint64_t seed = 1;
    int batches = 100;                   // batch means for standard errors
    SystemState initial{};
    bool debug_checks = false;           // bounds-check the state every period

    void validate() const;
};

struct SimMetrics {
    std::uint64_t periods = 0;             // K
    std::uint64_t requests_generated = 0;  // K~
    std::uint64_t macro_handled = 0;       // K-bar
    std::uint64_t cache_hits = 0;
    std::uint64_t energy_overflow_units = 0;
    double macro_ratio_se = 0.0;
    double request_ratio_se = 0.0;

    double macro_ratio() const { return periods ? double(macro_handled) / double(periods) : 0.0; }
    double request_ratio() const { return periods ? double(requests_generated) / double(periods) : 0.0; }
    double macro_per_request() const {
        return requests_generated ? double(macro_handled) / double(requests_generated) : 0.0;
    }
};

/// Runs one trajectory under a state-indexed policy. Deterministic in
/// (config, model, policy). Throws std::runtime_error naming the period if
/// the policy picks an infeasible action.
SimMetrics simulate(const SimConfig& config, const PolicyTable& policy, const Model& model);

enum class PolicyKind { OptimalPush, NonPushOptimal, UnicastPriority };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

struct SweepOptions {
    std::vector<double> request_probs;
    std::vector<PolicyKind> policies{PolicyKind::OptimalPush, PolicyKind::NonPushOptimal,
                                     PolicyKind::UnicastPriority};
    int replications = 1;
    std::uint64_t horizon = 1'000'000;
    std::uint64_t warmup = 10'000;
    std::uint64_t master_seed = 1;
    unsigned threads = 0;   // 0 = hardware concurrency
};

struct SweepRow {
    PolicyKind policy;
    double request_prob = 0.0;
    double replace_prob = 0.0;
    double mean_arrival = 0.0;
    double gain = 0.0;     // solver lambda of the policy
    double ratio = 0.0;    // simulated K-bar / K, averaged over replications
    double se = 0.0;
    std::uint64_t periods = 0;
    std::uint64_t seed = 0;
};

/// Re-solves and re-simulates every policy at every p_u. Rows are ordered by
/// grid point, then by policy in the order given.
std::vector<SweepRow> sweep(const SystemParams& params, const RadioParams& radio, const SweepOptions& options);

}  // namespace ehpush
