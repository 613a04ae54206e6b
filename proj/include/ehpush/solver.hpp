#pragma once

// Average-cost solvers over a TransitionKernel/CostTable pair: policy
// iteration with exact linear-system evaluation, relative value iteration,
// and an exhaustive enumeration oracle for tiny instances.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ehpush/model.hpp"
#include "ehpush/transition.hpp"

namespace ehpush {

class PolicyTable {
public:
    PolicyTable() = default;
    explicit PolicyTable(std::size_t num_states, Action fill = Action::Sleep) : actions_(num_states, fill) {}
    explicit PolicyTable(std::vector<Action> actions) : actions_(std::move(actions)) {}

    std::size_t size() const { return actions_.size(); }
    Action operator[](std::size_t s) const { return actions_[s]; }
    Action& operator[](std::size_t s) { return actions_[s]; }
    auto begin() const { return actions_.begin(); }
    auto end() const { return actions_.end(); }

    bool operator==(const PolicyTable&) const = default;

private:
    std::vector<Action> actions_;
};

/// Gain (average cost per period) and differential values pinned at ref_state.
struct ValueSolution {
    double gain = 0.0;
    std::vector<double> bias;
    std::size_t ref_state = 0;
};

/// The evaluation system of a policy is singular, e.g. because the policy
/// induces more than one recurrent class.
class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument if some state maps to an action without a row.
void check_policy(const PolicyTable& policy, const TransitionKernel& kernel);

/// Solves lambda + h(x) = g(x, u(x)) + sum_y p(y|x,u(x)) h(y), h(ref) = 0, as a
/// dense (S+1) x (S+1) system with partial pivoting. Throws SingularSystemError
/// when the system is numerically singular.
ValueSolution policy_evaluation(const PolicyTable& policy, const TransitionKernel& kernel, const CostTable& costs,
                                std::size_t ref_state = 0);

/// Picks, per state, the action minimizing g + P h. Ties within
/// `tie_tol` go to the lowest action index.
PolicyTable policy_improvement(const ValueSolution& values, const TransitionKernel& kernel, const CostTable& costs,
                               double tie_tol = 1e-11);

struct RviOptions {
    double tol = 1e-10;
    std::size_t max_iter = 1'000'000;
    std::size_t ref_state = 0;
    /// Weight of the original kernel in the aperiodicity transform
    /// P' = tau P + (1 - tau) I. The solution h is unchanged by it.
    double tau = 0.5;
    /// Restrict the minimization to this policy's actions (policy evaluation).
    const PolicyTable* policy = nullptr;
    bool record_spans = false;
};

struct RviResult {
    ValueSolution values;
    std::size_t iterations = 0;
    std::vector<double> spans;   // span(T h - h) per iteration, when recorded
};

/// Throws ConvergenceError if the span criterion is not met in max_iter sweeps.
RviResult relative_value_iteration(const TransitionKernel& kernel, const CostTable& costs,
                                   const RviOptions& options = {});

/// max_x |lambda + h(x) - min_u [g(x,u) + sum_y p(y|x,u) h(y)]|.
double bellman_residual(const ValueSolution& values, const TransitionKernel& kernel, const CostTable& costs);

struct EvaluatedPolicy {
    ValueSolution values;
    bool used_fallback = false;   // linear system was singular, RVI was used
};

/// policy_evaluation, falling back to relative value iteration on a singular
/// system.
EvaluatedPolicy evaluate_policy(const PolicyTable& policy, const TransitionKernel& kernel, const CostTable& costs,
                                std::size_t ref_state = 0);

struct PolicyIterationOptions {
    std::size_t max_iter = 1000;
    std::size_t ref_state = 0;
    double tie_tol = 1e-11;
};

struct PolicyIterationResult {
    PolicyTable policy;
    ValueSolution values;
    std::vector<double> trace;   // gain of each evaluated policy
    std::size_t iterations = 0;
    std::size_t fallbacks = 0;   // evaluations that needed RVI
};

/// Starts from all-Sleep unless `init` is given. Stops when improvement
/// returns the current policy or a policy already visited. Throws
/// ConvergenceError past max_iter.
PolicyIterationResult policy_iteration(const TransitionKernel& kernel, const CostTable& costs,
                                       const PolicyIterationOptions& options = {},
                                       const PolicyTable* init = nullptr);

struct OracleResult {
    PolicyTable policy;
    double gain = 0.0;
    std::size_t policies_enumerated = 0;
};

inline constexpr std::size_t kOracleMaxStates = 64;
inline constexpr std::size_t kOracleMaxPolicies = 1'000'000;

/// Enumerates every deterministic stationary policy and scores it by the
/// stationary distribution of its chain. Throws std::length_error beyond
/// kOracleMaxStates states or kOracleMaxPolicies policies.
OracleResult brute_force_oracle(const TransitionKernel& kernel, const CostTable& costs);

/// Long-run average cost of a fixed policy from the uniform initial
/// distribution, via its stationary distribution.
double stationary_gain(const PolicyTable& policy, const TransitionKernel& kernel, const CostTable& costs);

}  // namespace ehpush
