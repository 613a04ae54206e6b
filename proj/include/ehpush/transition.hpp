#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ehpush/model.hpp"

namespace ehpush {

/// e^{-a} a^i / i!, evaluated in the log domain.
double poisson_pmf(double mean, int i);

/// Poisson arrival probabilities for 0..E_max units with prefix sums. Arrivals
/// beyond the battery gap are absorbed by overflow_prob().
class ArrivalPmf {
public:
    ArrivalPmf(double mean, int battery_levels);

    double mean() const { return mean_; }
    /// p_a(i); zero for negative i.
    double operator()(int i) const;
    /// 1 - sum_{i < gap} p_a(i): probability that at least `gap` units arrive.
    double overflow_prob(int gap) const;
    std::span<const double> pmf() const { return pmf_; }

private:
    double mean_;
    std::vector<double> pmf_;
    std::vector<double> prefix_;   // prefix_[k] = sum_{i<k} p_a(i)
};

/// Distribution of E' over [0, E_max] after spending `spent` units in a
/// period. Throws std::invalid_argument if spent > battery.
std::vector<double> energy_row(int battery, int spent, const ArrivalPmf& arrival, int battery_levels);

/// Same, with the spend derived from (E, Q, u). Throws if u is infeasible.
std::vector<double> energy_row(const SystemState& x, Action u, const Model& model, const ArrivalPmf& arrival);

/// Distribution of C' as {C-1, C, C+1}. Throws std::invalid_argument for a
/// push with C = N.
std::array<double, 3> content_row(int pushed, Action u, const SystemParams& params);

/// Distribution of Q' over [0, M] given the next pushed count.
std::vector<double> request_row(int next_pushed, std::span<const double> cumulative, const DistanceGrid& grid,
                                double request_prob);

struct Successor {
    std::uint32_t state;
    double prob;
};

/// Sparse rows p(. | x, u), present only for the (state, action) pairs that
/// were added. Rows are kept sorted by successor index.
class TransitionKernel {
public:
    TransitionKernel() = default;
    explicit TransitionKernel(std::size_t num_states);

    std::size_t num_states() const { return actions_.size(); }
    std::size_t num_rows() const;
    std::size_t num_entries() const;

    bool has_row(std::size_t state, Action u) const { return actions_.at(state).contains(u); }
    ActionSet actions(std::size_t state) const { return actions_.at(state); }
    /// Throws std::out_of_range if the row is absent.
    std::span<const Successor> row(std::size_t state, Action u) const;

    void set_row(std::size_t state, Action u, std::vector<Successor> entries);

private:
    std::vector<ActionSet> actions_;
    std::vector<std::vector<Successor>> rows_;   // state * kNumActions + action
};

/// Builds p(x'|x,u) = P(E'|E,Q,u) P(C'|C,u) P(Q'|C') for every state and
/// every feasible action in `allowed`.
TransitionKernel build_kernel(const Model& model, ActionSet allowed = ActionSet::all());

/// g(x, u) for every row in the kernel.
class CostTable {
public:
    CostTable() = default;
    explicit CostTable(std::size_t num_states) : costs_(num_states, {0.0, 0.0, 0.0}) {}

    std::size_t num_states() const { return costs_.size(); }
    double operator()(std::size_t state, Action u) const { return costs_[state][action_index(u)]; }
    void set(std::size_t state, Action u, double cost) { costs_.at(state)[action_index(u)] = cost; }

private:
    std::vector<std::array<double, 3>> costs_;
};

CostTable stage_costs(const Model& model);

struct KernelReport {
    double max_row_deviation = 0.0;       // max |sum_y p(y|x,u) - 1|
    std::size_t negative_entries = 0;
    std::size_t out_of_range_entries = 0;  // probability > 1 or successor index invalid
    std::size_t states_without_rows = 0;
    std::vector<std::size_t> unreachable;  // not reachable from state 0 under any actions
    bool communicating = false;            // every state reaches every other

    bool ok(double tol = 1e-12) const {
        return max_row_deviation <= tol && negative_entries == 0 && out_of_range_entries == 0 &&
               states_without_rows == 0;
    }
};

KernelReport validate_kernel(const TransitionKernel& kernel);

/// One line per nonzero entry: "state action successor probability".
void write_kernel(std::ostream& os, const TransitionKernel& kernel);

}  // namespace ehpush
