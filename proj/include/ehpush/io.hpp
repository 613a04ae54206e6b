#pragma once

// Plain-text artifact formats. Comment lines start with '#'.
//
// Solution file:
//   # lambda = <gain>
//   # ref_state = <index>
//   E,Q,C,action,h
//   <one row per state, action as its code 0/1/2>
//   # trace <j> <gain of policy j>
//
// Sweep table:
//   policy,p_u,p_c,a_bar,ratio,se,K,seed,lambda

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ehpush/model.hpp"
#include "ehpush/sim.hpp"
#include "ehpush/solver.hpp"

namespace ehpush {

struct SolutionFile {
    PolicyTable policy;
    ValueSolution values;
    std::vector<double> trace;
};

/// `header` lines are emitted verbatim after a "# " prefix.
void write_solution(std::ostream& os, const StateSpace& space, const PolicyTable& policy, const ValueSolution& values,
                    const std::vector<double>& trace, const std::vector<std::string>& header = {});

/// Throws std::runtime_error on malformed input or a state-count mismatch.
SolutionFile read_solution(std::istream& is, const StateSpace& space);

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows);

struct ReductionRow {
    double request_prob = 0.0;
    double ratio_push = 0.0;
    double ratio_nonpush = 0.0;
    double lambda_push = 0.0;
    double lambda_nonpush = 0.0;

    /// 1 - push / non-push, from simulated ratios and from solver gains.
    double simulated_reduction() const { return ratio_nonpush > 0 ? 1.0 - ratio_push / ratio_nonpush : 0.0; }
    double solver_reduction() const { return lambda_nonpush > 0 ? 1.0 - lambda_push / lambda_nonpush : 0.0; }
};

/// Pairs optimal-push with non-push-optimal rows at each p_u.
std::vector<ReductionRow> reduction_summary(const std::vector<SweepRow>& rows);

void write_reduction(std::ostream& os, const std::vector<ReductionRow>& rows);

}  // namespace ehpush
