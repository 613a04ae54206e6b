#include "ehpush/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ehpush {

namespace {

double expected_next(std::span<const Successor> row, const std::vector<double>& h) {
    double acc = 0.0;
    for (const Successor& e : row) acc += e.prob * h[e.state];
    return acc;
}

Action first_available(ActionSet actions) {
    for (Action u : kAllActions)
        if (actions.contains(u)) return u;
    throw std::invalid_argument("state has no transition rows");
}

// Gaussian elimination with partial pivoting, in place. Returns false when a
// pivot falls below `pivot_tol` times the largest entry seen.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n, double pivot_tol) {
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return false;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
        if (std::abs(a[piv * n + k]) < pivot_tol * scale) return false;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
            std::swap(b[k], b[piv]);
        }
        const double inv = 1.0 / a[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i * n + k] * inv;
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            b[i] -= f * b[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double acc = b[k];
        for (std::size_t j = k + 1; j < n; ++j) acc -= a[k * n + j] * b[j];
        b[k] = acc / a[k * n + k];
    }
    return true;
}

}  // namespace

void check_policy(const PolicyTable& policy, const TransitionKernel& kernel) {
    if (policy.size() != kernel.num_states())
        throw std::invalid_argument("policy size " + std::to_string(policy.size()) + " != state count " +
                                    std::to_string(kernel.num_states()));
    for (std::size_t s = 0; s < policy.size(); ++s)
        if (!kernel.has_row(s, policy[s]))
            throw std::invalid_argument("policy action " + std::string(to_string(policy[s])) +
                                        " infeasible in state " + std::to_string(s));
}

ValueSolution policy_evaluation(const PolicyTable& policy, const TransitionKernel& kernel, const CostTable& costs,
                                std::size_t ref_state) {
    check_policy(policy, kernel);
    const std::size_t n = kernel.num_states();
    if (ref_state >= n) throw std::out_of_range("reference state out of range");

    // Unknowns: h(0..n-1), then lambda.
    const auto dim = static_cast<Eigen::Index>(n + 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    for (std::size_t s = 0; s < n; ++s) {
        const auto i = static_cast<Eigen::Index>(s);
        a(i, i) += 1.0;
        a(i, dim - 1) = 1.0;
        for (const Successor& e : kernel.row(s, policy[s])) a(i, static_cast<Eigen::Index>(e.state)) -= e.prob;
        b(i) = costs(s, policy[s]);
    }
    a(dim - 1, static_cast<Eigen::Index>(ref_state)) = 1.0;

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (pivots.minCoeff() < 1e-13 * std::max(1.0, pivots.maxCoeff()))
        throw SingularSystemError("policy evaluation system is singular (multichain policy?)");
    const Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite() || (a * x - b).cwiseAbs().maxCoeff() > 1e-9)
        throw SingularSystemError("policy evaluation system is ill-conditioned");

    ValueSolution out;
    out.ref_state = ref_state;
    out.gain = x(dim - 1);
    out.bias.assign(x.data(), x.data() + n);
    out.bias[ref_state] = 0.0;
    return out;
}

PolicyTable policy_improvement(const ValueSolution& values, const TransitionKernel& kernel, const CostTable& costs,
                               double tie_tol) {
    const std::size_t n = kernel.num_states();
    PolicyTable next(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::array<double, kNumActions> q;
        q.fill(std::numeric_limits<double>::infinity());
        double best = std::numeric_limits<double>::infinity();
        for (Action u : kAllActions) {
            if (!kernel.has_row(s, u)) continue;
            q[action_index(u)] = costs(s, u) + expected_next(kernel.row(s, u), values.bias);
            best = std::min(best, q[action_index(u)]);
        }
        if (!std::isfinite(best)) throw std::invalid_argument("state " + std::to_string(s) + " has no actions");
        const double slack = tie_tol * std::max(1.0, std::abs(best));
        for (Action u : kAllActions) {
            if (q[action_index(u)] <= best + slack) {
                next[s] = u;
                break;
            }
        }
    }
    return next;
}

RviResult relative_value_iteration(const TransitionKernel& kernel, const CostTable& costs, const RviOptions& options) {
    const std::size_t n = kernel.num_states();
    if (options.ref_state >= n) throw std::out_of_range("reference state out of range");
    if (!(options.tau > 0.0 && options.tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
    if (options.policy) check_policy(*options.policy, kernel);

    const double tau = options.tau;
    std::vector<double> h(n, 0.0), th(n, 0.0);
    RviResult result;

    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s = 0; s < n; ++s) {
            double best = std::numeric_limits<double>::infinity();
            for (Action u : kAllActions) {
                if (!kernel.has_row(s, u)) continue;
                if (options.policy && (*options.policy)[s] != u) continue;
                best = std::min(best, tau * (costs(s, u) + expected_next(kernel.row(s, u), h)) + (1.0 - tau) * h[s]);
            }
            th[s] = best;
            lo = std::min(lo, best - h[s]);
            hi = std::max(hi, best - h[s]);
        }
        const double span = hi - lo;
        if (options.record_spans) result.spans.push_back(span);

        const double pin = th[options.ref_state];
        for (std::size_t s = 0; s < n; ++s) h[s] = th[s] - pin;

        if (span < options.tol) {
            result.iterations = it;
            result.values.gain = 0.5 * (hi + lo) / tau;
            result.values.bias = std::move(h);
            result.values.bias[options.ref_state] = 0.0;
            result.values.ref_state = options.ref_state;
            return result;
        }
    }
    throw ConvergenceError("relative value iteration did not converge in " + std::to_string(options.max_iter) +
                           " iterations");
}

double bellman_residual(const ValueSolution& values, const TransitionKernel& kernel, const CostTable& costs) {
    const std::size_t n = kernel.num_states();
    if (values.bias.size() != n) throw std::invalid_argument("value vector size mismatch");
    double worst = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        double best = std::numeric_limits<double>::infinity();
        for (Action u : kAllActions)
            if (kernel.has_row(s, u)) best = std::min(best, costs(s, u) + expected_next(kernel.row(s, u), values.bias));
        worst = std::max(worst, std::abs(values.gain + values.bias[s] - best));
    }
    return worst;
}

EvaluatedPolicy evaluate_policy(const PolicyTable& policy, const TransitionKernel& kernel, const CostTable& costs,
                                std::size_t ref_state) {
    try {
        return {policy_evaluation(policy, kernel, costs, ref_state), false};
    } catch (const SingularSystemError&) {
        RviOptions opts;
        opts.ref_state = ref_state;
        opts.policy = &policy;
        opts.tol = 1e-12;
        opts.max_iter = 200'000;
        return {relative_value_iteration(kernel, costs, opts).values, true};
    }
}

PolicyIterationResult policy_iteration(const TransitionKernel& kernel, const CostTable& costs,
                                       const PolicyIterationOptions& options, const PolicyTable* init) {
    const std::size_t n = kernel.num_states();
    PolicyIterationResult result;
    if (init) {
        check_policy(*init, kernel);
        result.policy = *init;
    } else {
        result.policy = PolicyTable(n);
        for (std::size_t s = 0; s < n; ++s) result.policy[s] = first_available(kernel.actions(s));
    }

    std::vector<PolicyTable> visited;
    for (std::size_t j = 1; j <= options.max_iter; ++j) {
        EvaluatedPolicy eval = evaluate_policy(result.policy, kernel, costs, options.ref_state);
        result.fallbacks += eval.used_fallback ? 1 : 0;
        result.values = std::move(eval.values);
        result.trace.push_back(result.values.gain);
        result.iterations = j;

        PolicyTable next = policy_improvement(result.values, kernel, costs, options.tie_tol);
        if (next == result.policy) return result;
        // Revisiting a policy means we are cycling among co-optimal policies.
        if (std::find(visited.begin(), visited.end(), next) != visited.end()) return result;
        visited.push_back(std::move(result.policy));
        result.policy = std::move(next);
    }
    throw ConvergenceError("policy iteration exceeded " + std::to_string(options.max_iter) + " iterations");
}

double stationary_gain(const PolicyTable& policy, const TransitionKernel& kernel, const CostTable& costs) {
    check_policy(policy, kernel);
    const std::size_t n = kernel.num_states();

    // pi (I - P) = 0 with the last balance equation replaced by sum(pi) = 1,
    // written column-wise as (I - P)^T pi = 0.
    std::vector<double> a(n * n, 0.0), b(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        a[s * n + s] += 1.0;
        for (const Successor& e : kernel.row(s, policy[s])) a[e.state * n + s] -= e.prob;
    }
    for (std::size_t j = 0; j < n; ++j) a[(n - 1) * n + j] = 1.0;
    b[n - 1] = 1.0;

    std::vector<double> pi;
    if (solve_dense(a, b, n, 1e-12)) {
        pi = std::move(b);
    } else {
        // Several recurrent classes: Cesaro limit from the uniform start via
        // power iteration on the lazy chain (P + I) / 2.
        pi.assign(n, 1.0 / double(n));
        std::vector<double> next(n);
        for (std::size_t it = 0;; ++it) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t s = 0; s < n; ++s) {
                next[s] += 0.5 * pi[s];
                for (const Successor& e : kernel.row(s, policy[s])) next[e.state] += 0.5 * pi[s] * e.prob;
            }
            double delta = 0.0;
            for (std::size_t s = 0; s < n; ++s) delta += std::abs(next[s] - pi[s]);
            pi.swap(next);
            if (delta < 1e-12) break;
            if (it > 10'000'000) throw ConvergenceError("stationary power iteration did not converge");
        }
    }

    double gain = 0.0;
    for (std::size_t s = 0; s < n; ++s) gain += pi[s] * costs(s, policy[s]);
    return gain;
}

OracleResult brute_force_oracle(const TransitionKernel& kernel, const CostTable& costs) {
    const std::size_t n = kernel.num_states();
    if (n > kOracleMaxStates)
        throw std::length_error("oracle instance too large: " + std::to_string(n) + " states");

    std::vector<std::vector<Action>> choices(n);
    double count = 1.0;
    for (std::size_t s = 0; s < n; ++s) {
        for (Action u : kAllActions)
            if (kernel.has_row(s, u)) choices[s].push_back(u);
        if (choices[s].empty()) throw std::invalid_argument("state " + std::to_string(s) + " has no actions");
        count *= double(choices[s].size());
    }
    if (count > double(kOracleMaxPolicies))
        throw std::length_error("oracle instance too large: " + std::to_string(count) + " policies");

    // Mixed-radix counter over per-state action choices.
    std::vector<std::size_t> digit(n, 0);
    PolicyTable policy(n);
    for (std::size_t s = 0; s < n; ++s) policy[s] = choices[s][0];

    OracleResult best;
    best.gain = std::numeric_limits<double>::infinity();
    while (true) {
        const double gain = stationary_gain(policy, kernel, costs);
        ++best.policies_enumerated;
        if (gain < best.gain) {
            best.gain = gain;
            best.policy = policy;
        }
        std::size_t s = 0;
        while (s < n && ++digit[s] == choices[s].size()) {
            digit[s] = 0;
            policy[s] = choices[s][0];
            ++s;
        }
        if (s == n) break;
        policy[s] = choices[s][digit[s]];
    }
    return best;
}

}  // namespace ehpush
