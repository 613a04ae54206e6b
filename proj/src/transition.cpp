#include "ehpush/transition.hpp"

#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ehpush {

double poisson_pmf(double mean, int i) {
    if (i < 0) return 0.0;
    if (mean <= 0.0) throw std::invalid_argument("poisson_pmf: mean must be > 0");
    return std::exp(-mean + i * std::log(mean) - std::lgamma(double(i) + 1.0));
}

ArrivalPmf::ArrivalPmf(double mean, int battery_levels) : mean_(mean) {
    if (!(mean > 0.0)) throw std::invalid_argument("a_bar: must be > 0");
    if (battery_levels < 0) throw std::invalid_argument("e_max: must be >= 0");
    pmf_.resize(std::size_t(battery_levels) + 1);
    prefix_.assign(pmf_.size() + 1, 0.0);
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
        pmf_[i] = poisson_pmf(mean, int(i));
        prefix_[i + 1] = prefix_[i] + pmf_[i];
    }
}

double ArrivalPmf::operator()(int i) const {
    if (i < 0) return 0.0;
    if (std::size_t(i) < pmf_.size()) return pmf_[std::size_t(i)];
    return poisson_pmf(mean_, i);
}

double ArrivalPmf::overflow_prob(int gap) const {
    if (gap <= 0) return 1.0;
    if (std::size_t(gap) >= prefix_.size()) throw std::out_of_range("overflow gap exceeds battery capacity");
    return std::max(0.0, 1.0 - prefix_[std::size_t(gap)]);
}

std::vector<double> energy_row(int battery, int spent, const ArrivalPmf& arrival, int battery_levels) {
    if (spent < 0 || spent > battery) throw std::invalid_argument("energy_row: spend exceeds battery");
    if (battery > battery_levels) throw std::invalid_argument("energy_row: battery above capacity");
    std::vector<double> row(std::size_t(battery_levels) + 1, 0.0);
    const int base = battery - spent;
    for (int next = base; next < battery_levels; ++next) row[std::size_t(next)] = arrival(next - base);
    row.back() = arrival.overflow_prob(battery_levels - base);
    return row;
}

std::vector<double> energy_row(const SystemState& x, Action u, const Model& model, const ArrivalPmf& arrival) {
    if (!model.feasible(x).contains(u))
        throw std::invalid_argument("energy_row: action " + std::string(to_string(u)) + " infeasible");
    return energy_row(x.battery, energy_cost(x, u, model.grid), arrival, model.params.battery_levels);
}

std::array<double, 3> content_row(int pushed, Action u, const SystemParams& params) {
    const int n = params.num_contents;
    if (pushed < 0 || pushed > n) throw std::out_of_range("content_row: pushed count outside [0, N]");
    if (u == Action::Push && pushed >= n) throw std::invalid_argument("content_row: push with every content pushed");
    // A replaced content drops out of the user caches when it was among the
    // pushed ones.
    const double loss = pushed == 0 ? 0.0 : params.content_replace_prob * pushed / n;
    if (u == Action::Push) return {0.0, loss, 1.0 - loss};
    return {loss, 1.0 - loss, 0.0};
}

std::vector<double> request_row(int next_pushed, std::span<const double> cumulative, const DistanceGrid& grid,
                                double request_prob) {
    if (next_pushed < 0 || std::size_t(next_pushed) >= cumulative.size())
        throw std::out_of_range("request_row: pushed count outside [0, N]");
    const double hit = cumulative[std::size_t(next_pushed)];
    std::vector<double> row(grid.ring_probs.size(), 0.0);
    row[0] = (1.0 - request_prob) + request_prob * hit;
    for (std::size_t m = 1; m < row.size(); ++m) row[m] = request_prob * (1.0 - hit) * grid.ring_probs[m];
    return row;
}

TransitionKernel::TransitionKernel(std::size_t num_states)
    : actions_(num_states), rows_(num_states * kNumActions) {}

std::size_t TransitionKernel::num_rows() const {
    std::size_t n = 0;
    for (ActionSet a : actions_) n += a.size();
    return n;
}

std::size_t TransitionKernel::num_entries() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
}

std::span<const Successor> TransitionKernel::row(std::size_t state, Action u) const {
    if (!has_row(state, u))
        throw std::out_of_range("no transition row for state " + std::to_string(state) + " action " +
                                std::string(to_string(u)));
    return rows_[state * kNumActions + action_index(u)];
}

void TransitionKernel::set_row(std::size_t state, Action u, std::vector<Successor> entries) {
    actions_.at(state).insert(u);
    rows_[state * kNumActions + action_index(u)] = std::move(entries);
}

TransitionKernel build_kernel(const Model& model, ActionSet allowed) {
    const StateSpace space = model.space();
    const SystemParams& p = model.params;
    const ArrivalPmf arrival(p.mean_arrival, p.battery_levels);

    std::vector<std::vector<double>> request_given_pushed;
    for (int c = 0; c <= p.num_contents; ++c)
        request_given_pushed.push_back(request_row(c, model.cumulative, model.grid, p.request_prob));

    TransitionKernel kernel(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) {
        const SystemState x = space.state(s);
        const ActionSet actions = model.feasible(x) & allowed;
        for (Action u : kAllActions) {
            if (!actions.contains(u)) continue;
            const auto energy = energy_row(x, u, model, arrival);
            const auto content = content_row(x.pushed, u, p);

            std::vector<Successor> entries;
            for (int e = 0; e <= p.battery_levels; ++e) {
                if (energy[std::size_t(e)] <= 0.0) continue;
                for (int q = 0; q <= p.num_rings; ++q) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int c = x.pushed + dc;
                        const double pc = content[std::size_t(dc + 1)];
                        if (pc <= 0.0) continue;
                        const double prob = energy[std::size_t(e)] * pc * request_given_pushed[std::size_t(c)][std::size_t(q)];
                        if (prob <= 0.0) continue;
                        entries.push_back({static_cast<std::uint32_t>(space.index({e, q, c})), prob});
                    }
                }
            }
            kernel.set_row(s, u, std::move(entries));
        }
    }
    return kernel;
}

CostTable stage_costs(const Model& model) {
    const StateSpace space = model.space();
    CostTable costs(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) {
        const SystemState x = space.state(s);
        for (Action u : kAllActions) costs.set(s, u, stage_cost(x, u));
    }
    return costs;
}

namespace {

std::vector<bool> reachable_from(std::size_t origin, const std::vector<std::vector<std::size_t>>& adjacency) {
    std::vector<bool> seen(adjacency.size(), false);
    if (adjacency.empty()) return seen;
    std::deque<std::size_t> frontier{origin};
    seen[origin] = true;
    while (!frontier.empty()) {
        const std::size_t s = frontier.front();
        frontier.pop_front();
        for (std::size_t t : adjacency[s]) {
            if (!seen[t]) {
                seen[t] = true;
                frontier.push_back(t);
            }
        }
    }
    return seen;
}

}  // namespace

KernelReport validate_kernel(const TransitionKernel& kernel) {
    KernelReport report;
    const std::size_t n = kernel.num_states();
    std::vector<std::vector<std::size_t>> forward(n), backward(n);

    for (std::size_t s = 0; s < n; ++s) {
        if (kernel.actions(s).empty()) ++report.states_without_rows;
        for (Action u : kAllActions) {
            if (!kernel.has_row(s, u)) continue;
            double sum = 0.0;
            for (const Successor& e : kernel.row(s, u)) {
                sum += e.prob;
                if (e.prob < 0.0) ++report.negative_entries;
                if (e.prob > 1.0 || e.state >= n) {
                    ++report.out_of_range_entries;
                    continue;
                }
                if (e.prob > 0.0) {
                    forward[s].push_back(e.state);
                    backward[e.state].push_back(s);
                }
            }
            report.max_row_deviation = std::max(report.max_row_deviation, std::abs(sum - 1.0));
        }
    }

    const auto from_origin = reachable_from(0, forward);
    const auto to_origin = reachable_from(0, backward);
    bool all_back = true;
    for (std::size_t s = 0; s < n; ++s) {
        if (!from_origin[s]) report.unreachable.push_back(s);
        all_back = all_back && to_origin[s];
    }
    report.communicating = n > 0 && report.unreachable.empty() && all_back;
    return report;
}

void write_kernel(std::ostream& os, const TransitionKernel& kernel) {
    os << "# state action successor probability\n";
    os << std::setprecision(17);
    for (std::size_t s = 0; s < kernel.num_states(); ++s)
        for (Action u : kAllActions)
            if (kernel.has_row(s, u))
                for (const Successor& e : kernel.row(s, u))
                    os << s << ' ' << action_index(u) << ' ' << e.state << ' ' << e.prob << '\n';
}

}  // namespace ehpush
