#include "ehpush/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "ehpush/policies.hpp"
#include "ehpush/transition.hpp"

namespace ehpush {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

int SimRng::poisson(double mean) {
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    int k = 0;
    while (u >= cdf && k < 10'000) {
        ++k;
        p *= mean / k;
        cdf += p;
        if (p == 0.0 && cdf < u) break;   // u beyond the representable tail
    }
    return k;
}

StepOutcome sample_step(const SystemState& x, Action u, const Model& model, SimRng& rng) {
    const SystemParams& p = model.params;
    if (!model.feasible(x).contains(u))
        throw std::invalid_argument("sample_step: action " + std::string(to_string(u)) + " infeasible");

    StepOutcome out;
    const int spent = energy_cost(x, u, model.grid);
    const int arrived = rng.poisson(p.mean_arrival);
    out.next.battery = battery_update(x.battery, spent, arrived, p.battery_levels);
    out.overflow_units = std::max(0, x.battery - spent + arrived - p.battery_levels);

    // Contents 1..C are the pushed ones; a replaced pushed content leaves the
    // user caches. The push itself adds content C+1.
    int pushed = x.pushed;
    if (rng.bernoulli(p.content_replace_prob) && p.num_contents > 0) {
        const int leaving = rng.below(p.num_contents) + 1;
        if (leaving <= x.pushed) --pushed;
    }
    if (u == Action::Push) ++pushed;
    out.next.pushed = pushed;

    out.next.request = 0;
    if (rng.bernoulli(p.request_prob)) {
        out.request_generated = true;
        int rank = p.num_contents;
        const double r = rng.uniform();
        for (int c = 1; c <= p.num_contents; ++c) {
            if (r < model.cumulative[std::size_t(c)]) {
                rank = c;
                break;
            }
        }
        if (p.num_contents > 0 && rank <= pushed) {
            out.cache_hit = true;
        } else {
            const double radius = model.radio.cell_radius_m;
            const double dist = radius * std::sqrt(rng.uniform());
            int ring = model.grid.num_rings();
            for (int m = 1; m <= model.grid.num_rings(); ++m) {
                if (dist <= model.grid.distances[std::size_t(m)]) {
                    ring = m;
                    break;
                }
            }
            out.next.request = ring;
        }
    }
    return out;
}

void SimConfig::validate() const {
    if (horizon <= warmup) throw std::invalid_argument("simulation horizon must exceed warmup");
    if (batches < 1) throw std::invalid_argument("simulation needs at least one batch");
}

SimMetrics simulate(const SimConfig& config, const PolicyTable& policy, const Model& model) {
    config.validate();
    const StateSpace space = model.space();
    if (policy.size() != space.size()) throw std::invalid_argument("policy does not match state space");
    if (!space.contains(config.initial)) throw std::invalid_argument("initial state outside the state space");

    const std::uint64_t measured = config.horizon - config.warmup;
    const auto batches = static_cast<std::uint64_t>(std::min<std::uint64_t>(std::uint64_t(config.batches), measured));
    std::vector<double> batch_macro(batches, 0.0), batch_requests(batches, 0.0), batch_len(batches, 0.0);

    SimRng rng(config.seed);
    SimMetrics m;
    SystemState x = config.initial;
    bool requested = false;
    bool hit = false;

    for (std::uint64_t k = 0; k < config.horizon; ++k) {
        const Action u = policy[space.index(x)];
        if (!model.feasible(x).contains(u))
            throw std::runtime_error("policy chose infeasible action " + std::string(to_string(u)) + " in period " +
                                     std::to_string(k));
        const int cost = stage_cost(x, u);

        const StepOutcome step = sample_step(x, u, model, rng);
        if (k >= config.warmup) {
            const std::uint64_t b = (k - config.warmup) * batches / measured;
            ++m.periods;
            m.requests_generated += requested ? 1 : 0;
            m.cache_hits += hit ? 1 : 0;
            m.macro_handled += std::uint64_t(cost);
            m.energy_overflow_units += std::uint64_t(step.overflow_units);
            batch_len[b] += 1.0;
            batch_macro[b] += cost;
            batch_requests[b] += requested ? 1.0 : 0.0;
        }

        x = step.next;
        requested = step.request_generated;
        hit = step.cache_hit;
        if (config.debug_checks && !space.contains(x))
            throw std::logic_error("state left the state space in period " + std::to_string(k));
    }

    if (batches > 1) {
        auto batch_se = [&](const std::vector<double>& counts) {
            double mean = 0.0;
            for (std::size_t b = 0; b < batches; ++b) mean += counts[b] / batch_len[b];
            mean /= double(batches);
            double var = 0.0;
            for (std::size_t b = 0; b < batches; ++b) {
                const double d = counts[b] / batch_len[b] - mean;
                var += d * d;
            }
            var /= double(batches - 1);
            return std::sqrt(var / double(batches));
        };
        m.macro_ratio_se = batch_se(batch_macro);
        m.request_ratio_se = batch_se(batch_requests);
    }
    return m;
}

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::OptimalPush: return "optimal-push";
        case PolicyKind::NonPushOptimal: return "non-push-optimal";
        case PolicyKind::UnicastPriority: return "unicast-priority";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
    for (PolicyKind k : {PolicyKind::OptimalPush, PolicyKind::NonPushOptimal, PolicyKind::UnicastPriority})
        if (name == to_string(k)) return k;
    throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

namespace {

struct PointResult {
    std::vector<SweepRow> rows;
};

PointResult run_point(const SystemParams& base, const RadioParams& radio, const SweepOptions& opt, std::size_t point) {
    SystemParams params = base;
    params.request_prob = opt.request_probs[point];
    const Model model = make_model(params, radio);
    const TransitionKernel kernel = build_kernel(model);
    const CostTable costs = stage_costs(model);

    PointResult result;
    for (std::size_t pi = 0; pi < opt.policies.size(); ++pi) {
        const PolicyKind kind = opt.policies[pi];
        PolicyTable policy;
        double gain = 0.0;
        switch (kind) {
            case PolicyKind::OptimalPush: {
                auto solved = policy_iteration(kernel, costs);
                policy = std::move(solved.policy);
                gain = solved.values.gain;
                break;
            }
            case PolicyKind::NonPushOptimal: {
                auto solved = non_push_optimal(model);
                policy = std::move(solved.policy);
                gain = solved.values.gain;
                break;
            }
            case PolicyKind::UnicastPriority:
                policy = unicast_priority_policy(model);
                gain = evaluate_policy(policy, kernel, costs).values.gain;
                break;
        }

        SweepRow row;
        row.policy = kind;
        row.request_prob = params.request_prob;
        row.replace_prob = params.content_replace_prob;
        row.mean_arrival = params.mean_arrival;
        row.gain = gain;
        row.seed = opt.master_seed;
        double se2 = 0.0;
        for (int r = 0; r < opt.replications; ++r) {
            SimConfig cfg;
            cfg.horizon = opt.horizon;
            cfg.warmup = opt.warmup;
            cfg.seed = derive_seed(opt.master_seed, (point * 16 + std::size_t(kind)) * 1024 + std::size_t(r));
            const SimMetrics metrics = simulate(cfg, policy, model);
            row.ratio += metrics.macro_ratio();
            row.periods += metrics.periods;
            se2 += metrics.macro_ratio_se * metrics.macro_ratio_se;
        }
        row.ratio /= opt.replications;
        row.se = std::sqrt(se2) / opt.replications;
        result.rows.push_back(row);
    }
    return result;
}

}  // namespace

std::vector<SweepRow> sweep(const SystemParams& params, const RadioParams& radio, const SweepOptions& options) {
    if (options.replications < 1) throw std::invalid_argument("sweep needs at least one replication");
    for (double pu : options.request_probs)
        if (!(pu > 0.0 && pu <= 1.0)) throw std::invalid_argument("sweep p_u values must lie in (0, 1]");

    const std::size_t points = options.request_probs.size();
    std::vector<PointResult> results(points);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < points; i = next++) {
            try {
                results[i] = run_point(params, radio, options, i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(points, 1)));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (failure) std::rethrow_exception(failure);

    std::vector<SweepRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
    return rows;
}

}  // namespace ehpush
