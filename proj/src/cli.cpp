#include "ehpush/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ehpush/io.hpp"
#include "ehpush/policies.hpp"
#include "ehpush/sim.hpp"
#include "ehpush/solver.hpp"
#include "ehpush/transition.hpp"

namespace ehpush {

namespace {

std::vector<std::string> provenance(const ExperimentSpec& spec, const Config& config) {
    std::vector<std::string> lines{"scenario = " + spec.scenario, "seed = " + std::to_string(spec.seed)};
    std::ostringstream os;
    config.write(os, "config ");
    std::string line;
    std::istringstream in(os.str());
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void write_header(std::ostream& os, const std::vector<std::string>& lines) {
    for (const auto& l : lines) os << "# " << l << '\n';
}

Model resolve_model(const Config& config) { return make_model(config.system_params(), config.radio_params()); }

PolicyTable named_policy(const std::string& name, const Model& model, const TransitionKernel& kernel,
                         const CostTable& costs) {
    if (name == "sleep") return always_sleep_policy(model);
    switch (parse_policy_kind(name)) {
        case PolicyKind::OptimalPush: return policy_iteration(kernel, costs).policy;
        case PolicyKind::NonPushOptimal: return non_push_optimal(model).policy;
        case PolicyKind::UnicastPriority: return unicast_priority_policy(model);
    }
    return {};
}

bool trace_non_increasing(const std::vector<double>& trace) {
    for (std::size_t j = 1; j < trace.size(); ++j)
        if (trace[j] > trace[j - 1] + 1e-12) return false;
    return true;
}

class CheckLog {
public:
    explicit CheckLog(std::ostream& os) : os_(os) {}

    void record(const std::string& name, bool ok, const std::string& detail) {
        os_ << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        failures_ += ok ? 0 : 1;
    }
    int failures() const { return failures_; }

private:
    std::ostream& os_;
    int failures_ = 0;
};

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << v;
    return os.str();
}

}  // namespace

Config resolve_config(const ExperimentSpec& spec) {
    Config config;
    if (spec.config_path) config = load_config_file(*spec.config_path, config);
    for (const auto& o : spec.overrides) config.apply_override(o);
    return config;
}

int run_solve(const ExperimentSpec& spec, std::ostream& log) {
    const Config config = resolve_config(spec);
    const Model model = resolve_model(config);
    std::filesystem::create_directories(spec.out_dir / "thresholds");

    const TransitionKernel kernel = build_kernel(model);
    const CostTable costs = stage_costs(model);
    const PolicyIterationResult solved = policy_iteration(kernel, costs);
    const StateSpace space = model.space();
    const auto header = provenance(spec, config);

    {
        auto out = open_output(spec.out_dir / "solution.csv");
        write_solution(out, space, solved.policy, solved.values, solved.trace, header);
    }
    write_threshold_grids(solved.policy, space, spec.out_dir / "thresholds");
    {
        auto out = open_output(spec.out_dir / "summary.txt");
        write_header(out, header);
        out << std::setprecision(17) << "lambda = " << solved.values.gain << '\n'
            << "iterations = " << solved.iterations << '\n'
            << "bellman_residual = " << bellman_residual(solved.values, kernel, costs) << '\n'
            << "macro_per_request = "
            << (model.params.request_prob > 0 ? solved.values.gain / model.params.request_prob : 0.0) << '\n';
    }
    if (spec.export_kernel) {
        auto out = open_output(spec.out_dir / "kernel.txt");
        write_header(out, header);
        write_kernel(out, kernel);
    }

    log << "states " << space.size() << ", policy iteration converged in " << solved.iterations
        << " iterations, lambda = " << std::setprecision(10) << solved.values.gain << '\n';
    log << "wrote " << (spec.out_dir / "solution.csv").string() << " and " << space.num_contents() + 1
        << " threshold grids\n";
    return 0;
}

int run_simulate(const ExperimentSpec& spec, std::ostream& log) {
    const Config config = resolve_config(spec);
    const Model model = resolve_model(config);
    std::filesystem::create_directories(spec.out_dir);

    const TransitionKernel kernel = build_kernel(model);
    const CostTable costs = stage_costs(model);
    const PolicyTable policy = named_policy(spec.policy, model, kernel, costs);
    const double gain = evaluate_policy(policy, kernel, costs).values.gain;

    SimConfig cfg;
    cfg.horizon = spec.horizon;
    cfg.warmup = spec.warmup;
    cfg.seed = spec.seed;
    const SimMetrics m = simulate(cfg, policy, model);

    auto out = open_output(spec.out_dir / "simulate.csv");
    write_header(out, provenance(spec, config));
    out << "policy,p_u,p_c,a_bar,ratio,se,K,seed,lambda,requests,macro_handled,cache_hits,overflow_units\n";
    out << spec.policy << ',' << model.params.request_prob << ',' << model.params.content_replace_prob << ','
        << model.params.mean_arrival << ',' << std::setprecision(17) << m.macro_ratio() << ',' << m.macro_ratio_se
        << ',' << m.periods << ',' << spec.seed << ',' << gain << ',' << m.requests_generated << ','
        << m.macro_handled << ',' << m.cache_hits << ',' << m.energy_overflow_units << '\n';

    log << std::setprecision(6) << spec.policy << ": K-bar/K = " << m.macro_ratio() << " +- " << m.macro_ratio_se
        << " (solver " << gain << "), K-bar/K~ = " << m.macro_per_request() << '\n';
    return 0;
}

int run_sweep(const ExperimentSpec& spec, std::ostream& log) {
    const Config config = resolve_config(spec);
    std::filesystem::create_directories(spec.out_dir);

    SweepOptions opt;
    opt.request_probs = spec.request_grid;
    opt.replications = spec.replications;
    opt.horizon = spec.horizon;
    opt.warmup = spec.warmup;
    opt.master_seed = spec.seed;
    opt.threads = spec.threads;
    const auto rows = sweep(config.system_params(), config.radio_params(), opt);
    const auto header = provenance(spec, config);

    {
        auto out = open_output(spec.out_dir / "sweep.csv");
        write_header(out, header);
        write_sweep(out, rows);
    }
    const auto reductions = reduction_summary(rows);
    {
        auto out = open_output(spec.out_dir / "reduction.csv");
        write_header(out, header);
        write_reduction(out, reductions);
    }
    for (const auto& r : reductions)
        log << "p_u " << std::setprecision(3) << r.request_prob << ": push reduces macro load by "
            << std::setprecision(4) << 100.0 * r.solver_reduction() << "% (simulated "
            << 100.0 * r.simulated_reduction() << "%)\n";
    return 0;
}

int run_validate(const ExperimentSpec& spec, std::ostream& log) {
    const Config config = resolve_config(spec);
    const Model model = resolve_model(config);
    const StateSpace space = model.space();
    const TransitionKernel kernel = build_kernel(model);
    const CostTable costs = stage_costs(model);
    CheckLog checks(log);

    const KernelReport report = validate_kernel(kernel);
    checks.record("kernel", report.ok(1e-12),
                  "max row deviation " + sci(report.max_row_deviation) + ", " +
                      std::to_string(report.negative_entries) + " negative entries, " +
                      std::to_string(report.unreachable.size()) + " states unreachable from origin");

    const PolicyIterationResult solved = policy_iteration(kernel, costs);
    const double residual = bellman_residual(solved.values, kernel, costs);
    checks.record("bellman_residual", residual <= 1e-9, sci(residual));
    checks.record("trace_monotone", trace_non_increasing(solved.trace),
                  std::to_string(solved.trace.size()) + " evaluations");
    checks.record("reference_pinned", solved.values.bias[solved.values.ref_state] == 0.0, "h(ref) = 0");

    if (spec.solution_path) {
        std::ifstream in(*spec.solution_path);
        if (!in) throw std::runtime_error("cannot open solution file " + spec.solution_path->string());
        const SolutionFile file = read_solution(in, space);
        const double file_residual = bellman_residual(file.values, kernel, costs);
        checks.record("solution_file_residual", file_residual <= 1e-9, sci(file_residual));
    }

    const ThresholdProfile profile = threshold_profile(solved.policy, space);
    std::size_t dirty = 0;
    for (const auto& slice : profile.slices) dirty += slice.clean ? 0 : 1;
    checks.record("threshold_structure", dirty == 0,
                  std::to_string(profile.slices.size() - dirty) + "/" + std::to_string(profile.slices.size()) +
                      " (Q, C) slices with a clean sleep threshold");

    struct Candidate {
        const char* name;
        PolicyTable policy;
        double gain;
    };
    const auto nonpush = non_push_optimal(model);
    const PolicyTable greedy = unicast_priority_policy(model);
    const std::vector<Candidate> candidates{
        {"optimal-push", solved.policy, solved.values.gain},
        {"non-push-optimal", nonpush.policy, nonpush.values.gain},
        {"unicast-priority", greedy, evaluate_policy(greedy, kernel, costs).values.gain},
    };
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        SimConfig cfg;
        cfg.horizon = spec.horizon;
        cfg.warmup = spec.warmup;
        cfg.seed = derive_seed(spec.seed, i);
        const SimMetrics m = simulate(cfg, candidates[i].policy, model);
        const double gap = std::abs(m.macro_ratio() - candidates[i].gain);
        checks.record(std::string("sim_agreement/") + candidates[i].name, gap <= 3.0 * m.macro_ratio_se,
                      "solver " + sci(candidates[i].gain) + ", simulated " + sci(m.macro_ratio()) + " +- " +
                          sci(m.macro_ratio_se));
    }

    log << (checks.failures() == 0 ? "all checks passed\n" : std::to_string(checks.failures()) + " check(s) failed\n");
    return checks.failures() == 0 ? 0 : 1;
}

SystemParams random_tiny_params(std::uint64_t seed) {
    SimRng rng(seed);
    SystemParams p;
    p.battery_levels = 1 + rng.below(3);
    p.num_contents = rng.below(3);
    p.num_rings = 1;
    p.zipf_skew = 2.0 * rng.uniform();
    p.content_replace_prob = 0.05 + 0.95 * rng.uniform();
    p.request_prob = rng.uniform();
    p.mean_arrival = 0.1 + 2.9 * rng.uniform();
    return p;
}

int run_oracle(const ExperimentSpec& spec, std::ostream& log) {
    std::filesystem::create_directories(spec.out_dir);
    const Config config = resolve_config(spec);
    const RadioParams radio = config.radio_params();

    auto out = open_output(spec.out_dir / "oracle.csv");
    write_header(out, {"scenario = " + spec.scenario, "seed = " + std::to_string(spec.seed)});
    out << "instance,e_max,n_contents,zipf_skew,p_c,p_u,a_bar,policies,lambda_pi,lambda_oracle,abs_diff\n";
    out << std::setprecision(17);

    double worst = 0.0;
    int mismatches = 0;
    for (int i = 0; i < spec.instances; ++i) {
        const SystemParams params = random_tiny_params(derive_seed(spec.seed, std::uint64_t(i)));
        const Model model = make_model(params, radio);
        const TransitionKernel kernel = build_kernel(model);
        const CostTable costs = stage_costs(model);
        const double pi_gain = policy_iteration(kernel, costs).values.gain;
        const OracleResult oracle = brute_force_oracle(kernel, costs);
        const double diff = std::abs(pi_gain - oracle.gain);
        worst = std::max(worst, diff);
        mismatches += diff <= 1e-9 ? 0 : 1;
        out << i << ',' << params.battery_levels << ',' << params.num_contents << ',' << params.zipf_skew << ','
            << params.content_replace_prob << ',' << params.request_prob << ',' << params.mean_arrival << ','
            << oracle.policies_enumerated << ',' << pi_gain << ',' << oracle.gain << ',' << diff << '\n';
    }
    log << spec.instances << " tiny instances, max |lambda_pi - lambda_oracle| = " << sci(worst) << ", "
        << mismatches << " above 1e-9\n";
    return mismatches == 0 ? 0 : 1;
}

int run(const ExperimentSpec& spec, std::ostream& log) {
    try {
        switch (spec.command) {
            case Subcommand::Solve: return run_solve(spec, log);
            case Subcommand::Simulate: return run_simulate(spec, log);
            case Subcommand::Sweep: return run_sweep(spec, log);
            case Subcommand::Validate: return run_validate(spec, log);
            case Subcommand::Oracle: return run_oracle(spec, log);
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
    }
    return 1;
}

}  // namespace ehpush
