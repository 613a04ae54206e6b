// ehpush: solve, simulate and validate the energy-harvesting push model.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ehpush/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Proactive push for energy-harvesting small cells: average-cost MDP tools"};
    app.require_subcommand(1);

    ehpush::ExperimentSpec spec;
    std::string config_path;
    std::string solution_path;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Flat key = value config file");
        sub->add_option("--out", spec.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", spec.seed, "Master seed")->capture_default_str();
        sub->add_option("--set", spec.overrides, "Override one config key (KEY=VALUE), repeatable");
        sub->add_option("--scenario", spec.scenario, "Scenario name recorded in outputs")->capture_default_str();
    };
    auto sim_opts = [&](CLI::App* sub) {
        sub->add_option("--horizon", spec.horizon, "Total simulated periods, warmup included")->capture_default_str();
        sub->add_option("--warmup", spec.warmup, "Periods discarded before measuring")->capture_default_str();
    };

    auto* solve = app.add_subcommand("solve", "Solve for the optimal policy and write solution + threshold grids");
    common(solve);
    solve->add_flag("--export-kernel", spec.export_kernel, "Also write the transition kernel");

    auto* simulate = app.add_subcommand("simulate", "Simulate one policy and compare with its solver gain");
    common(simulate);
    sim_opts(simulate);
    simulate->add_option("--policy", spec.policy, "optimal-push | non-push-optimal | unicast-priority | sleep")
        ->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Macro-handled ratio of all three policies over a p_u grid");
    common(sweep);
    sim_opts(sweep);
    sweep->add_option("--pu", spec.request_grid, "Request probabilities to sweep")->delimiter(',');
    sweep->add_option("--replications", spec.replications, "Replications per grid point")->capture_default_str();
    sweep->add_option("--threads", spec.threads, "Worker threads (0 = all cores)")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Kernel, Bellman, simulator and threshold checks");
    common(validate);
    sim_opts(validate);
    validate->add_option("--solution", solution_path, "Check the Bellman residual of this solution file");

    auto* oracle = app.add_subcommand("oracle", "Compare policy iteration with exhaustive search on tiny instances");
    common(oracle);
    oracle->add_option("--instances", spec.instances, "Number of random instances")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (!config_path.empty()) spec.config_path = config_path;
    if (!solution_path.empty()) spec.solution_path = solution_path;
    if (*solve) spec.command = ehpush::Subcommand::Solve;
    if (*simulate) spec.command = ehpush::Subcommand::Simulate;
    if (*sweep) spec.command = ehpush::Subcommand::Sweep;
    if (*validate) spec.command = ehpush::Subcommand::Validate;
    if (*oracle) spec.command = ehpush::Subcommand::Oracle;

    return ehpush::run(spec, std::cerr);
}
