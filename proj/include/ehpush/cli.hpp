#pragma once

// Experiment orchestration behind the command-line tool. Each run_* writes its
// artifacts under spec.out_dir and returns the process exit status.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ehpush/config.hpp"
#include "ehpush/model.hpp"

namespace ehpush {

enum class Subcommand { Solve, Simulate, Sweep, Validate, Oracle };

struct ExperimentSpec {
    Subcommand command = Subcommand::Solve;
    std::string scenario = "default";
    std::optional<std::filesystem::path> config_path;
    std::vector<std::string> overrides;   // KEY=VALUE
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 1;

    std::uint64_t horizon = 1'000'000;
    std::uint64_t warmup = 10'000;
    std::string policy = "optimal-push";  // simulate: a PolicyKind name or "sleep"
    std::vector<double> request_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    int replications = 1;
    unsigned threads = 0;
    std::optional<std::filesystem::path> solution_path;   // validate an existing solution file
    bool export_kernel = false;
    int instances = 100;                                  // oracle
};

/// Defaults, then the config file, then --set overrides, in that order.
Config resolve_config(const ExperimentSpec& spec);

int run_solve(const ExperimentSpec& spec, std::ostream& log);
int run_simulate(const ExperimentSpec& spec, std::ostream& log);
int run_sweep(const ExperimentSpec& spec, std::ostream& log);
int run_validate(const ExperimentSpec& spec, std::ostream& log);
int run_oracle(const ExperimentSpec& spec, std::ostream& log);

/// Dispatches on spec.command; converts exceptions into a message on `log`
/// and exit status 1.
int run(const ExperimentSpec& spec, std::ostream& log);

/// A random single-ring instance small enough for brute_force_oracle:
/// E_max in [1, 3], N in [0, 2].
SystemParams random_tiny_params(std::uint64_t seed);

}  // namespace ehpush
