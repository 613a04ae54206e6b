#pragma once

// Flat key/value experiment configuration.
//
//   # comment
//   p_u = 0.7
//   a_bar = 0.8
//
// Unknown keys are rejected. Defaults reproduce the reference scenario.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ehpush/model.hpp"

namespace ehpush {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Config {
public:
    /// All keys at their defaults.
    Config();

    static const std::vector<std::string>& keys();

    double get(std::string_view key) const;
    /// Throws ConfigError naming the key if it is unknown or the value does
    /// not parse (or is not integral for integer keys).
    void set(std::string_view key, std::string_view value);
    /// "KEY=VALUE" form, as given to --set.
    void apply_override(std::string_view assignment);

    SystemParams system_params() const;
    RadioParams radio_params() const;

    /// Writes "<prefix>key = value" lines in key order.
    void write(std::ostream& os, std::string_view prefix = "") const;

private:
    std::vector<double> values_;
};

/// Applies every assignment in the stream on top of `base`.
Config load_config(std::istream& is, Config base = Config());
Config load_config_file(const std::filesystem::path& path, Config base = Config());

}  // namespace ehpush
