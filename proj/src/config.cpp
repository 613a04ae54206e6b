#include "ehpush/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace ehpush {

namespace {

struct KeySpec {
    const char* name;
    double fallback;
    bool integral;
};

constexpr KeySpec kKeys[] = {
    {"n_contents", 20, true},  {"zipf_skew", 0.5, false}, {"p_c", 0.3, false},      {"p_u", 0.7, false},
    {"e_max", 15, true},       {"m_rings", 4, true},      {"a_bar", 0.8, false},    {"alpha", 2.0, false},
    {"beta_db", 10.0, false},  {"r0_over_w", 1.0, false}, {"radius_m", 50.0, false}, {"pt_edge_w", 1.0, false},
    {"t_p_s", 1.0, false},
};

std::size_t key_slot(std::string_view key) {
    for (std::size_t i = 0; i < std::size(kKeys); ++i)
        if (key == kKeys[i].name) return i;
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Config::Config() {
    for (const auto& k : kKeys) values_.push_back(k.fallback);
}

const std::vector<std::string>& Config::keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& k : kKeys) v.emplace_back(k.name);
        return v;
    }();
    return names;
}

double Config::get(std::string_view key) const { return values_[key_slot(key)]; }

void Config::set(std::string_view key, std::string_view value) {
    const std::size_t slot = key_slot(key);
    value = trim(value);
    double parsed = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(parsed))
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
    if (kKeys[slot].integral && parsed != std::floor(parsed))
        throw ConfigError("config key '" + std::string(key) + "': expected an integer");
    values_[slot] = parsed;
}

void Config::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("expected KEY=VALUE, got '" + std::string(assignment) + "'");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

SystemParams Config::system_params() const {
    SystemParams p;
    p.num_contents = static_cast<int>(get("n_contents"));
    p.zipf_skew = get("zipf_skew");
    p.content_replace_prob = get("p_c");
    p.request_prob = get("p_u");
    p.period_length_s = get("t_p_s");
    p.battery_levels = static_cast<int>(get("e_max"));
    p.num_rings = static_cast<int>(get("m_rings"));
    p.mean_arrival = get("a_bar");
    return p;
}

RadioParams Config::radio_params() const {
    RadioParams r;
    r.pathloss_exp = get("alpha");
    r.pathloss_const = std::pow(10.0, get("beta_db") / 10.0);
    r.min_rate_bps = get("r0_over_w") * r.bandwidth_hz;
    r.cell_radius_m = get("radius_m");
    r.edge_power_w = get("pt_edge_w");
    return r;
}

void Config::write(std::ostream& os, std::string_view prefix) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, values_[i]);
        os << prefix << kKeys[i].name << " = " << std::string_view(buf, std::size_t(res.ptr - buf)) << '\n';
    }
}

Config load_config(std::istream& is, Config base) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        if (view.find('=') == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        base.apply_override(view);
    }
    return base;
}

Config load_config_file(const std::filesystem::path& path, Config base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return load_config(in, std::move(base));
}

}  // namespace ehpush
