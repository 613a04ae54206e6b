#include "ehpush/model.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ehpush {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// 2^{r0/W} - 1, the SNR needed for the target rate.
double snr_target(const RadioParams& radio) {
    return std::exp2(radio.min_rate_bps / radio.bandwidth_hz) - 1.0;
}

}  // namespace

void SystemParams::validate() const {
    // N = 0 and E_max = 0 are accepted as degenerate boundary models.
    require(num_contents >= 0, "n_contents", "must be >= 0");
    require(zipf_skew >= 0.0 && std::isfinite(zipf_skew), "zipf_skew", "must be finite and >= 0");
    require(is_probability(content_replace_prob), "p_c", "must lie in [0, 1]");
    require(is_probability(request_prob), "p_u", "must lie in [0, 1]");
    require(period_length_s > 0.0, "t_p_s", "must be > 0");
    require(battery_levels >= 0, "e_max", "must be >= 0");
    require(num_rings >= 1, "m_rings", "must be >= 1");
    require(energy_unit_j > 0.0, "energy_unit", "must be > 0");
    require(mean_arrival > 0.0 && std::isfinite(mean_arrival), "a_bar", "must be finite and > 0");
}

void RadioParams::validate() const {
    require(bandwidth_hz > 0.0, "bandwidth", "must be > 0");
    require(pathloss_const > 0.0, "beta", "must be > 0");
    require(pathloss_exp >= 2.0, "alpha", "must be >= 2");
    require(noise_interference_w > 0.0, "noise_interference", "must be > 0");
    require(min_rate_bps > 0.0, "r0", "must be > 0");
    require(cell_radius_m > 0.0, "radius_m", "must be > 0");
    require(edge_power_w > 0.0, "pt_edge_w", "must be > 0");
}

std::string_view to_string(Action u) {
    switch (u) {
        case Action::Sleep: return "sleep";
        case Action::Unicast: return "unicast";
        case Action::Push: return "push";
    }
    return "?";
}

Action parse_action(std::string_view name) {
    for (Action u : kAllActions)
        if (name == to_string(u)) return u;
    if (name.size() == 1 && name[0] >= '0' && name[0] <= '2') return static_cast<Action>(name[0] - '0');
    throw std::invalid_argument("unknown action '" + std::string(name) + "'");
}

std::size_t ActionSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

StateSpace::StateSpace(int battery_levels, int num_rings, int num_contents)
    : e_max_(battery_levels), m_(num_rings), n_(num_contents) {
    if (e_max_ < 0 || m_ < 0 || n_ < 0) throw std::invalid_argument("StateSpace: negative dimension");
    size_ = std::size_t(e_max_ + 1) * std::size_t(m_ + 1) * std::size_t(n_ + 1);
}

bool StateSpace::contains(const SystemState& x) const {
    return x.battery >= 0 && x.battery <= e_max_ && x.request >= 0 && x.request <= m_ &&
           x.pushed >= 0 && x.pushed <= n_;
}

std::size_t StateSpace::index(const SystemState& x) const {
    if (!contains(x)) throw std::out_of_range("state outside the state space");
    return (std::size_t(x.battery) * std::size_t(m_ + 1) + std::size_t(x.request)) * std::size_t(n_ + 1) +
           std::size_t(x.pushed);
}

SystemState StateSpace::state(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("state index " + std::to_string(i) + " >= " + std::to_string(size_));
    SystemState x;
    x.pushed = static_cast<int>(i % std::size_t(n_ + 1));
    i /= std::size_t(n_ + 1);
    x.request = static_cast<int>(i % std::size_t(m_ + 1));
    x.battery = static_cast<int>(i / std::size_t(m_ + 1));
    return x;
}

std::vector<double> zipf_pmf(int num_contents, double skew) {
    std::vector<double> f(static_cast<std::size_t>(std::max(num_contents, 0)));
    double norm = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = std::pow(double(i + 1), -skew);
        norm += f[i];
    }
    for (double& fi : f) fi /= norm;
    return f;
}

double cumulative_popularity(std::span<const double> popularity, int pushed) {
    if (pushed < 0 || std::size_t(pushed) > popularity.size())
        throw std::out_of_range("pushed count outside [0, N]");
    if (!popularity.empty() && std::size_t(pushed) == popularity.size()) return 1.0;
    double sum = 0.0;
    for (int i = 0; i < pushed; ++i) sum += popularity[std::size_t(i)];
    return sum;
}

std::vector<double> cumulative_table(std::span<const double> popularity) {
    std::vector<double> table(popularity.size() + 1, 0.0);
    for (std::size_t c = 1; c <= popularity.size(); ++c) table[c] = table[c - 1] + popularity[c - 1];
    if (!popularity.empty()) table.back() = 1.0;
    return table;
}

double required_power(double distance_m, const RadioParams& radio) {
    return snr_target(radio) * radio.noise_interference_w * std::pow(distance_m, radio.pathloss_exp) /
           radio.pathloss_const;
}

Calibration calibrate_radio(const SystemParams& params, const RadioParams& radio, CalibrationMode mode) {
    radio.validate();
    if (params.num_rings < 1) throw std::invalid_argument("m_rings: must be >= 1");
    if (params.period_length_s <= 0.0) throw std::invalid_argument("t_p_s: must be > 0");

    Calibration out;
    out.radio = radio;
    const double radius = radio.cell_radius_m;
    const double snr = snr_target(radio);
    if (!(snr > 0.0) || !std::isfinite(snr)) throw std::domain_error("target SNR is not positive and finite");

    if (mode == CalibrationMode::NoiseFromEdgePower) {
        out.radio.noise_interference_w =
            radio.edge_power_w * radio.pathloss_const / (snr * std::pow(radius, radio.pathloss_exp));
    } else {
        out.radio.edge_power_w = required_power(radius, radio);
    }

    const int m = params.num_rings;
    out.energy_unit_j = out.radio.edge_power_w * params.period_length_s / m;

    DistanceGrid& grid = out.grid;
    grid.distances.assign(std::size_t(m) + 1, 0.0);
    grid.unicast_costs.assign(std::size_t(m) + 1, 0);
    grid.ring_probs.assign(std::size_t(m) + 1, 0.0);

    // Invert required_power(d) * T_p = i * E_unit for each ring boundary.
    const double gain_over_noise = out.radio.pathloss_const / (snr * out.radio.noise_interference_w);
    for (int i = 1; i <= m; ++i) {
        const double power = i * out.energy_unit_j / params.period_length_s;
        double d = std::pow(power * gain_over_noise, 1.0 / out.radio.pathloss_exp);
        if (!std::isfinite(d) || d <= 0.0 || d > radius * (1.0 + 1e-9))
            throw std::domain_error("no ring distance in (0, R] for energy level " + std::to_string(i));
        if (i == m) d = radius;
        grid.distances[std::size_t(i)] = d;
        grid.unicast_costs[std::size_t(i)] = i;
    }
    for (int i = 1; i <= m; ++i) {
        const double outer = grid.distances[std::size_t(i)];
        const double inner = grid.distances[std::size_t(i - 1)];
        grid.ring_probs[std::size_t(i)] = (outer * outer - inner * inner) / (radius * radius);
    }
    return out;
}

int battery_update(int battery, int spent, int arrived, int battery_levels) {
    if (spent > battery) throw std::invalid_argument("energy spent exceeds battery content");
    if (spent < 0 || arrived < 0) throw std::invalid_argument("negative energy flow");
    return std::min(battery_levels, battery - spent + arrived);
}

int energy_cost(const SystemState& x, Action u, const DistanceGrid& grid) {
    switch (u) {
        case Action::Sleep: return 0;
        case Action::Unicast: return grid.unicast_costs.at(std::size_t(x.request));
        case Action::Push: return grid.push_cost();
    }
    return 0;
}

ActionSet feasible_actions(const SystemState& x, const DistanceGrid& grid, const SystemParams& params) {
    ActionSet set = ActionSet::of(Action::Sleep);
    if (x.request >= 1 && grid.unicast_costs.at(std::size_t(x.request)) <= x.battery) set.insert(Action::Unicast);
    if (grid.push_cost() <= x.battery && x.pushed < params.num_contents) set.insert(Action::Push);
    return set;
}

Model make_model(SystemParams params, RadioParams radio, CalibrationMode mode) {
    Calibration cal = calibrate_radio(params, radio, mode);
    params.energy_unit_j = cal.energy_unit_j;
    params.validate();

    Model model;
    model.params = params;
    model.radio = cal.radio;
    model.grid = std::move(cal.grid);
    model.popularity = zipf_pmf(params);
    model.cumulative = cumulative_table(model.popularity);
    return model;
}

}  // namespace ehpush
