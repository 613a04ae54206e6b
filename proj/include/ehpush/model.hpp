#pragma once

// System model of an energy-harvesting small cell that can sleep, unicast a
// pending request, or proactively push the most popular content not yet held
// by the users. Everything here is immutable after construction.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ehpush {

struct SystemParams {
    int num_contents = 20;               // N
    double zipf_skew = 0.5;              // v
    double content_replace_prob = 0.3;   // p_c
    double request_prob = 0.7;           // p_u
    double period_length_s = 1.0;        // T_p
    int battery_levels = 15;             // E_max, in energy units
    int num_rings = 4;                   // M
    double energy_unit_j = 0.25;         // E_unit, overwritten by calibration
    double mean_arrival = 0.8;           // mean energy units harvested per period

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    double battery_capacity_j() const { return battery_levels * energy_unit_j; }
};

struct RadioParams {
    double bandwidth_hz = 1.0e6;
    double pathloss_const = 10.0;        // linear gain (10 dB)
    double pathloss_exp = 2.0;
    double noise_interference_w = 4.0e-3;
    double min_rate_bps = 1.0e6;
    double cell_radius_m = 50.0;
    double edge_power_w = 1.0;

    void validate() const;
};

/// Calibrated ring discretization of the cell. All vectors have M + 1 entries
/// and are indexed by ring number: distances[0] = 0, unicast_costs[0] = 0 and
/// ring_probs[0] = 0 are the "no request" sentinels.
struct DistanceGrid {
    std::vector<double> distances;
    std::vector<int> unicast_costs;
    std::vector<double> ring_probs;

    int num_rings() const { return static_cast<int>(distances.size()) - 1; }
    int push_cost() const { return unicast_costs.back(); }
};

enum class Action : std::uint8_t { Sleep = 0, Unicast = 1, Push = 2 };

inline constexpr std::array<Action, 3> kAllActions{Action::Sleep, Action::Unicast, Action::Push};
inline constexpr std::size_t kNumActions = kAllActions.size();

constexpr std::size_t action_index(Action u) { return static_cast<std::size_t>(u); }
std::string_view to_string(Action u);
Action parse_action(std::string_view name);

/// Small bitset over the three actions.
class ActionSet {
public:
    constexpr ActionSet() = default;
    static constexpr ActionSet all() { return ActionSet(0b111); }
    static constexpr ActionSet of(Action u) { return ActionSet(std::uint8_t(1u << action_index(u))); }

    constexpr bool contains(Action u) const { return (bits_ >> action_index(u)) & 1u; }
    constexpr void insert(Action u) { bits_ |= std::uint8_t(1u << action_index(u)); }
    constexpr void erase(Action u) { bits_ &= std::uint8_t(~(1u << action_index(u))); }
    constexpr bool empty() const { return bits_ == 0; }
    std::size_t size() const;
    constexpr ActionSet operator&(ActionSet o) const { return ActionSet(bits_ & o.bits_); }
    constexpr bool operator==(const ActionSet&) const = default;

private:
    constexpr explicit ActionSet(std::uint8_t bits) : bits_(bits) {}
    std::uint8_t bits_ = 0;
};

struct SystemState {
    int battery = 0;   // E in [0, E_max]
    int request = 0;   // Q in [0, M]; 0 means nothing the small cell must serve
    int pushed = 0;    // C in [0, N]

    bool operator==(const SystemState&) const = default;
};

/// Flat indexing of (E, Q, C) with C fastest. (0, 0, 0) maps to 0.
class StateSpace {
public:
    StateSpace(int battery_levels, int num_rings, int num_contents);
    explicit StateSpace(const SystemParams& p)
        : StateSpace(p.battery_levels, p.num_rings, p.num_contents) {}

    std::size_t size() const { return size_; }
    int battery_levels() const { return e_max_; }
    int num_rings() const { return m_; }
    int num_contents() const { return n_; }

    bool contains(const SystemState& x) const;
    /// Throws std::out_of_range for states outside the space.
    std::size_t index(const SystemState& x) const;
    /// Throws std::out_of_range for i >= size().
    SystemState state(std::size_t i) const;

private:
    int e_max_;
    int m_;
    int n_;
    std::size_t size_;
};

// Popularity

std::vector<double> zipf_pmf(int num_contents, double skew);
inline std::vector<double> zipf_pmf(const SystemParams& p) { return zipf_pmf(p.num_contents, p.zipf_skew); }

/// Probability that a request hits the C most popular contents.
double cumulative_popularity(std::span<const double> popularity, int pushed);

/// Prefix sums F(0..N) with F(0) = 0 and F(N) forced to exactly 1.
std::vector<double> cumulative_table(std::span<const double> popularity);

// Radio

/// Transmit power needed to reach `min_rate_bps` at distance d under a
/// unit-gain channel.
double required_power(double distance_m, const RadioParams& radio);

/// Which constant is solved for when pinning the edge power to M energy units.
enum class CalibrationMode {
    NoiseFromEdgePower,   // keep edge_power_w, solve noise_interference_w
    EdgePowerFromNoise,   // keep noise_interference_w, solve edge_power_w
};

struct Calibration {
    RadioParams radio;
    DistanceGrid grid;
    double energy_unit_j = 0.0;
};

/// Fixes the radio constants so that unicast to ring i costs exactly i energy
/// units, with the cell edge costing M units, and returns the ring distances.
/// Throws std::domain_error if some ring distance has no root in (0, R].
Calibration calibrate_radio(const SystemParams& params, const RadioParams& radio,
                            CalibrationMode mode = CalibrationMode::NoiseFromEdgePower);

// Dynamics

/// min(E_max, E - spent + arrived). Throws std::invalid_argument if spent > E.
int battery_update(int battery, int spent, int arrived, int battery_levels);

/// Energy units the action consumes in state x.
int energy_cost(const SystemState& x, Action u, const DistanceGrid& grid);

ActionSet feasible_actions(const SystemState& x, const DistanceGrid& grid, const SystemParams& params);

/// 1 iff a pending request is left to the macro cell.
inline int stage_cost(const SystemState& x, Action u) {
    return (x.request > 0 && u != Action::Unicast) ? 1 : 0;
}

/// Everything the kernel builder, solver and simulator need for one instance.
struct Model {
    SystemParams params;
    RadioParams radio;
    DistanceGrid grid;
    std::vector<double> popularity;
    std::vector<double> cumulative;   // F(0..N)

    StateSpace space() const { return StateSpace(params); }
    ActionSet feasible(const SystemState& x) const { return feasible_actions(x, grid, params); }
};

/// Validates, calibrates and precomputes popularity tables.
Model make_model(SystemParams params, RadioParams radio,
                 CalibrationMode mode = CalibrationMode::NoiseFromEdgePower);

}  // namespace ehpush
