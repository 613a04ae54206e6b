#include "ehpush/io.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string_view>

namespace ehpush {

namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, int lineno) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("solution line " + std::to_string(lineno) + ": bad number '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

void write_solution(std::ostream& os, const StateSpace& space, const PolicyTable& policy, const ValueSolution& values,
                    const std::vector<double>& trace, const std::vector<std::string>& header) {
    if (policy.size() != space.size() || values.bias.size() != space.size())
        throw std::invalid_argument("solution does not match state space");
    for (const auto& line : header) os << "# " << line << '\n';
    os << "# lambda = " << fmt(values.gain) << '\n';
    os << "# ref_state = " << values.ref_state << '\n';
    os << "E,Q,C,action,h\n";
    for (std::size_t s = 0; s < space.size(); ++s) {
        const SystemState x = space.state(s);
        os << x.battery << ',' << x.request << ',' << x.pushed << ',' << action_index(policy[s]) << ','
           << fmt(values.bias[s]) << '\n';
    }
    for (std::size_t j = 0; j < trace.size(); ++j) os << "# trace " << j + 1 << ' ' << fmt(trace[j]) << '\n';
}

SolutionFile read_solution(std::istream& is, const StateSpace& space) {
    SolutionFile out;
    out.policy = PolicyTable(space.size());
    out.values.bias.assign(space.size(), 0.0);
    std::vector<bool> seen(space.size(), false);
    bool have_gain = false;

    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view view = line;
        if (view.empty()) continue;
        if (view.front() == '#') {
            view.remove_prefix(1);
            if (view.starts_with(" lambda = ")) {
                out.values.gain = parse_double(view.substr(10), lineno);
                have_gain = true;
            } else if (view.starts_with(" ref_state = ")) {
                out.values.ref_state = static_cast<std::size_t>(parse_double(view.substr(13), lineno));
            } else if (view.starts_with(" trace ")) {
                const auto parts = split(view.substr(7), ' ');
                if (parts.size() != 2) throw std::runtime_error("solution line " + std::to_string(lineno) + ": bad trace");
                out.trace.push_back(parse_double(parts[1], lineno));
            }
            continue;
        }
        if (view.starts_with("E,")) continue;
        const auto fields = split(view, ',');
        if (fields.size() != 5)
            throw std::runtime_error("solution line " + std::to_string(lineno) + ": expected 5 fields");
        SystemState x{static_cast<int>(parse_double(fields[0], lineno)), static_cast<int>(parse_double(fields[1], lineno)),
                      static_cast<int>(parse_double(fields[2], lineno))};
        if (!space.contains(x)) throw std::runtime_error("solution line " + std::to_string(lineno) + ": state out of range");
        const std::size_t s = space.index(x);
        const double code = parse_double(fields[3], lineno);
        if (code != 0.0 && code != 1.0 && code != 2.0)
            throw std::runtime_error("solution line " + std::to_string(lineno) + ": bad action code");
        out.policy[s] = static_cast<Action>(int(code));
        out.values.bias[s] = parse_double(fields[4], lineno);
        seen[s] = true;
    }
    if (!have_gain) throw std::runtime_error("solution file has no lambda line");
    for (std::size_t s = 0; s < seen.size(); ++s)
        if (!seen[s]) throw std::runtime_error("solution file is missing state " + std::to_string(s));
    if (out.values.ref_state >= space.size()) throw std::runtime_error("solution ref_state out of range");
    return out;
}

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "policy,p_u,p_c,a_bar,ratio,se,K,seed,lambda\n";
    for (const auto& r : rows)
        os << to_string(r.policy) << ',' << fmt(r.request_prob) << ',' << fmt(r.replace_prob) << ','
           << fmt(r.mean_arrival) << ',' << fmt(r.ratio) << ',' << fmt(r.se) << ',' << r.periods << ',' << r.seed
           << ',' << fmt(r.gain) << '\n';
}

std::vector<ReductionRow> reduction_summary(const std::vector<SweepRow>& rows) {
    std::map<double, ReductionRow> by_pu;
    for (const auto& r : rows) {
        if (r.policy == PolicyKind::UnicastPriority) continue;
        ReductionRow& red = by_pu[r.request_prob];
        red.request_prob = r.request_prob;
        if (r.policy == PolicyKind::OptimalPush) {
            red.ratio_push = r.ratio;
            red.lambda_push = r.gain;
        } else {
            red.ratio_nonpush = r.ratio;
            red.lambda_nonpush = r.gain;
        }
    }
    std::vector<ReductionRow> out;
    for (auto& [pu, red] : by_pu) out.push_back(red);
    return out;
}

void write_reduction(std::ostream& os, const std::vector<ReductionRow>& rows) {
    os << "p_u,ratio_push,ratio_nonpush,reduction_sim,lambda_push,lambda_nonpush,reduction_solver\n";
    for (const auto& r : rows)
        os << fmt(r.request_prob) << ',' << fmt(r.ratio_push) << ',' << fmt(r.ratio_nonpush) << ','
           << fmt(r.simulated_reduction()) << ',' << fmt(r.lambda_push) << ',' << fmt(r.lambda_nonpush) << ','
           << fmt(r.solver_reduction()) << '\n';
}

}  // namespace ehpush
