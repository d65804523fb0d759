#pragma once

// Solver-independent validation. Everything here recomputes its verdicts
// from raw switch states and routing supports; solver-reported auxiliaries
// (d, e, f, v) are never trusted. Violations reference the equation tag of
// the first failing constraint family.

#include "dsr/formulation.hpp"
#include "dsr/milp.hpp"
#include "dsr/netmodel.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace dsr {

// Per-terminal routing support: the elements with h = 1.
struct RoutingAssignment {
    std::map<std::string, std::set<std::string>> nodes; // terminal id -> node ids
    std::map<std::string, std::set<std::string>> links; // terminal id -> link ids
};

// Extracts the h supports (and nothing else) from a solved model.
RoutingAssignment routing_from_solution(const FormulationHandles& h,
                                        const std::vector<double>& assignment);

struct TerminalVerdict {
    enum class Kind { idle, connected, violation };
    Kind kind = Kind::idle;
    std::vector<std::string> path; // node ids terminal..center when connected
    double delay_ms = 0.0;         // recomputed per the h support
    std::string reason;            // failing tag ("eq21", "stray cycle", ...)
};

struct RoutingReport {
    std::map<std::string, TerminalVerdict> terminals;
    std::vector<Violation> element_violations;    // bandwidth caps (eq29/eq31)
    std::map<std::string, double> node_bw;        // recomputed d_m^N
    std::map<std::string, double> link_bw;        // recomputed d_l^L

    bool ok() const {
        if (!element_violations.empty()) return false;
        for (const auto& [id, v] : terminals)
            if (v.kind == TerminalVerdict::Kind::violation) return false;
        return true;
    }
};

RoutingReport verify_routing(const CoupledNetwork& net, const Scenario& sc,
                             const RoutingAssignment& ra);

// Strips support components that do not contain the owning terminal
// (solver incumbents at gap limit may carry stray cycles).
RoutingAssignment prune_cycles(const CoupledNetwork& net, const RoutingAssignment& ra);

// Canonical energized set for a switch configuration: buses connected to a
// source over closed lines, plus source buses serving their own load.
std::set<std::string> energized_buses(const CoupledNetwork& net,
                                      const std::map<std::string, int>& line_state,
                                      const std::map<std::string, int>& load_state);

struct PowerState {
    std::set<std::string> energized;
    std::map<std::string, double> line_p, line_q; // recomputed flows, from->to positive
    std::map<std::string, double> bus_v;          // recomputed voltages (energized buses)
    std::map<std::string, double> source_p, source_q;
    double served_kw = 0.0;
    double served_weighted = 0.0;
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

// Checks a full switch configuration: eq1 per closed line, radial one-source
// components, recomputed tree flows against caps (eq2..eq5), and recomputed
// voltages against the band (eq13). Eq. (14) holds exactly by construction
// on closed lines.
PowerState verify_power(const CoupledNetwork& net, const Scenario& sc,
                        const std::map<std::string, int>& line_state,
                        const std::map<std::string, int>& load_state,
                        const FormulationConfig& cfg);

// Line operations (prev -> next) against Eq. 35 under the given terminal
// communication states. Unmonitored ends count as observed.
std::vector<Violation> verify_line_ops(const CoupledNetwork& net,
                                       const std::map<std::string, int>& prev_state,
                                       const std::map<std::string, int>& next_state,
                                       const std::map<std::string, int>& comm_states,
                                       const FormulationConfig& cfg);

// Plain reachability terminal -> center over healthy elements; ignores
// bandwidth and delay. s = 1 in any feasible solution implies reachable.
std::map<std::string, int> reachable(const CoupledNetwork& net, const Scenario& sc);

} // namespace dsr
