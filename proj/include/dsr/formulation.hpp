#pragma once

// Translates a coupled network + scenario + stage state into the integrated
// restoration MILP. Each constraint family is a separately testable builder;
// rows carry their equation tag so the census can be asserted per family.
//
// Families and tags:
//   DOC  eq1, eq6..eq12, eq14   (eq2..eq5 and eq13 are variable bounds)
//   DCC  eq15..eq20             (commodity flow + radiality)
//   DFC  eq23..eq26             (eq21/eq22/eq27 are variable bounds; the
//                                structural zeros of eq25 are bounds too)
//   BDC  eq28, eq30, eq32       (eq29/eq31/eq33 are variable bounds)
//   LCC  eq35 (or eq34)         (line control vs terminal communication)

#include "dsr/milp.hpp"
#include "dsr/netmodel.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dsr {

// Mutable restoration state carried between cyclic stages. Line states are
// the raw switch positions; load_state latches loads already picked up.
struct StageState {
    std::map<std::string, int> line_state;
    std::map<std::string, int> load_state;
    int stage_index = 1;

    static StageState initial(const CoupledNetwork& net, const Scenario& sc);
};

struct FormulationConfig {
    double epsilon = 0.0;       // delay-penalty weight; 0 = derive by dominance rule
    double delta = 0.05;        // voltage tolerance band
    double v_ref = 12.66;       // reference voltage V_a (source buses)
    double big_m_voltage = 0.0; // 0 = derive (2*delta*Va + max line drop / Va)
    double big_m_commodity = 0.0; // 0 = number of buses
    bool enforce_load_switch_comm = false;
    bool require_both_ends_observed_to_close = true;
    double gap = 1e-4;          // MILP relative gap, carried to the solver
};

// Initial line states after normalization:
//  - a line that is recorded closed but has a failed element is treated as
//    open (it is isolated before any planning step); non-controllable lines
//    in that situation are additionally flagged for manual isolation
//  - closed lines lying in components without any source bus are treated as
//    open (a de-energized switch position carries no power and would
//    otherwise break the radiality census)
struct EffectiveInitial {
    std::map<std::string, int> state;
    std::vector<std::string> manual_isolation;
};

EffectiveInitial effective_line_states(const CoupledNetwork& net, const Scenario& sc,
                                       const std::map<std::string, int>& raw_state);

// Variable registry filled by the builders; planners and the verifier pull
// solution values through these ids instead of parsing names.
struct FormulationHandles {
    std::map<std::string, VarId> line_closed;  // b_k
    std::map<std::string, VarId> load_served;  // b_i^Load
    std::map<std::string, VarId> source_p;     // p_i^G
    std::map<std::string, VarId> source_q;     // q_i^G
    std::map<std::string, VarId> line_p;       // p_k^L
    std::map<std::string, VarId> line_q;       // q_k^L
    std::map<std::string, VarId> bus_v;        // v_i
    std::map<std::string, VarId> flow_line;    // f_k^L
    std::map<std::string, VarId> flow_bus;     // f_i^N
    std::map<std::string, VarId> flow_source;  // f_i^S
    std::map<std::string, VarId> comm_state;   // s_m, keyed by terminal node id
    std::map<std::string, std::map<std::string, VarId>> route_node; // h_i^m [terminal][node]
    std::map<std::string, std::map<std::string, VarId>> route_link; // h_i^l [terminal][link]
    std::map<std::string, VarId> node_bw;      // d_m^N
    std::map<std::string, VarId> link_bw;      // d_l^L
    std::map<std::string, VarId> delay;        // e_i, keyed by terminal node id
    std::optional<EffectiveInitial> effective; // normalized initial line states
    double epsilon_used = 0.0;
};

// Individual equation-family builders; build_integrated composes them. Every
// builder may be called on its own as long as the variables it references
// exist (they create what they own).
void build_doc(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h);
void build_dcc(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h);
void build_dfc(const CoupledNetwork& net, const Scenario& sc,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h);
void build_bdc(const CoupledNetwork& net, const Scenario& sc,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h);

// When `frozen_comm` is non-null the communication-state terms are constants
// from that map (keyed by terminal node id) instead of model variables; a
// line end without a terminal always contributes the constant 1.
void build_lcc(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h,
               const std::map<std::string, int>* frozen_comm = nullptr);

// Maximize restored weighted load minus the epsilon-scaled delay sum. Throws
// std::invalid_argument when a user-supplied epsilon breaks the dominance
// rule (the delay term could flip a load decision).
void build_objective(const CoupledNetwork& net, const FormulationConfig& cfg,
                     MilpModel& model, FormulationHandles& h);

struct BuildOptions {
    bool include_power = true;  // DOC + DCC + LCC
    bool include_comm = true;   // DFC + BDC
    const std::map<std::string, int>* frozen_comm = nullptr;
    // max sum(s) - eps*sum(e) instead of the load objective (comm-only runs)
    bool comm_recovery_objective = false;
};

struct FormulationResult {
    MilpModel model;
    FormulationHandles handles;
};

FormulationResult build_integrated(const CoupledNetwork& net, const Scenario& sc,
                                   const StageState& stage, const FormulationConfig& cfg,
                                   const BuildOptions& opts = {});

// Post-solve cleanup: snaps integral variables and recomputes the variables
// that are pure definitions of them (e, d, p^G, q^G, f^S) so downstream
// consumers see exactly consistent values.
void polish_solution(const MilpModel& model, const FormulationHandles& h,
                     std::vector<double>& assignment);

// Delay-dominant epsilon for a load objective with minimum positive weighted
// load `min_load_value` over `n_flows` terminals with delay caps <= max_tau.
double dominance_epsilon(double min_load_value, int n_flows, double max_tau);

// The epsilon build_objective will use for this network and config (the
// configured value, or the auto-derived dominance value when unset). The
// oracle applies the same epsilon so delay tie-breaks agree.
double objective_epsilon(const CoupledNetwork& net, const FormulationConfig& cfg);

} // namespace dsr
