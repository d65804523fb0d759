#pragma once

// Exhaustive ground-truth solver for tiny instances: enumerates every line
// and load-switch combination, checks operation requirements against every
// routable terminal subset (capacity-accounted path search), and keeps the
// best weighted pickup with the epsilon delay tie-break. Completely
// independent of the MILP path.

#include "dsr/formulation.hpp"
#include "dsr/netmodel.hpp"
#include "dsr/verifier.hpp"

#include <map>
#include <string>

namespace dsr {

struct OracleGuards {
    int max_controllable_lines = 8;
    int max_terminals = 8;
    int max_comm_nodes = 12;
};

struct OracleResult {
    bool feasible = false;
    double pickup_weighted = 0.0; // sum of phi * P over served loads
    double pickup_kw = 0.0;
    double delay_sum = 0.0;       // min total delay among optimal routings
    double objective = 0.0;       // pickup_weighted - epsilon * delay_sum
    std::map<std::string, int> line_state;
    std::map<std::string, int> load_state;
    std::map<std::string, int> comm_states;
    RoutingAssignment routing;
};

// Throws std::invalid_argument when the instance exceeds the guards.
OracleResult oracle_solve(const CoupledNetwork& net, const Scenario& sc,
                          const StageState& stage, const FormulationConfig& cfg,
                          const OracleGuards& guards = {});

} // namespace dsr
