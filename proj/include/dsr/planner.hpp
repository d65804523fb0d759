#pragma once

// The three restoration planners:
//   OLR  — load recovery only, communication frozen at the post-fault state
//          of the pre-fault routes (no SDN rerouting)
//   SCLR — comm recovery first (max node count), then load recovery with the
//          resulting communication states frozen
//   ICLR — the cyclic integrated algorithm: solve the full model, latch the
//          pickups, roll the switch states forward, repeat while load gains

#include "dsr/formulation.hpp"
#include "dsr/netmodel.hpp"
#include "dsr/solver.hpp"
#include "dsr/verifier.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dsr {

enum class Algorithm { olr, sclr, iclr };

const char* to_string(Algorithm a);

struct SolveStats {
    double objective = 0.0;
    double gap = 0.0;
    double wall_ms = 0.0;
    SolveStatus status = SolveStatus::infeasible;
};

struct LineOp {
    std::string line;
    bool close = false; // false = open
};

struct LoadOp {
    std::string bus;
    bool pickup = false; // false = shed
};

struct RestorationStage {
    int stage_index = 1;
    RoutingAssignment routing;              // stray cycles pruned
    std::map<std::string, int> comm_states; // s per terminal
    std::vector<LineOp> line_ops;           // vs the previous effective state
    std::vector<LoadOp> load_ops;
    std::set<std::string> energized_buses;
    double stage_pickup_kw = 0.0;
    double cumulative_pickup_kw = 0.0;
    double stage_pickup_weighted = 0.0;
    double cumulative_pickup_weighted = 0.0;
    std::map<std::string, int> line_state; // full post-stage states (replayable)
    std::map<std::string, int> load_state;
    SolveStats stats;
};

struct CommStage { // SCLR's communication-recovery step
    RoutingAssignment routing;
    std::map<std::string, int> comm_states;
    int comm_node_count = 0;
    SolveStats stats;
};

struct RestorationPlan {
    Algorithm algorithm = Algorithm::iclr;
    std::vector<RestorationStage> stages;
    std::optional<CommStage> comm_stage;
    double total_pickup_kw = 0.0;
    double total_pickup_weighted = 0.0;
    double total_wall_ms = 0.0;
    std::vector<std::string> notes; // e.g. lines needing manual isolation
};

struct PlannerOptions {
    int max_stages = 10;
    SolveOptions solver;
};

// Post-fault communication states of the pre-fault routing: each terminal's
// min-delay intact-network route (capacity-vetted, deterministic tie-breaks)
// survives iff all its elements are healthy. Returns the states and the
// surviving routes.
std::pair<std::map<std::string, int>, RoutingAssignment>
olr_frozen_comm(const CoupledNetwork& net, const Scenario& sc);

// Weighted/unweighted load served before any plan step.
std::pair<double, double> baseline_served(const CoupledNetwork& net, const Scenario& sc);

RestorationPlan run_olr(const CoupledNetwork& net, const Scenario& sc,
                        const FormulationConfig& cfg, const PlannerOptions& opts = {});
RestorationPlan run_sclr(const CoupledNetwork& net, const Scenario& sc,
                         const FormulationConfig& cfg, const PlannerOptions& opts = {});
RestorationPlan run_iclr(const CoupledNetwork& net, const Scenario& sc,
                         const FormulationConfig& cfg, const PlannerOptions& opts = {});

struct CompareRow {
    Algorithm algorithm;
    bool failed = false;
    std::string error;
    RestorationPlan plan;
};

struct CompareReport {
    std::vector<CompareRow> rows; // olr, sclr, iclr order
};

// Runs all three planners on identical inputs; a failing algorithm is
// recorded instead of aborting the comparison.
CompareReport compare(const CoupledNetwork& net, const Scenario& sc,
                      const FormulationConfig& cfg, const PlannerOptions& opts = {});

// Replays a plan stage by stage through the verifier: routing validity,
// eq35 line-operation admissibility, power feasibility, latch monotonicity,
// and exact agreement of the recorded metrics with the recomputation.
std::vector<Violation> verify_plan(const CoupledNetwork& net, const Scenario& sc,
                                   const FormulationConfig& cfg, const RestorationPlan& plan);

} // namespace dsr
