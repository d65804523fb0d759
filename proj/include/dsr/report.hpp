#pragma once

// Plan and comparison-report serialization. Plans round-trip through JSON so
// `verify` can replay them; reports carry the per-algorithm metric rows
// (wall time, communicating nodes, energized buses, pickup) in both
// machine-readable and text form.

#include "dsr/planner.hpp"

#include <string>

namespace dsr {

std::string plan_to_json(const RestorationPlan& plan);
RestorationPlan plan_from_json(const std::string& text); // throws std::runtime_error

struct ReportStageRow {
    int index = 1;
    int comm_nodes = 0;
    int energized_buses = 0;
    double pickup_kw = 0.0;
    double cumulative_kw = 0.0;
    double wall_ms = 0.0;
};

struct ReportRow {
    std::string algorithm;
    bool failed = false;
    std::string error;
    double wall_ms = 0.0;
    double total_pickup_kw = 0.0;
    std::vector<ReportStageRow> stages;
};

struct Report {
    std::vector<ReportRow> rows;
};

Report report_from_compare(const CompareReport& cmp);
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);
std::string report_to_text(const Report& report);

} // namespace dsr
