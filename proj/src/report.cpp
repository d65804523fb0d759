#include "dsr/report.hpp"

#include "json.hpp" // vendored nlohmann/json

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace dsr {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

ordered routing_json(const RoutingAssignment& ra) {
    ordered out = ordered::object();
    for (const auto& [term, nodes] : ra.nodes) {
        ordered entry;
        entry["nodes"] = nodes;
        auto it = ra.links.find(term);
        entry["links"] = it == ra.links.end() ? std::set<std::string>{} : it->second;
        out[term] = std::move(entry);
    }
    return out;
}

RoutingAssignment routing_from(const json& j) {
    RoutingAssignment ra;
    for (auto it = j.begin(); it != j.end(); ++it) {
        ra.nodes[it.key()] = it.value().at("nodes").get<std::set<std::string>>();
        ra.links[it.key()] = it.value().at("links").get<std::set<std::string>>();
    }
    return ra;
}

ordered stats_json(const SolveStats& s) {
    ordered out;
    out["status"] = to_string(s.status);
    out["objective"] = s.objective;
    out["gap"] = s.gap;
    out["wall_ms"] = s.wall_ms;
    return out;
}

SolveStats stats_from(const json& j) {
    SolveStats s;
    std::string st = j.at("status").get<std::string>();
    s.status = st == "optimal" ? SolveStatus::optimal
               : st == "gap_limit" ? SolveStatus::gap_limit
               : st == "time_limit" ? SolveStatus::time_limit
                                    : SolveStatus::infeasible;
    s.objective = j.at("objective").get<double>();
    s.gap = j.at("gap").get<double>();
    s.wall_ms = j.at("wall_ms").get<double>();
    return s;
}

} // namespace

std::string plan_to_json(const RestorationPlan& plan) {
    ordered out;
    out["format"] = "dsr-plan";
    out["version"] = 1;
    out["algorithm"] = to_string(plan.algorithm);
    out["notes"] = plan.notes;
    if (plan.comm_stage) {
        ordered cs;
        cs["comm_states"] = plan.comm_stage->comm_states;
        cs["routing"] = routing_json(plan.comm_stage->routing);
        cs["comm_node_count"] = plan.comm_stage->comm_node_count;
        cs["solve"] = stats_json(plan.comm_stage->stats);
        out["comm_stage"] = std::move(cs);
    }
    ordered stages = ordered::array();
    for (const auto& st : plan.stages) {
        ordered s;
        s["index"] = st.stage_index;
        s["comm_states"] = st.comm_states;
        s["routing"] = routing_json(st.routing);
        ordered line_ops = ordered::array();
        for (const auto& op : st.line_ops)
            line_ops.push_back(ordered{{"line", op.line}, {"op", op.close ? "close" : "open"}});
        s["line_ops"] = std::move(line_ops);
        ordered load_ops = ordered::array();
        for (const auto& op : st.load_ops)
            load_ops.push_back(ordered{{"bus", op.bus}, {"op", op.pickup ? "pickup" : "shed"}});
        s["load_ops"] = std::move(load_ops);
        s["line_state"] = st.line_state;
        s["load_state"] = st.load_state;
        s["energized"] = st.energized_buses;
        s["pickup_kw"] = st.stage_pickup_kw;
        s["cumulative_kw"] = st.cumulative_pickup_kw;
        s["pickup_weighted"] = st.stage_pickup_weighted;
        s["cumulative_weighted"] = st.cumulative_pickup_weighted;
        s["solve"] = stats_json(st.stats);
        stages.push_back(std::move(s));
    }
    out["stages"] = std::move(stages);
    ordered totals;
    totals["stages"] = plan.stages.size();
    totals["pickup_kw"] = plan.total_pickup_kw;
    totals["pickup_weighted"] = plan.total_pickup_weighted;
    totals["wall_ms"] = plan.total_wall_ms;
    out["totals"] = std::move(totals);
    return out.dump(2) + "\n";
}

RestorationPlan plan_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("plan parse error: " + std::string(e.what()));
    }
    try {
        if (j.at("format").get<std::string>() != "dsr-plan")
            throw std::runtime_error("not a dsr-plan document");
        if (j.at("version").get<int>() != 1)
            throw std::runtime_error("unsupported plan version");
        RestorationPlan plan;
        std::string algo = j.at("algorithm").get<std::string>();
        plan.algorithm = algo == "olr" ? Algorithm::olr
                         : algo == "sclr" ? Algorithm::sclr
                                          : Algorithm::iclr;
        plan.notes = j.value("notes", std::vector<std::string>{});
        if (j.contains("comm_stage")) {
            CommStage cs;
            cs.comm_states =
                j["comm_stage"].at("comm_states").get<std::map<std::string, int>>();
            cs.routing = routing_from(j["comm_stage"].at("routing"));
            cs.comm_node_count = j["comm_stage"].at("comm_node_count").get<int>();
            cs.stats = stats_from(j["comm_stage"].at("solve"));
            plan.comm_stage = std::move(cs);
        }
        for (const auto& s : j.at("stages")) {
            RestorationStage st;
            st.stage_index = s.at("index").get<int>();
            st.comm_states = s.at("comm_states").get<std::map<std::string, int>>();
            st.routing = routing_from(s.at("routing"));
            for (const auto& op : s.at("line_ops"))
                st.line_ops.push_back(
                    {op.at("line").get<std::string>(), op.at("op").get<std::string>() == "close"});
            for (const auto& op : s.at("load_ops"))
                st.load_ops.push_back(
                    {op.at("bus").get<std::string>(), op.at("op").get<std::string>() == "pickup"});
            st.line_state = s.at("line_state").get<std::map<std::string, int>>();
            st.load_state = s.at("load_state").get<std::map<std::string, int>>();
            st.energized_buses = s.at("energized").get<std::set<std::string>>();
            st.stage_pickup_kw = s.at("pickup_kw").get<double>();
            st.cumulative_pickup_kw = s.at("cumulative_kw").get<double>();
            st.stage_pickup_weighted = s.at("pickup_weighted").get<double>();
            st.cumulative_pickup_weighted = s.at("cumulative_weighted").get<double>();
            st.stats = stats_from(s.at("solve"));
            plan.stages.push_back(std::move(st));
        }
        plan.total_pickup_kw = j.at("totals").at("pickup_kw").get<double>();
        plan.total_pickup_weighted = j.at("totals").at("pickup_weighted").get<double>();
        plan.total_wall_ms = j.at("totals").at("wall_ms").get<double>();
        return plan;
    } catch (const json::exception& e) {
        throw std::runtime_error("plan schema error: " + std::string(e.what()));
    }
}

Report report_from_compare(const CompareReport& cmp) {
    Report out;
    for (const auto& row : cmp.rows) {
        ReportRow r;
        r.algorithm = to_string(row.algorithm);
        r.failed = row.failed;
        r.error = row.error;
        if (!row.failed) {
            r.wall_ms = row.plan.total_wall_ms;
            r.total_pickup_kw = row.plan.total_pickup_kw;
            for (const auto& st : row.plan.stages) {
                ReportStageRow s;
                s.index = st.stage_index;
                for (const auto& [term, v] : st.comm_states) {
                    (void)term;
                    s.comm_nodes += v;
                }
                s.energized_buses = static_cast<int>(st.energized_buses.size());
                s.pickup_kw = st.stage_pickup_kw;
                s.cumulative_kw = st.cumulative_pickup_kw;
                s.wall_ms = st.stats.wall_ms;
                r.stages.push_back(s);
            }
        }
        out.rows.push_back(std::move(r));
    }
    return out;
}

std::string report_to_json(const Report& report) {
    ordered out;
    out["format"] = "dsr-report";
    out["version"] = 1;
    ordered rows = ordered::array();
    for (const auto& r : report.rows) {
        ordered jr;
        jr["algorithm"] = r.algorithm;
        jr["failed"] = r.failed;
        if (r.failed) jr["error"] = r.error;
        jr["wall_ms"] = r.wall_ms;
        jr["total_pickup_kw"] = r.total_pickup_kw;
        ordered stages = ordered::array();
        for (const auto& s : r.stages) {
            ordered js;
            js["index"] = s.index;
            js["comm_nodes"] = s.comm_nodes;
            js["energized_buses"] = s.energized_buses;
            js["pickup_kw"] = s.pickup_kw;
            js["cumulative_kw"] = s.cumulative_kw;
            js["wall_ms"] = s.wall_ms;
            stages.push_back(std::move(js));
        }
        jr["stages"] = std::move(stages);
        rows.push_back(std::move(jr));
    }
    out["algorithms"] = std::move(rows);
    return out.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
    Report out;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("report parse error: " + std::string(e.what()));
    }
    try {
        if (j.at("format").get<std::string>() != "dsr-report")
            throw std::runtime_error("not a dsr-report document");
        for (const auto& jr : j.at("algorithms")) {
            ReportRow r;
            r.algorithm = jr.at("algorithm").get<std::string>();
            r.failed = jr.at("failed").get<bool>();
            r.error = jr.value("error", "");
            r.wall_ms = jr.at("wall_ms").get<double>();
            r.total_pickup_kw = jr.at("total_pickup_kw").get<double>();
            for (const auto& js : jr.at("stages")) {
                ReportStageRow s;
                s.index = js.at("index").get<int>();
                s.comm_nodes = js.at("comm_nodes").get<int>();
                s.energized_buses = js.at("energized_buses").get<int>();
                s.pickup_kw = js.at("pickup_kw").get<double>();
                s.cumulative_kw = js.at("cumulative_kw").get<double>();
                s.wall_ms = js.at("wall_ms").get<double>();
                r.stages.push_back(s);
            }
            out.rows.push_back(std::move(r));
        }
        return out;
    } catch (const json::exception& e) {
        throw std::runtime_error("report schema error: " + std::string(e.what()));
    }
}

std::string report_to_text(const Report& report) {
    std::ostringstream out;
    char buf[256];
    out << "algorithm  stage  comm_nodes  energized  pickup_kw  cumulative_kw  wall_ms\n";
    for (const auto& r : report.rows) {
        if (r.failed) {
            std::snprintf(buf, sizeof(buf), "%-9s  failed: %s\n", r.algorithm.c_str(),
                          r.error.c_str());
            out << buf;
            continue;
        }
        for (const auto& s : r.stages) {
            std::snprintf(buf, sizeof(buf), "%-9s  %5d  %10d  %9d  %9.1f  %13.1f  %7.1f\n",
                          r.algorithm.c_str(), s.index, s.comm_nodes, s.energized_buses,
                          s.pickup_kw, s.cumulative_kw, s.wall_ms);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), "%-9s  total  %10s  %9s  %9s  %13.1f  %7.1f\n",
                      r.algorithm.c_str(), "", "", "", r.total_pickup_kw, r.wall_ms);
        out << buf;
    }
    return out.str();
}

} // namespace dsr
