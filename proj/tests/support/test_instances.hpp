#pragma once

// Hand-built instances for the spec'd examples plus a seeded random
// instance generator sized to the oracle guards. Shared by the unit suites
// and the acceptance binary.

#include "dsr/formulation.hpp"
#include "dsr/netmodel.hpp"

#include <cassert>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace dsr::testing {

inline Scenario all_ok_scenario(const CoupledNetwork& net) {
    Scenario sc;
    for (const auto& b : net.power.buses()) {
        sc.bus_ok[b.id] = 1;
        sc.load_initial[b.id] = 0;
    }
    for (const auto& l : net.power.lines()) {
        sc.line_ok[l.id] = 1;
        sc.line_initial[l.id] = 0;
    }
    for (const auto& n : net.comm.nodes()) sc.node_ok[n.id] = 1;
    for (const auto& l : net.comm.links()) sc.link_ok[l.id] = 1;
    return sc;
}

inline FormulationConfig default_cfg() {
    FormulationConfig cfg;
    cfg.delta = 0.1;
    cfg.v_ref = 12.66;
    return cfg;
}

// Source bus "s" feeding load bus "d" (100 kW / 50 kvar) over one switched
// line; both buses monitored through forwarder "f1".
inline CoupledNetwork two_bus_net() {
    CoupledNetwork net;
    net.power = PowerNetwork(
        {Bus{"s", true, 0, 0, 1, false, 500, 300},
         Bus{"d", false, 100, 50, 1, true, 0, 0}},
        {Line{"k1", "s", "d", 0.1, 0.1, 400, 300, true, false}});
    net.comm = CommNetwork(
        {CommNode{"c0", CommKind::center, 50, 0.5, "", 0, 0},
         CommNode{"f1", CommKind::forwarder, 20, 0.5, "", 0, 0},
         CommNode{"t_d", CommKind::terminal, 4, 0.1, "d", 2, 10},
         CommNode{"t_s", CommKind::terminal, 4, 0.1, "s", 2, 10}},
        {CommLink{"k_sf", "t_s", "f1", 4, 0.5},
         CommLink{"k_df", "t_d", "f1", 4, 0.5},
         CommLink{"k_fc", "f1", "c0", 10, 0.5}});
    return net;
}

// a(source) - b - c path with default-closed loads and non-switched lines;
// no terminals are required.
inline CoupledNetwork three_bus_path_net() {
    CoupledNetwork net;
    net.power = PowerNetwork(
        {Bus{"a", true, 0, 0, 1, false, 500, 300},
         Bus{"b", false, 100, 50, 1, false, 0, 0},
         Bus{"c", false, 100, 50, 1, false, 0, 0}},
        {Line{"ab", "a", "b", 0.01, 0.01, 400, 300, false, false},
         Line{"bc", "b", "c", 0.01, 0.01, 400, 300, false, false}});
    net.comm = CommNetwork({CommNode{"c0", CommKind::center, 50, 0.5, "", 0, 0}}, {});
    return net;
}

// Terminal at bus "b1" whose forwarder ring offers a short and a long route
// to the center: t - f1 - f2 - c0 or t - f1 - f4 - f3 - f2 - c0.
inline CoupledNetwork ring_comm_net() {
    CoupledNetwork net;
    net.power = PowerNetwork({Bus{"b1", true, 100, 50, 1, true, 500, 300}}, {});
    net.comm = CommNetwork(
        {CommNode{"c0", CommKind::center, 50, 0.5, "", 0, 0},
         CommNode{"f1", CommKind::forwarder, 20, 0.5, "", 0, 0},
         CommNode{"f2", CommKind::forwarder, 20, 0.5, "", 0, 0},
         CommNode{"f3", CommKind::forwarder, 20, 0.5, "", 0, 0},
         CommNode{"f4", CommKind::forwarder, 20, 0.5, "", 0, 0},
         CommNode{"t1", CommKind::terminal, 4, 0.1, "b1", 2, 10}},
        {CommLink{"L_t", "t1", "f1", 4, 0.5},
         CommLink{"L_12", "f1", "f2", 10, 0.5},
         CommLink{"L_23", "f2", "f3", 10, 0.5},
         CommLink{"L_34", "f3", "f4", 10, 0.5},
         CommLink{"L_41", "f4", "f1", 10, 0.5},
         CommLink{"L_c", "f2", "c0", 10, 0.5}});
    return net;
}

// Chain t1 - f1 - c0 with 1 ms links and 0.5 ms forwarding delays: the
// recomputed end-to-end delay is exactly 3 ms.
inline CoupledNetwork delay_chain_net() {
    CoupledNetwork net;
    net.power = PowerNetwork({Bus{"b1", true, 100, 50, 1, true, 500, 300}}, {});
    net.comm = CommNetwork(
        {CommNode{"c0", CommKind::center, 50, 0.5, "", 0, 0},
         CommNode{"f1", CommKind::forwarder, 20, 0.5, "", 0, 0},
         CommNode{"t1", CommKind::terminal, 4, 0.1, "b1", 2, 10}},
        {CommLink{"L_1", "t1", "f1", 4, 1.0}, CommLink{"L_2", "f1", "c0", 10, 1.0}});
    return net;
}

// Two-bus net with a configurable switch layout for the line-control rows.
// monitored_j controls whether the far bus carries a terminal device.
inline CoupledNetwork lcc_row_net(bool switch_i, bool switch_j, bool monitored_i,
                                  bool monitored_j) {
    CoupledNetwork net;
    // the load switch forces a terminal on a monitored bus even without a
    // line switch on its side
    net.power = PowerNetwork(
        {Bus{"i", true, 0, 0, 1, monitored_i && !switch_i, 500, 300},
         Bus{"j", false, 100, 50, 1, monitored_j && !switch_j, 0, 0}},
        {Line{"k1", "i", "j", 0.01, 0.01, 400, 300, switch_i, switch_j}});
    std::vector<CommNode> nodes{CommNode{"c0", CommKind::center, 50, 0.5, "", 0, 0}};
    std::vector<CommLink> links;
    if (monitored_i) {
        nodes.push_back(CommNode{"t_i", CommKind::terminal, 4, 0.1, "i", 2, 10});
        links.push_back(CommLink{"L_i", "t_i", "c0", 4, 0.5});
    }
    if (monitored_j) {
        nodes.push_back(CommNode{"t_j", CommKind::terminal, 4, 0.1, "j", 2, 10});
        links.push_back(CommLink{"L_j", "t_j", "c0", 4, 0.5});
    }
    net.comm = CommNetwork(nodes, links);
    return net;
}

struct RandomInstance {
    CoupledNetwork net;
    Scenario sc;
    FormulationConfig cfg;
};

// Seeded generator within the oracle guards: 3..7 buses, <= 8 lines, <= 7
// terminals, <= 12 comm nodes. Bandwidth, delay caps, source capacity, and
// equipment failures are drawn so that every constraint family binds on a
// healthy share of instances.
inline RandomInstance random_instance(unsigned long long seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    auto chance = [&](double p) {
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    };

    RandomInstance out;
    int n_buses = pick(3, 7);
    int n_sources = pick(1, 2);

    std::vector<Bus> buses;
    for (int i = 0; i < n_buses; ++i) {
        Bus b;
        b.id = "b" + std::to_string(i + 1);
        b.has_source = i < n_sources;
        b.p_load = 25.0 * pick(0, 8);
        b.q_load = b.p_load / 2.0;
        b.load_weight = 1.0;
        b.has_load_switch = b.p_load > 0 && chance(0.8);
        if (b.has_source) {
            b.source_p_max = 25.0 * pick(6, 24);
            b.source_q_max = b.source_p_max;
        }
        buses.push_back(b);
    }

    std::vector<Line> lines;
    auto add_line = [&](int a, int b) {
        Line l;
        l.id = "l" + std::to_string(lines.size() + 1);
        l.from_bus = "b" + std::to_string(a + 1);
        l.to_bus = "b" + std::to_string(b + 1);
        l.r = 0.005 * pick(1, 8);
        l.x = l.r;
        l.p_max = chance(0.2) ? 150.0 : 600.0;
        l.q_max = l.p_max;
        int sw = pick(0, 5); // 0 none, 1-2 from, 3-4 to, 5 both
        l.switch_at_from = sw == 1 || sw == 2 || sw == 5;
        l.switch_at_to = sw == 3 || sw == 4 || sw == 5;
        lines.push_back(l);
    };
    for (int i = 1; i < n_buses; ++i) add_line(pick(0, i - 1), i);
    int extra = pick(0, std::min(2, 8 - static_cast<int>(lines.size())));
    for (int e = 0; e < extra; ++e) {
        int a = pick(0, n_buses - 1), b = pick(0, n_buses - 1);
        if (a != b) add_line(a, b);
    }

    // Terminals are mandatory wherever a switch sits.
    std::set<std::string> monitored;
    for (const auto& b : buses)
        if (b.has_load_switch) monitored.insert(b.id);
    for (const auto& l : lines) {
        if (l.switch_at_from) monitored.insert(l.from_bus);
        if (l.switch_at_to) monitored.insert(l.to_bus);
    }

    int n_fwd = pick(1, 3);
    std::vector<CommNode> nodes;
    std::vector<CommLink> links;
    nodes.push_back(CommNode{"c0", CommKind::center, 10.0 * pick(1, 3), 0.5, "", 0, 0});
    for (int f = 0; f < n_fwd; ++f)
        nodes.push_back(CommNode{"f" + std::to_string(f + 1), CommKind::forwarder,
                                 2.0 * pick(2, 6), 0.25 * pick(1, 4), "", 0, 0});
    auto add_link = [&](const std::string& a, const std::string& b, double cap) {
        links.push_back(CommLink{"L" + std::to_string(links.size() + 1), a, b, cap,
                                 0.5 * pick(1, 4)});
    };
    // forwarder chain, first forwarder to center, optional ring closure
    for (int f = 1; f < n_fwd; ++f)
        add_link("f" + std::to_string(f), "f" + std::to_string(f + 1), 2.0 * pick(1, 5));
    add_link("f1", "c0", 2.0 * pick(2, 6));
    if (n_fwd > 1 && chance(0.6))
        add_link("f" + std::to_string(n_fwd), "c0", 2.0 * pick(1, 4));

    int t = 0;
    for (const auto& bus_id : monitored) {
        CommNode term;
        term.id = "t" + std::to_string(++t);
        term.kind = CommKind::terminal;
        term.attached_bus = bus_id;
        term.bandwidth_cap = 4;
        term.forward_delay = 0.1;
        term.required_bandwidth = 2;
        term.delay_cap = chance(0.3) ? 4.0 : 10.0;
        nodes.push_back(term);
        add_link(term.id, "f" + std::to_string(pick(1, n_fwd)), chance(0.15) ? 1.0 : 4.0);
    }

    out.net.power = PowerNetwork(buses, lines);
    out.net.comm = CommNetwork(nodes, links);

    out.sc = all_ok_scenario(out.net);
    for (auto& [id, ok] : out.sc.bus_ok) ok = chance(0.9) ? 1 : 0;
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].has_source) out.sc.bus_ok[buses[i].id] = 1; // keep sources alive
    for (auto& [id, ok] : out.sc.line_ok) ok = chance(0.85) ? 1 : 0;
    for (auto& [id, ok] : out.sc.link_ok) ok = chance(0.8) ? 1 : 0;
    for (auto& [id, ok] : out.sc.node_ok) {
        const CommNode& n = out.net.comm.node(id);
        if (n.kind == CommKind::center)
            ok = 1;
        else if (n.kind == CommKind::forwarder)
            ok = chance(0.9) ? 1 : 0;
        else
            ok = chance(0.85) ? 1 : 0;
    }
    // a few initially closed lines (normalization opens dead-zone ones)
    for (auto& [id, v] : out.sc.line_initial) v = chance(0.25) ? 1 : 0;

    out.cfg = default_cfg();
    return out;
}

} // namespace dsr::testing
