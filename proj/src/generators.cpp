#include "dsr/generators.hpp"

#include "dsr/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

namespace dsr {

DamageProfile damage_profile_from_string(const std::string& s) {
    if (s == "none") return DamageProfile::none;
    if (s == "light") return DamageProfile::light;
    if (s == "severe") return DamageProfile::severe;
    throw std::invalid_argument("damage profile must be none|light|severe");
}

const char* to_string(DamageProfile p) {
    switch (p) {
        case DamageProfile::none: return "none";
        case DamageProfile::light: return "light";
        case DamageProfile::severe: return "severe";
    }
    return "unknown";
}

namespace {

std::string pad2(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", v);
    return buf;
}
std::string pad3(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", v);
    return buf;
}

struct CommShape {
    int forwarders = 0;
    std::vector<int> spur_at;  // forwarder indices (0-based) linked to the center
    double terminal_delay = 0.3;
    double ring_delay = 0.6;
    double spur_delay = 0.8;
    double forward_delay = 0.4;
    double slack = 4.0;        // bandwidth headroom above the intact routing
};

// Builds the ring + spurs communication network for the given buses,
// attaching terminals to forwarders in index blocks, then sizes every cap
// from the intact min-delay routing plus the headroom.
CommNetwork make_comm(const std::vector<Bus>& buses, const CommShape& shape) {
    const int n_term = static_cast<int>(buses.size());
    const int n_fwd = shape.forwarders;

    std::vector<CommNode> nodes;
    std::vector<CommLink> links;
    nodes.push_back(CommNode{"c000", CommKind::center, 0, shape.forward_delay, "", 0, 0});
    for (int f = 0; f < n_fwd; ++f)
        nodes.push_back(CommNode{"f" + pad3(f + 1), CommKind::forwarder, 0,
                                 shape.forward_delay, "", 0, 0});
    for (int t = 0; t < n_term; ++t) {
        CommNode term;
        term.id = "t" + pad3(t + 1);
        term.kind = CommKind::terminal;
        term.attached_bus = buses[static_cast<size_t>(t)].id;
        term.bandwidth_cap = 4;
        term.forward_delay = 0.1;
        term.required_bandwidth = 2;
        term.delay_cap = 10;
        nodes.push_back(term);
    }

    for (int t = 0; t < n_term; ++t) {
        int f = (t * n_fwd) / n_term;
        links.push_back(CommLink{"ct" + pad3(t + 1), "t" + pad3(t + 1), "f" + pad3(f + 1),
                                 4, shape.terminal_delay});
    }
    for (int f = 0; f < n_fwd; ++f)
        links.push_back(CommLink{"cr" + pad3(f + 1), "f" + pad3(f + 1),
                                 "f" + pad3((f + 1) % n_fwd + 1), 0, shape.ring_delay});
    for (size_t s = 0; s < shape.spur_at.size(); ++s)
        links.push_back(CommLink{"cs" + pad3(static_cast<int>(s) + 1),
                                 "f" + pad3(shape.spur_at[s] + 1), "c000", 0,
                                 shape.spur_delay});

    // Intact min-delay routing (Dijkstra, id tie-breaks) to size the caps.
    CommNetwork probe(nodes, links);
    std::map<std::string, double> node_load, link_load;
    int center = probe.center_index();
    for (int ti : probe.terminal_indices()) {
        const CommNode& term = probe.nodes()[static_cast<size_t>(ti)];
        std::map<std::string, double> dist;
        std::map<std::string, std::pair<std::string, std::string>> from;
        using Entry = std::pair<double, std::string>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
        dist[term.id] = 0;
        pq.push({0, term.id});
        const std::string center_id = probe.nodes()[static_cast<size_t>(center)].id;
        while (!pq.empty()) {
            auto [d, cur] = pq.top();
            pq.pop();
            if (d > dist.at(cur) + 1e-15) continue;
            if (cur == center_id) break;
            int ci = probe.node_index(cur);
            if (cur != term.id &&
                probe.nodes()[static_cast<size_t>(ci)].kind == CommKind::terminal)
                continue;
            for (int li : probe.incident_link_indices(ci)) {
                const CommLink& l = probe.links()[static_cast<size_t>(li)];
                const std::string& other = l.end_a == cur ? l.end_b : l.end_a;
                const CommNode& on = probe.nodes()[static_cast<size_t>(probe.node_index(other))];
                if (on.kind == CommKind::terminal) continue;
                double nd = d + l.prop_delay + on.forward_delay;
                auto it = dist.find(other);
                if (it == dist.end() || nd < it->second - 1e-15) {
                    dist[other] = nd;
                    from[other] = {cur, l.id};
                    pq.push({nd, other});
                }
            }
        }
        node_load[term.id] += term.required_bandwidth;
        std::string cur = center_id;
        while (cur != term.id) {
            node_load[cur] += term.required_bandwidth;
            auto [par, link] = from.at(cur);
            link_load[link] += term.required_bandwidth;
            cur = par;
        }
    }

    for (auto& n : nodes) {
        if (n.kind == CommKind::terminal) continue;
        n.bandwidth_cap = node_load[n.id] + shape.slack;
    }
    for (auto& l : links) {
        if (l.id[0] == 'c' && l.id[1] == 't') continue; // terminal stubs stay at 4
        l.bandwidth_cap = link_load[l.id] + shape.slack;
    }
    return CommNetwork(nodes, links);
}

Scenario blackout_scenario(const CoupledNetwork& net) {
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

struct DamageRates {
    double line = 0, bus = 0, terminal = 0, forwarder = 0, backbone_link = 0,
           terminal_link = 0;
};

void draw_damage(const CoupledNetwork& net, Scenario& sc, std::mt19937_64& rng,
                 const DamageRates& rates) {
    auto chance = [&](double p) {
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    };
    for (const auto& b : net.power.buses())
        if (!b.has_source && chance(rates.bus)) sc.bus_ok[b.id] = 0;
    for (const auto& l : net.power.lines())
        if (chance(rates.line)) sc.line_ok[l.id] = 0;
    for (const auto& n : net.comm.nodes()) {
        if (n.kind == CommKind::terminal && chance(rates.terminal)) sc.node_ok[n.id] = 0;
        if (n.kind == CommKind::forwarder && chance(rates.forwarder)) sc.node_ok[n.id] = 0;
    }
    for (const auto& l : net.comm.links()) {
        bool terminal_stub = l.id.rfind("ct", 0) == 0;
        if (chance(terminal_stub ? rates.terminal_link : rates.backbone_link))
            sc.link_ok[l.id] = 0;
    }
}

DamageRates light_rates() {
    DamageRates r;
    r.line = 0.06;
    r.bus = 0.005;
    r.terminal = 0.02;
    r.forwarder = 0.02;
    r.backbone_link = 0.08;
    r.terminal_link = 0.02;
    return r;
}

DamageRates severe_rates() {
    DamageRates r;
    r.line = 0.18;
    r.bus = 0.03;
    r.terminal = 0.12;
    r.forwarder = 0.05;
    r.backbone_link = 0.28;
    r.terminal_link = 0.08;
    return r;
}

// Severe profile: advance the seed until the paper's qualitative ordering
// holds (OLR < SCLR < ICLR strictly, ICLR needs >= 2 stages).
GeneratedCase search_severe(const CoupledNetwork& net, const FormulationConfig& cfg,
                            unsigned long long seed, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        unsigned long long s = seed + static_cast<unsigned long long>(attempt);
        GeneratedCase out;
        out.net = net;
        out.cfg = cfg;
        out.scenario = blackout_scenario(out.net);
        std::mt19937_64 rng(s);
        draw_damage(out.net, out.scenario, rng, severe_rates());
        out.seed_used = s;
        out.search_attempts = attempt + 1;

        PlannerOptions popts;
        CompareReport rep = compare(out.net, out.scenario, cfg, popts);
        bool all_ok = true;
        for (const auto& row : rep.rows) all_ok = all_ok && !row.failed;
        if (!all_ok) continue;
        double olr = rep.rows[0].plan.total_pickup_kw;
        double sclr = rep.rows[1].plan.total_pickup_kw;
        double iclr = rep.rows[2].plan.total_pickup_kw;
        if (olr + 1e-6 < sclr && sclr + 1e-6 < iclr &&
            rep.rows[2].plan.stages.size() >= 2)
            return out;
    }
    throw std::runtime_error("severe-profile search exhausted its attempt budget");
}

GeneratedCase assemble(CoupledNetwork net, const FormulationConfig& cfg,
                       unsigned long long seed, DamageProfile profile) {
    if (profile == DamageProfile::severe) return search_severe(net, cfg, seed, 200);
    GeneratedCase out;
    out.net = std::move(net);
    out.cfg = cfg;
    out.scenario = blackout_scenario(out.net);
    out.seed_used = seed;
    if (profile == DamageProfile::light) {
        std::mt19937_64 rng(seed);
        draw_damage(out.net, out.scenario, rng, light_rates());
    }
    return out;
}

} // namespace

GeneratedCase gen_feeder33(unsigned long long seed, DamageProfile profile) {
    // Canonical 33-bus loads (kW, kvar), buses 2..33.
    static const double kLoads[32][2] = {
        {100, 60}, {90, 40},  {120, 80}, {60, 30},  {60, 20},  {200, 100}, {200, 100},
        {60, 20},  {60, 20},  {45, 30},  {60, 35},  {60, 35},  {120, 80},  {60, 10},
        {60, 20},  {60, 20},  {90, 40},  {90, 40},  {90, 40},  {90, 40},   {90, 40},
        {90, 50},  {420, 200}, {420, 200}, {60, 25}, {60, 25},  {60, 20},   {120, 70},
        {200, 600}, {150, 70}, {210, 100}, {60, 40}};
    // Canonical branch list with impedances (ohm); stored scaled to keep the
    // kW * r / kV voltage-drop arithmetic in kV.
    struct Branch {
        int from, to;
        double r, x;
    };
    static const Branch kBranches[32] = {
        {1, 2, 0.0922, 0.0470},   {2, 3, 0.4930, 0.2511},   {3, 4, 0.3660, 0.1864},
        {4, 5, 0.3811, 0.1941},   {5, 6, 0.8190, 0.7070},   {6, 7, 0.1872, 0.6188},
        {7, 8, 0.7114, 0.2351},   {8, 9, 1.0300, 0.7400},   {9, 10, 1.0440, 0.7400},
        {10, 11, 0.1966, 0.0650}, {11, 12, 0.3744, 0.1238}, {12, 13, 1.4680, 1.1550},
        {13, 14, 0.5416, 0.7129}, {14, 15, 0.5910, 0.5260}, {15, 16, 0.7463, 0.5450},
        {16, 17, 1.2890, 1.7210}, {17, 18, 0.7320, 0.5740}, {2, 19, 0.1640, 0.1565},
        {19, 20, 1.5042, 1.3554}, {20, 21, 0.4095, 0.4784}, {21, 22, 0.7089, 0.9373},
        {3, 23, 0.4512, 0.3083},  {23, 24, 0.8980, 0.7091}, {24, 25, 0.8960, 0.7011},
        {6, 26, 0.2030, 0.1034},  {26, 27, 0.2842, 0.1447}, {27, 28, 1.0590, 0.9337},
        {28, 29, 0.8042, 0.7006}, {29, 30, 0.5075, 0.2585}, {30, 31, 0.9744, 0.9630},
        {31, 32, 0.3105, 0.3619}, {32, 33, 0.3410, 0.5302}};
    static const Branch kTies[5] = {{8, 21, 2.0, 2.0},
                                    {9, 15, 2.0, 2.0},
                                    {12, 22, 2.0, 2.0},
                                    {18, 33, 0.5, 0.5},
                                    {25, 29, 0.5, 0.5}};
    const double impedance_scale = 1e-3; // ohm -> kOhm

    std::vector<Bus> buses;
    for (int i = 1; i <= 33; ++i) {
        Bus b;
        b.id = "b" + pad2(i);
        if (i >= 2) {
            b.p_load = kLoads[i - 2][0];
            b.q_load = kLoads[i - 2][1];
            b.has_load_switch = true;
        }
        if (i == 18 || i == 21 || i == 31) {
            b.has_source = true;
            b.source_p_max = i == 18 ? 1600 : i == 21 ? 1100 : 1300;
            b.source_q_max = i == 18 ? 1450 : i == 21 ? 1050 : 1300;
        }
        buses.push_back(b);
    }

    std::vector<Line> lines;
    auto add_line = [&](const std::string& id, const Branch& br, bool tie) {
        Line l;
        l.id = id;
        l.from_bus = "b" + pad2(br.from);
        l.to_bus = "b" + pad2(br.to);
        l.r = br.r * impedance_scale;
        l.x = br.x * impedance_scale;
        l.p_max = 5000;
        l.q_max = 3000;
        l.switch_at_from = true;
        l.switch_at_to = tie; // contact lines carry switches on both ends
        lines.push_back(l);
    };
    for (int i = 0; i < 32; ++i) add_line("l" + pad2(i + 1), kBranches[i], false);
    for (int i = 0; i < 5; ++i) add_line("tie" + pad2(i + 1), kTies[i], true);

    CommShape shape;
    shape.forwarders = 10;
    shape.spur_at = {0, 3, 6};

    CoupledNetwork net;
    net.power = PowerNetwork(buses, lines);
    net.comm = make_comm(buses, shape);

    FormulationConfig cfg;
    cfg.delta = 0.05;
    cfg.v_ref = 12.66;
    cfg.gap = 1e-4;
    return assemble(std::move(net), cfg, seed, profile);
}

GeneratedCase gen_feeder123(unsigned long long seed, DamageProfile profile) {
    // 123-bus topology: the canonical radial segment list over buses 1..114
    // plus the named junction/DG buses, five DGs behind normally-open ties.
    static const int kSegments[][2] = {
        {1, 2},     {1, 3},     {1, 7},     {3, 4},     {3, 5},     {5, 6},
        {7, 8},     {8, 12},    {8, 9},     {8, 13},    {9, 14},    {13, 34},
        {13, 18},   {14, 11},   {14, 10},   {15, 16},   {15, 17},   {18, 19},
        {18, 21},   {19, 20},   {21, 22},   {21, 23},   {23, 24},   {23, 25},
        {25, 26},   {25, 28},   {26, 27},   {26, 31},   {27, 33},   {28, 29},
        {29, 30},   {31, 32},   {34, 15},   {35, 36},   {35, 40},   {36, 37},
        {36, 38},   {38, 39},   {40, 41},   {40, 42},   {42, 43},   {42, 44},
        {44, 45},   {44, 47},   {45, 46},   {47, 48},   {47, 49},   {49, 50},
        {50, 51},   {52, 53},   {53, 54},   {54, 55},   {54, 57},   {55, 56},
        {57, 58},   {57, 60},   {58, 59},   {60, 61},   {60, 62},   {62, 63},
        {63, 64},   {64, 65},   {65, 66},   {67, 68},   {67, 72},   {67, 97},
        {68, 69},   {69, 70},   {70, 71},   {72, 73},   {72, 76},   {73, 74},
        {74, 75},   {76, 77},   {76, 86},   {77, 78},   {78, 79},   {78, 80},
        {80, 81},   {81, 82},   {81, 84},   {82, 83},   {84, 85},   {86, 87},
        {87, 88},   {87, 89},   {89, 90},   {89, 91},   {91, 92},   {91, 93},
        {93, 94},   {93, 95},   {95, 96},   {97, 98},   {98, 99},   {99, 100},
        {101, 102}, {101, 105}, {102, 103}, {103, 104}, {105, 106}, {105, 108},
        {106, 107}, {108, 109}, {109, 110}, {110, 111}, {110, 112}, {112, 113},
        {113, 114}, {30, 250},  {108, 300}, {100, 450}, {149, 1},
        // region connectors (the feeder's normally-closed sectionalizers)
        {18, 35},   {13, 52},   {60, 67},   {97, 101},
    };
    struct Tie {
        int from, to;
    };
    // normally-open ties; the last five park a DG behind a contact line
    static const Tie kTies[] = {{54, 94}, {95, 195}, {250, 251}, {300, 350},
                                {450, 451}, {61, 610}};
    static const int kDgBuses[] = {195, 251, 350, 451, 610};
    static const int kSpecials[] = {149, 195, 250, 251, 300, 350, 450, 451, 610};

    std::set<int> bus_nums;
    for (const auto& seg : kSegments) {
        bus_nums.insert(seg[0]);
        bus_nums.insert(seg[1]);
    }
    for (const auto& t : kTies) {
        bus_nums.insert(t.from);
        bus_nums.insert(t.to);
    }
    for (int s : kSpecials) bus_nums.insert(s);

    std::vector<Bus> buses;
    int load_cursor = 0;
    static const double kLoadMenu[][2] = {{40, 20}, {20, 10}, {0, 0},   {35, 18},
                                          {40, 20}, {75, 35}, {20, 10}, {0, 0},
                                          {40, 25}, {35, 15}};
    for (int n : bus_nums) {
        Bus b;
        b.id = "b" + pad3(n);
        bool special = std::find(std::begin(kSpecials), std::end(kSpecials), n) !=
                       std::end(kSpecials);
        if (!special && n != 1) {
            b.p_load = kLoadMenu[load_cursor % 10][0];
            b.q_load = kLoadMenu[load_cursor % 10][1];
            ++load_cursor;
            b.has_load_switch = b.p_load > 0;
        }
        if (std::find(std::begin(kDgBuses), std::end(kDgBuses), n) != std::end(kDgBuses)) {
            b.has_source = true;
            b.source_p_max = 1000;
            b.source_q_max = 700;
        }
        buses.push_back(b);
    }

    std::vector<Line> lines;
    int idx = 0;
    auto impedance = [&](int from, int to) {
        // deterministic short-segment impedance in kOhm
        int h = (from * 31 + to * 17) % 7;
        return 0.00003 + 0.00001 * h;
    };
    for (const auto& seg : kSegments) {
        Line l;
        l.id = "l" + pad3(++idx);
        l.from_bus = "b" + pad3(seg[0]);
        l.to_bus = "b" + pad3(seg[1]);
        l.r = impedance(seg[0], seg[1]);
        l.x = 0.7 * l.r;
        l.p_max = 6000;
        l.q_max = 4000;
        l.switch_at_from = true;
        lines.push_back(l);
    }
    int tie_idx = 0;
    for (const auto& t : kTies) {
        Line l;
        l.id = "tie" + pad2(++tie_idx);
        l.from_bus = "b" + pad3(t.from);
        l.to_bus = "b" + pad3(t.to);
        l.r = impedance(t.from, t.to);
        l.x = 0.7 * l.r;
        l.p_max = 6000;
        l.q_max = 4000;
        l.switch_at_from = true;
        l.switch_at_to = true;
        lines.push_back(l);
    }

    CommShape shape;
    shape.forwarders = 37;
    shape.spur_at = {0, 6, 12, 18, 24, 30};
    shape.ring_delay = 0.5;

    CoupledNetwork net;
    net.power = PowerNetwork(buses, lines);
    net.comm = make_comm(buses, shape);

    FormulationConfig cfg;
    cfg.delta = 0.05;
    cfg.v_ref = 4.16;
    cfg.gap = 1e-4;
    return assemble(std::move(net), cfg, seed, profile);
}

} // namespace dsr
