#include "dsr/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace dsr {

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::olr: return "olr";
        case Algorithm::sclr: return "sclr";
        case Algorithm::iclr: return "iclr";
    }
    return "unknown";
}

namespace {

int flag(const std::map<std::string, int>& m, const std::string& id, int dflt = 1) {
    auto it = m.find(id);
    return it == m.end() ? dflt : it->second;
}

double now_ms() {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

struct SolvedStage {
    Solution solution;
    FormulationResult built;
    double wall_ms = 0.0;
};

// Min-delay route within the remaining element capacities; empty when the
// terminal cannot reach the center. Terminals never relay.
struct GreedyRoute {
    std::vector<std::string> nodes, links;
    double delay = 0.0;
    bool found = false;
};

GreedyRoute capacity_route(const CoupledNetwork& net, const Scenario& sc,
                           const CommNode& term,
                           const std::map<std::string, double>& node_rem,
                           const std::map<std::string, double>& link_rem) {
    const auto& cm = net.comm;
    GreedyRoute out;
    int center = cm.center_index();
    if (center < 0) return out;
    const std::string center_id = cm.nodes()[static_cast<size_t>(center)].id;
    if (!flag(sc.node_ok, term.id, 1) || node_rem.at(term.id) < term.required_bandwidth - 1e-9)
        return out;

    std::map<std::string, double> dist;
    std::map<std::string, std::pair<std::string, std::string>> from;
    using Entry = std::pair<double, std::string>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
    dist[term.id] = 0.0;
    pq.push({0.0, term.id});
    while (!pq.empty()) {
        auto [d, cur] = pq.top();
        pq.pop();
        if (d > dist.at(cur) + 1e-15) continue;
        if (cur == center_id) break;
        int ci = cm.node_index(cur);
        if (cur != term.id && cm.nodes()[static_cast<size_t>(ci)].kind == CommKind::terminal)
            continue;
        for (int li : cm.incident_link_indices(ci)) {
            const CommLink& l = cm.links()[static_cast<size_t>(li)];
            if (!flag(sc.link_ok, l.id, 1) ||
                link_rem.at(l.id) < term.required_bandwidth - 1e-9)
                continue;
            const std::string& other = l.end_a == cur ? l.end_b : l.end_a;
            if (!flag(sc.node_ok, other, 1)) continue;
            const CommNode& on = cm.nodes()[static_cast<size_t>(cm.node_index(other))];
            if (on.kind == CommKind::terminal) continue;
            if (node_rem.at(other) < term.required_bandwidth - 1e-9) continue;
            double nd = d + l.prop_delay + on.forward_delay;
            if (nd > term.delay_cap + 1e-12) continue;
            auto it = dist.find(other);
            if (it == dist.end() || nd < it->second - 1e-15) {
                dist[other] = nd;
                from[other] = {cur, l.id};
                pq.push({nd, other});
            }
        }
    }
    if (!dist.count(center_id)) return out;
    out.found = true;
    out.delay = dist.at(center_id);
    std::string cur = center_id;
    out.nodes.push_back(cur);
    while (cur != term.id) {
        auto [par, link] = from.at(cur);
        out.links.push_back(link);
        out.nodes.push_back(par);
        cur = par;
    }
    return out;
}

// Greedy feasible restoration used to prime the solver: route every
// routable terminal, extend the initial forest with every admissible
// closing, serve loads greedily, then derive every dependent variable.
// Returns an empty vector when no consistent assignment was constructed.
std::vector<double> warm_start_assignment(const CoupledNetwork& net, const Scenario& sc,
                                          const StageState& state, const FormulationConfig& cfg,
                                          const FormulationResult& built,
                                          const std::map<std::string, int>* frozen) {
    const auto& h = built.handles;
    const auto& pw = net.power;
    const auto& cm = net.comm;
    std::vector<double> x(built.model.vars().size(), 0.0);
    for (size_t j = 0; j < x.size(); ++j) {
        const Var& v = built.model.vars()[j];
        x[j] = std::min(std::max(0.0, v.lb), v.ub);
    }
    auto set_var = [&](VarId v, double value) { x[static_cast<size_t>(v.index)] = value; };

    // Communication: greedy min-delay routing under the caps.
    std::map<std::string, int> s_map;
    if (!h.comm_state.empty()) {
        std::map<std::string, double> node_rem, link_rem;
        for (const auto& n : cm.nodes()) node_rem[n.id] = n.bandwidth_cap;
        for (const auto& l : cm.links()) link_rem[l.id] = l.bandwidth_cap;
        for (int ti : cm.terminal_indices()) {
            const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
            GreedyRoute route = capacity_route(net, sc, term, node_rem, link_rem);
            s_map[term.id] = route.found ? 1 : 0;
            if (!route.found) continue;
            set_var(h.comm_state.at(term.id), 1.0);
            for (const auto& id : route.nodes) {
                set_var(h.route_node.at(term.id).at(id), 1.0);
                node_rem[id] -= term.required_bandwidth;
            }
            for (const auto& id : route.links) {
                set_var(h.route_link.at(term.id).at(id), 1.0);
                link_rem[id] -= term.required_bandwidth;
            }
            if (h.delay.count(term.id)) set_var(h.delay.at(term.id), route.delay);
        }
        for (const auto& [id, var] : h.node_bw) {
            const CommNode& n = cm.node(id);
            set_var(var, n.bandwidth_cap - node_rem.at(id));
        }
        for (const auto& [id, var] : h.link_bw) {
            const CommLink& l = cm.link(id);
            set_var(var, l.bandwidth_cap - link_rem.at(id));
        }
    } else if (frozen) {
        s_map = *frozen;
    }

    if (h.line_closed.empty()) return x; // comm-only model

    // Power: close every admissible line that extends a radial island.
    auto s_of_bus = [&](const std::string& bus_id) -> int {
        int ti = cm.terminal_for_bus(bus_id);
        if (ti < 0) return 1;
        auto it = s_map.find(cm.nodes()[static_cast<size_t>(ti)].id);
        return it == s_map.end() ? 0 : it->second;
    };
    std::map<std::string, int> line_state = h.effective->state;
    std::vector<int> parent(pw.buses().size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] =
                parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    };
    std::vector<char> sourced(pw.buses().size(), 0);
    for (size_t i = 0; i < pw.buses().size(); ++i)
        if (pw.buses()[i].has_source) sourced[i] = 1;
    auto root_sourced = [&](int a) { return sourced[static_cast<size_t>(find(a))] != 0; };
    for (const auto& l : pw.lines())
        if (line_state.at(l.id)) {
            int a = find(pw.bus_index(l.from_bus)), b = find(pw.bus_index(l.to_bus));
            if (a == b) return {}; // cyclic initial state: no warm start
            bool s = sourced[static_cast<size_t>(a)] || sourced[static_cast<size_t>(b)];
            if (sourced[static_cast<size_t>(a)] && sourced[static_cast<size_t>(b)]) return {};
            parent[static_cast<size_t>(a)] = b;
            sourced[static_cast<size_t>(find(b))] = s ? 1 : 0;
        }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& l : pw.lines()) {
            if (line_state.at(l.id) || !l.controllable()) continue;
            if (!flag(sc.line_ok, l.id, 1) || !flag(sc.bus_ok, l.from_bus, 1) ||
                !flag(sc.bus_ok, l.to_bus, 1))
                continue;
            int si = s_of_bus(l.from_bus), sj = s_of_bus(l.to_bus);
            bool closable = cfg.require_both_ends_observed_to_close
                                ? (si + sj >= 2)
                                : ((l.switch_at_from ? si : 0) + (l.switch_at_to ? sj : 0) >= 1);
            if (!closable) continue;
            int a = find(pw.bus_index(l.from_bus)), b = find(pw.bus_index(l.to_bus));
            if (a == b) continue;
            if (root_sourced(a) && root_sourced(b)) continue;
            bool s = root_sourced(a) || root_sourced(b);
            parent[static_cast<size_t>(a)] = b;
            sourced[static_cast<size_t>(find(b))] = s ? 1 : 0;
            line_state[l.id] = 1;
            changed = true;
        }
    }
    for (const auto& [id, var] : h.line_closed) set_var(var, line_state.at(id));

    // Loads: forced values first, then greedy pickups checked by the
    // power verifier.
    std::set<std::string> comp_energized;
    {
        std::map<int, int> comp_lines;
        for (const auto& l : pw.lines())
            if (line_state.at(l.id)) comp_lines[find(pw.bus_index(l.from_bus))]++;
        for (size_t i = 0; i < pw.buses().size(); ++i) {
            int root = find(static_cast<int>(i));
            if (comp_lines.count(root) && sourced[static_cast<size_t>(root)])
                comp_energized.insert(pw.buses()[i].id);
        }
    }
    std::map<std::string, int> load_state;
    std::vector<const Bus*> candidates;
    for (const auto& b : pw.buses()) {
        bool latched = flag(state.load_state, b.id, 0) == 1;
        bool in_comp = comp_energized.count(b.id) > 0;
        bool island_source = b.has_source && !in_comp;
        bool comm_gate =
            !cfg.enforce_load_switch_comm || !b.has_load_switch || latched || s_of_bus(b.id) == 1;
        if (latched) {
            if (!in_comp && !island_source) return {}; // latched load lost its supply
            load_state[b.id] = 1;
        } else if (!b.has_load_switch) {
            load_state[b.id] = in_comp ? 1 : 0;
            if (island_source && b.p_load > 0) load_state[b.id] = 0; // conservative
        } else if ((in_comp || island_source) && comm_gate) {
            load_state[b.id] = 0;
            candidates.push_back(&b);
        } else {
            load_state[b.id] = 0;
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Bus* a, const Bus* b) {
        double va = a->p_load * a->load_weight, vb = b->p_load * b->load_weight;
        if (va != vb) return va > vb;
        return a->id < b->id;
    });
    PowerState ps = verify_power(net, sc, line_state, load_state, cfg);
    if (!ps.ok()) return {};
    for (const Bus* b : candidates) {
        load_state[b->id] = 1;
        PowerState trial = verify_power(net, sc, line_state, load_state, cfg);
        if (trial.ok())
            ps = std::move(trial);
        else
            load_state[b->id] = 0;
    }
    for (const auto& [id, var] : h.load_served) set_var(var, load_state.at(id));

    // Dependent power variables: flows and voltages from the verifier state,
    // commodity flows from the per-component unit demands.
    for (const auto& [id, var] : h.line_p)
        set_var(var, ps.line_p.count(id) ? ps.line_p.at(id) : 0.0);
    for (const auto& [id, var] : h.line_q)
        set_var(var, ps.line_q.count(id) ? ps.line_q.at(id) : 0.0);
    for (const auto& [id, var] : h.bus_v) {
        const Bus& b = pw.bus(id);
        if (ps.bus_v.count(id))
            set_var(var, ps.bus_v.at(id));
        else
            set_var(var, b.has_source ? cfg.v_ref : cfg.v_ref);
    }
    for (const auto& [id, var] : h.source_p)
        set_var(var, ps.source_p.count(id) ? ps.source_p.at(id) : 0.0);
    for (const auto& [id, var] : h.source_q)
        set_var(var, ps.source_q.count(id) ? ps.source_q.at(id) : 0.0);
    // self-supplied island sources
    for (const auto& b : pw.buses()) {
        if (b.has_source && !comp_energized.count(b.id) && load_state.at(b.id) == 1) {
            set_var(h.source_p.at(b.id), b.p_load);
            set_var(h.source_q.at(b.id), b.q_load);
        }
    }

    // Commodity: unit demand at every energized bus, accumulated up the tree.
    std::map<std::string, int> f_bus;
    for (const auto& b : pw.buses())
        f_bus[b.id] = (ps.energized.count(b.id) || load_state.at(b.id)) ? 1 : 0;
    for (const auto& [id, var] : h.flow_bus) set_var(var, f_bus.at(id));
    std::map<std::string, double> f_line;
    {
        std::map<int, std::vector<std::pair<int, int>>> adj;
        for (size_t k = 0; k < pw.lines().size(); ++k) {
            const Line& l = pw.lines()[k];
            if (!line_state.at(l.id)) continue;
            adj[pw.bus_index(l.from_bus)].push_back({static_cast<int>(k), +1});
            adj[pw.bus_index(l.to_bus)].push_back({static_cast<int>(k), -1});
        }
        std::set<int> visited;
        for (size_t i = 0; i < pw.buses().size(); ++i) {
            if (!pw.buses()[i].has_source || visited.count(static_cast<int>(i))) continue;
            std::vector<int> order;
            std::vector<std::pair<int, int>> tree_edge(pw.buses().size(), {-1, 0});
            std::vector<int> tree_parent(pw.buses().size(), -1);
            std::vector<int> stack{static_cast<int>(i)};
            visited.insert(static_cast<int>(i));
            while (!stack.empty()) {
                int cur = stack.back();
                stack.pop_back();
                order.push_back(cur);
                if (!adj.count(cur)) continue;
                for (const auto& [k, mu] : adj.at(cur)) {
                    const Line& l = pw.lines()[static_cast<size_t>(k)];
                    int other = pw.bus_index(mu > 0 ? l.to_bus : l.from_bus);
                    if (visited.count(other)) continue;
                    visited.insert(other);
                    tree_parent[static_cast<size_t>(other)] = cur;
                    tree_edge[static_cast<size_t>(other)] = {k, -mu};
                    stack.push_back(other);
                }
            }
            std::map<int, double> sub;
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                sub[*it] += f_bus.at(pw.buses()[static_cast<size_t>(*it)].id);
                int par = tree_parent[static_cast<size_t>(*it)];
                if (par >= 0) sub[par] += sub[*it];
            }
            for (int bi : order) {
                auto [k, mu_child] = tree_edge[static_cast<size_t>(bi)];
                if (k < 0) continue;
                f_line[pw.lines()[static_cast<size_t>(k)].id] = -mu_child * sub[bi];
            }
            if (h.flow_source.count(pw.buses()[i].id))
                set_var(h.flow_source.at(pw.buses()[i].id), sub[static_cast<int>(i)]);
        }
    }
    for (const auto& [id, var] : h.flow_line)
        set_var(var, f_line.count(id) ? f_line.at(id) : 0.0);
    // island sources supplying themselves
    for (const auto& b : pw.buses())
        if (b.has_source && !comp_energized.count(b.id) && h.flow_source.count(b.id) &&
            f_bus.at(b.id) == 1 && x[static_cast<size_t>(h.flow_source.at(b.id).index)] == 0.0)
            set_var(h.flow_source.at(b.id), 1.0);

    return x;
}

SolvedStage solve_stage(const CoupledNetwork& net, const Scenario& sc, const StageState& state,
                        const FormulationConfig& cfg, const BuildOptions& build,
                        const SolveOptions& solver) {
    SolvedStage out;
    double t0 = now_ms();
    out.built = build_integrated(net, sc, state, cfg, build);
    SolveOptions opts = solver;
    opts.gap = cfg.gap;
    std::vector<double> warm =
        warm_start_assignment(net, sc, state, cfg, out.built, build.frozen_comm);
    if (!warm.empty() && check_solution(out.built.model, warm, 1e-7).empty())
        opts.warm_start = &warm;
    out.solution = solve(out.built.model, opts);
    if (out.solution.has_assignment())
        polish_solution(out.built.model, out.built.handles, out.solution.assignment);
    out.wall_ms = now_ms() - t0;
    return out;
}

std::map<std::string, int> extract_binary(const std::map<std::string, VarId>& vars,
                                          const std::vector<double>& x) {
    std::map<std::string, int> out;
    for (const auto& [id, v] : vars)
        out[id] = x.at(static_cast<size_t>(v.index)) > 0.5 ? 1 : 0;
    return out;
}

SolveStats stats_of(const SolvedStage& s) {
    SolveStats st;
    st.status = s.solution.status;
    st.objective = s.solution.objective_value;
    st.gap = s.solution.gap;
    st.wall_ms = s.wall_ms;
    return st;
}

// Assembles the stage record from a solved power model and recomputes every
// reported metric through the verifier path.
RestorationStage make_stage(const CoupledNetwork& net, const Scenario& sc,
                            const FormulationConfig& cfg, const SolvedStage& solved,
                            int index, const std::map<std::string, int>& prev_effective,
                            const std::map<std::string, int>& prev_load,
                            const std::map<std::string, int>& comm_states,
                            const RoutingAssignment& routing, double prev_cum_kw,
                            double prev_cum_weighted) {
    RestorationStage st;
    st.stage_index = index;
    st.routing = routing;
    st.comm_states = comm_states;
    st.stats = stats_of(solved);

    const auto& h = solved.built.handles;
    st.line_state = extract_binary(h.line_closed, solved.solution.assignment);
    st.load_state = extract_binary(h.load_served, solved.solution.assignment);

    for (const auto& [id, next] : st.line_state) {
        int prev = flag(prev_effective, id, 0);
        if (prev != next) st.line_ops.push_back({id, next == 1});
    }
    for (const auto& [id, next] : st.load_state) {
        int prev = flag(prev_load, id, 0);
        if (prev != next) st.load_ops.push_back({id, next == 1});
    }

    PowerState ps = verify_power(net, sc, st.line_state, st.load_state, cfg);
    st.energized_buses = ps.energized;
    st.cumulative_pickup_kw = ps.served_kw;
    st.cumulative_pickup_weighted = ps.served_weighted;
    st.stage_pickup_kw = ps.served_kw - prev_cum_kw;
    st.stage_pickup_weighted = ps.served_weighted - prev_cum_weighted;
    return st;
}

void finish_plan(RestorationPlan& plan, double t0_ms) {
    if (!plan.stages.empty()) {
        plan.total_pickup_kw = plan.stages.back().cumulative_pickup_kw;
        plan.total_pickup_weighted = plan.stages.back().cumulative_pickup_weighted;
    }
    plan.total_wall_ms = now_ms() - t0_ms;
}

void note_manual_isolation(const CoupledNetwork& net, const Scenario& sc,
                           const StageState& state, RestorationPlan& plan) {
    EffectiveInitial eff = effective_line_states(net, sc, state.line_state);
    for (const auto& id : eff.manual_isolation)
        plan.notes.push_back("line " + id + " requires manual isolation (damaged, closed, "
                             "non-controllable); treated as open for planning");
}

} // namespace

std::pair<double, double> baseline_served(const CoupledNetwork& net, const Scenario& sc) {
    EffectiveInitial eff = effective_line_states(net, sc, sc.line_initial);
    auto energized = energized_buses(net, eff.state, sc.load_initial);
    double kw = 0.0, weighted = 0.0;
    for (const auto& b : net.power.buses()) {
        if (flag(sc.load_initial, b.id, 0) && energized.count(b.id)) {
            kw += b.p_load;
            weighted += b.p_load * b.load_weight;
        }
    }
    return {weighted, kw};
}

std::pair<std::map<std::string, int>, RoutingAssignment>
olr_frozen_comm(const CoupledNetwork& net, const Scenario& sc) {
    const auto& cm = net.comm;
    std::map<std::string, int> states;
    RoutingAssignment routes;
    int center = cm.center_index();
    if (center < 0) return {states, routes};
    const std::string center_id = cm.nodes()[static_cast<size_t>(center)].id;

    // Min-delay route per terminal in the intact network (Dijkstra with
    // deterministic id tie-breaks); terminals never relay.
    struct Route {
        std::vector<std::string> nodes, links;
        double delay = 0.0;
        bool found = false;
    };
    auto shortest = [&](int ti) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
        std::map<std::string, double> dist;
        std::map<std::string, std::pair<std::string, std::string>> from; // node -> (parent, link)
        using Entry = std::pair<double, std::string>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
        dist[term.id] = 0.0;
        pq.push({0.0, term.id});
        while (!pq.empty()) {
            auto [d, cur] = pq.top();
            pq.pop();
            if (d > dist.at(cur) + 1e-15) continue;
            if (cur == center_id) break;
            int ci = cm.node_index(cur);
            if (cur != term.id &&
                cm.nodes()[static_cast<size_t>(ci)].kind == CommKind::terminal)
                continue;
            for (int li : cm.incident_link_indices(ci)) {
                const CommLink& l = cm.links()[static_cast<size_t>(li)];
                const std::string& other = l.end_a == cur ? l.end_b : l.end_a;
                const CommNode& on = cm.nodes()[static_cast<size_t>(cm.node_index(other))];
                if (on.kind == CommKind::terminal) continue;
                double nd = d + l.prop_delay + on.forward_delay;
                auto it = dist.find(other);
                bool better = it == dist.end() || nd < it->second - 1e-15;
                bool tie = it != dist.end() && std::abs(nd - it->second) <= 1e-15 &&
                           from.count(other) && cur < from.at(other).first;
                if (better || tie) {
                    dist[other] = nd;
                    from[other] = {cur, l.id};
                    pq.push({nd, other});
                }
            }
        }
        Route r;
        if (!dist.count(center_id) || dist.at(center_id) > term.delay_cap + 1e-12) return r;
        r.found = true;
        r.delay = dist.at(center_id);
        std::string cur = center_id;
        r.nodes.push_back(cur);
        while (cur != term.id) {
            auto [par, link] = from.at(cur);
            r.links.push_back(link);
            r.nodes.push_back(par);
            cur = par;
        }
        return r;
    };

    // Capacity vetting in terminal-id order fixes the pre-fault assignment.
    std::map<std::string, double> node_rem, link_rem;
    for (const auto& n : cm.nodes()) node_rem[n.id] = n.bandwidth_cap;
    for (const auto& l : cm.links()) link_rem[l.id] = l.bandwidth_cap;

    std::map<std::string, Route> prefault;
    for (int ti : cm.terminal_indices()) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
        Route r = shortest(ti);
        if (r.found) {
            bool fits = true;
            for (const auto& id : r.nodes)
                if (node_rem.at(id) < term.required_bandwidth - 1e-9) fits = false;
            for (const auto& id : r.links)
                if (link_rem.at(id) < term.required_bandwidth - 1e-9) fits = false;
            if (fits) {
                for (const auto& id : r.nodes) node_rem[id] -= term.required_bandwidth;
                for (const auto& id : r.links) link_rem[id] -= term.required_bandwidth;
            } else {
                r.found = false;
            }
        }
        prefault[term.id] = std::move(r);
    }

    // Survival under damage: the static route works iff every element is up.
    for (int ti : cm.terminal_indices()) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
        const Route& r = prefault.at(term.id);
        bool alive = r.found && flag(sc.node_ok, term.id);
        if (alive)
            for (const auto& id : r.nodes)
                if (!flag(sc.node_ok, id)) alive = false;
        if (alive)
            for (const auto& id : r.links)
                if (!flag(sc.link_ok, id)) alive = false;
        states[term.id] = alive ? 1 : 0;
        if (alive) {
            routes.nodes[term.id] = std::set<std::string>(r.nodes.begin(), r.nodes.end());
            routes.links[term.id] = std::set<std::string>(r.links.begin(), r.links.end());
        } else {
            routes.nodes[term.id] = {};
            routes.links[term.id] = {};
        }
    }
    return {states, routes};
}

RestorationPlan run_olr(const CoupledNetwork& net, const Scenario& sc,
                        const FormulationConfig& cfg, const PlannerOptions& opts) {
    double t0 = now_ms();
    RestorationPlan plan;
    plan.algorithm = Algorithm::olr;

    StageState state = StageState::initial(net, sc);
    note_manual_isolation(net, sc, state, plan);
    auto [frozen, routes] = olr_frozen_comm(net, sc);

    BuildOptions build;
    build.include_comm = false;
    build.frozen_comm = &frozen;
    SolvedStage solved = solve_stage(net, sc, state, cfg, build, opts.solver);
    if (solved.solution.status == SolveStatus::infeasible ||
        !solved.solution.has_assignment())
        throw std::runtime_error("olr: load-recovery model is infeasible");

    auto [base_w, base_kw] = baseline_served(net, sc);
    plan.stages.push_back(make_stage(net, sc, cfg, solved, 1,
                                     solved.built.handles.effective->state, state.load_state,
                                     frozen, routes, base_kw, base_w));
    finish_plan(plan, t0);
    return plan;
}

RestorationPlan run_sclr(const CoupledNetwork& net, const Scenario& sc,
                         const FormulationConfig& cfg, const PlannerOptions& opts) {
    double t0 = now_ms();
    RestorationPlan plan;
    plan.algorithm = Algorithm::sclr;

    StageState state = StageState::initial(net, sc);
    note_manual_isolation(net, sc, state, plan);

    // Stage A: maximize the number of communicating nodes.
    BuildOptions comm_build;
    comm_build.include_power = false;
    comm_build.comm_recovery_objective = true;
    SolvedStage comm_solved = solve_stage(net, sc, state, cfg, comm_build, opts.solver);
    if (comm_solved.solution.status == SolveStatus::infeasible ||
        !comm_solved.solution.has_assignment())
        throw std::runtime_error("sclr: communication-recovery model is infeasible");

    CommStage comm;
    comm.comm_states =
        extract_binary(comm_solved.built.handles.comm_state, comm_solved.solution.assignment);
    comm.routing = prune_cycles(
        net, routing_from_solution(comm_solved.built.handles, comm_solved.solution.assignment));
    for (const auto& [id, s] : comm.comm_states) {
        (void)id;
        comm.comm_node_count += s;
    }
    comm.stats = stats_of(comm_solved);
    plan.comm_stage = comm;

    // Stage B: load recovery with the communication states frozen.
    BuildOptions load_build;
    load_build.include_comm = false;
    load_build.frozen_comm = &plan.comm_stage->comm_states;
    SolvedStage solved = solve_stage(net, sc, state, cfg, load_build, opts.solver);
    if (solved.solution.status == SolveStatus::infeasible ||
        !solved.solution.has_assignment())
        throw std::runtime_error("sclr: load-recovery model is infeasible");

    auto [base_w, base_kw] = baseline_served(net, sc);
    plan.stages.push_back(make_stage(net, sc, cfg, solved, 1,
                                     solved.built.handles.effective->state, state.load_state,
                                     plan.comm_stage->comm_states, plan.comm_stage->routing,
                                     base_kw, base_w));
    finish_plan(plan, t0);
    return plan;
}

RestorationPlan run_iclr(const CoupledNetwork& net, const Scenario& sc,
                         const FormulationConfig& cfg, const PlannerOptions& opts) {
    if (opts.max_stages < 1) throw std::invalid_argument("max_stages must be >= 1");
    double t0 = now_ms();
    RestorationPlan plan;
    plan.algorithm = Algorithm::iclr;

    StageState state = StageState::initial(net, sc);
    note_manual_isolation(net, sc, state, plan);
    auto [cum_w, cum_kw] = baseline_served(net, sc);

    for (int index = 1; index <= opts.max_stages; ++index) {
        SolvedStage solved = solve_stage(net, sc, state, cfg, BuildOptions{}, opts.solver);
        if (solved.solution.status == SolveStatus::infeasible ||
            !solved.solution.has_assignment()) {
            if (index == 1)
                throw std::runtime_error("iclr: stage 1 model is infeasible");
            plan.notes.push_back("stage " + std::to_string(index) + " infeasible; stopping");
            break;
        }
        const auto& h = solved.built.handles;
        auto comm_states = extract_binary(h.comm_state, solved.solution.assignment);
        auto routing =
            prune_cycles(net, routing_from_solution(h, solved.solution.assignment));
        RestorationStage st =
            make_stage(net, sc, cfg, solved, index, h.effective->state, state.load_state,
                       comm_states, routing, cum_kw, cum_w);

        // Terminate once a stage stops adding load (stage 1 always recorded).
        if (index > 1 && st.stage_pickup_weighted <= 1e-9) break;
        cum_w = st.cumulative_pickup_weighted;
        cum_kw = st.cumulative_pickup_kw;
        state.line_state = st.line_state;
        state.load_state = st.load_state;
        state.stage_index = index + 1;
        plan.stages.push_back(std::move(st));
    }
    finish_plan(plan, t0);
    return plan;
}

CompareReport compare(const CoupledNetwork& net, const Scenario& sc,
                      const FormulationConfig& cfg, const PlannerOptions& opts) {
    CompareReport report;
    auto run = [&](Algorithm a) {
        CompareRow row;
        row.algorithm = a;
        try {
            switch (a) {
                case Algorithm::olr: row.plan = run_olr(net, sc, cfg, opts); break;
                case Algorithm::sclr: row.plan = run_sclr(net, sc, cfg, opts); break;
                case Algorithm::iclr: row.plan = run_iclr(net, sc, cfg, opts); break;
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    };
    run(Algorithm::olr);
    run(Algorithm::sclr);
    run(Algorithm::iclr);
    return report;
}

std::vector<Violation> verify_plan(const CoupledNetwork& net, const Scenario& sc,
                                   const FormulationConfig& cfg, const RestorationPlan& plan) {
    std::vector<Violation> out;
    StageState state = StageState::initial(net, sc);
    EffectiveInitial eff = effective_line_states(net, sc, state.line_state);
    std::map<std::string, int> prev_line = eff.state;
    std::map<std::string, int> prev_load = state.load_state;
    auto [cum_w, cum_kw] = baseline_served(net, sc);
    (void)cum_w;

    for (const auto& st : plan.stages) {
        const std::string where = "stage " + std::to_string(st.stage_index);

        // Routing validity; OLR/SCLR stages carry their frozen routes.
        RoutingReport rr = verify_routing(net, sc, st.routing);
        for (const auto& [term, verdict] : rr.terminals) {
            if (verdict.kind == TerminalVerdict::Kind::violation)
                out.push_back({verdict.reason, term, where + ": routing violation"});
            bool connected = verdict.kind == TerminalVerdict::Kind::connected;
            if (flag(st.comm_states, term, 0) == 1 && !connected)
                out.push_back({"comm-state", term, where + ": s=1 without a verified route"});
        }
        for (const auto& v : rr.element_violations)
            out.push_back({v.code, v.where, where + ": " + v.message});

        for (const auto& v :
             verify_line_ops(net, prev_line, st.line_state, st.comm_states, cfg))
            out.push_back({v.code, v.where, where + ": " + v.message});

        // Recorded ops must equal the state diff.
        std::map<std::string, int> expect_line = prev_line;
        for (const auto& op : st.line_ops) expect_line[op.line] = op.close ? 1 : 0;
        if (expect_line != st.line_state)
            out.push_back({"ops-mismatch", "", where + ": line_ops do not produce line_state"});
        std::map<std::string, int> expect_load = prev_load;
        for (const auto& op : st.load_ops) expect_load[op.bus] = op.pickup ? 1 : 0;
        if (expect_load != st.load_state)
            out.push_back({"ops-mismatch", "", where + ": load_ops do not produce load_state"});

        // Latch monotonicity.
        for (const auto& [bus, prev] : prev_load)
            if (prev == 1 && flag(st.load_state, bus, 0) == 0)
                out.push_back({"latch", bus, where + ": latched load was shed"});

        PowerState ps = verify_power(net, sc, st.line_state, st.load_state, cfg);
        for (const auto& v : ps.violations)
            out.push_back({v.code, v.where, where + ": " + v.message});

        if (ps.ok()) {
            if (ps.energized != st.energized_buses)
                out.push_back({"replay-energized", "", where + ": energized set mismatch"});
            if (std::abs(ps.served_kw - st.cumulative_pickup_kw) > 1e-6)
                out.push_back({"replay-pickup", "", where + ": cumulative pickup mismatch"});
            if (st.cumulative_pickup_kw < cum_kw - 1e-9)
                out.push_back({"monotone", "", where + ": cumulative pickup decreased"});
            cum_kw = ps.served_kw;
        }

        prev_line = st.line_state;
        prev_load = st.load_state;
    }
    return out;
}

} // namespace dsr
