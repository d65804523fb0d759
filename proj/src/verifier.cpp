#include "dsr/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>

namespace dsr {

namespace {

constexpr double kTol = 1e-6;

int flag(const std::map<std::string, int>& m, const std::string& id, int dflt = 1) {
    auto it = m.find(id);
    return it == m.end() ? dflt : it->second;
}

} // namespace

RoutingAssignment routing_from_solution(const FormulationHandles& h,
                                        const std::vector<double>& assignment) {
    RoutingAssignment ra;
    for (const auto& [term, nodes] : h.route_node) {
        auto& out = ra.nodes[term];
        for (const auto& [node, var] : nodes)
            if (assignment.at(static_cast<size_t>(var.index)) > 0.5) out.insert(node);
    }
    for (const auto& [term, links] : h.route_link) {
        auto& out = ra.links[term];
        for (const auto& [link, var] : links)
            if (assignment.at(static_cast<size_t>(var.index)) > 0.5) out.insert(link);
    }
    return ra;
}

RoutingAssignment prune_cycles(const CoupledNetwork& net, const RoutingAssignment& ra) {
    RoutingAssignment out;
    for (const auto& [term, nodes] : ra.nodes) {
        const auto links_it = ra.links.find(term);
        static const std::set<std::string> empty;
        const auto& links = links_it == ra.links.end() ? empty : links_it->second;

        auto& keep_nodes = out.nodes[term];
        auto& keep_links = out.links[term];
        if (!nodes.count(term)) continue; // support detached from its terminal
        std::deque<std::string> queue{term};
        keep_nodes.insert(term);
        while (!queue.empty()) {
            std::string cur = queue.front();
            queue.pop_front();
            if (!net.comm.has_node(cur)) continue;
            for (const CommLink* l : incident_links(net, cur)) {
                if (!links.count(l->id)) continue;
                keep_links.insert(l->id);
                const std::string& other = l->end_a == cur ? l->end_b : l->end_a;
                if (nodes.count(other) && !keep_nodes.count(other)) {
                    keep_nodes.insert(other);
                    queue.push_back(other);
                }
            }
        }
    }
    return out;
}

RoutingReport verify_routing(const CoupledNetwork& net, const Scenario& sc,
                             const RoutingAssignment& ra) {
    RoutingReport report;
    const auto& cm = net.comm;
    const int center = cm.center_index();
    const std::string center_id =
        center >= 0 ? cm.nodes()[static_cast<size_t>(center)].id : std::string();

    // Recomputed bandwidth sums over every terminal's support.
    for (const auto& n : cm.nodes()) report.node_bw[n.id] = 0.0;
    for (const auto& l : cm.links()) report.link_bw[l.id] = 0.0;

    for (int ti : cm.terminal_indices()) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
        TerminalVerdict verdict;

        static const std::set<std::string> empty;
        auto nit = ra.nodes.find(term.id);
        auto lit = ra.links.find(term.id);
        const auto& nodes = nit == ra.nodes.end() ? empty : nit->second;
        const auto& links = lit == ra.links.end() ? empty : lit->second;

        for (const auto& id : nodes)
            if (report.node_bw.count(id)) report.node_bw[id] += term.required_bandwidth;
        for (const auto& id : links)
            if (report.link_bw.count(id)) report.link_bw[id] += term.required_bandwidth;

        auto fail = [&](const std::string& reason) {
            verdict.kind = TerminalVerdict::Kind::violation;
            verdict.reason = reason;
        };

        bool s = nodes.count(center_id) > 0;

        if (nodes.empty() && links.empty()) {
            verdict.kind = TerminalVerdict::Kind::idle;
            report.terminals[term.id] = verdict;
            continue;
        }

        // eq21/eq22: only healthy elements may carry data
        bool bad = false;
        for (const auto& id : links) {
            if (!cm.has_link(id)) { fail("unknown link"); bad = true; break; }
            if (!flag(sc.link_ok, id)) { fail("eq21"); bad = true; break; }
        }
        if (!bad)
            for (const auto& id : nodes) {
                if (!cm.has_node(id)) { fail("unknown node"); bad = true; break; }
                if (!flag(sc.node_ok, id)) { fail("eq22"); bad = true; break; }
            }
        // eq25 structural zeros: no foreign terminal may relay
        if (!bad)
            for (const auto& id : nodes) {
                const CommNode& n = cm.nodes()[static_cast<size_t>(cm.node_index(id))];
                if (n.kind == CommKind::terminal && n.id != term.id) {
                    fail("eq25");
                    bad = true;
                    break;
                }
            }

        // Degree conditions over the support.
        if (!bad) {
            std::map<std::string, int> degree;
            for (const auto& id : links) {
                const CommLink& l = cm.links()[static_cast<size_t>(cm.link_index(id))];
                degree[l.end_a]++;
                degree[l.end_b]++;
            }
            for (const auto& n : cm.nodes()) {
                int deg = degree.count(n.id) ? degree[n.id] : 0;
                int hn = nodes.count(n.id) ? 1 : 0;
                if (n.kind == CommKind::center && deg != hn) { fail("eq23"); bad = true; break; }
                if (n.kind == CommKind::forwarder && deg != 2 * hn) { fail("eq24"); bad = true; break; }
                if (n.kind == CommKind::terminal) {
                    // own terminal transmits exactly its own flow: h == s,
                    // degree == s; foreign terminals carry nothing
                    int expected = (n.id == term.id) ? (s ? 1 : 0) : 0;
                    if (hn != expected || deg != expected) { fail("eq25"); bad = true; break; }
                }
            }
        }

        // Path extraction: BFS from the terminal within the support.
        if (!bad) {
            std::map<std::string, std::string> parent;
            std::set<std::string> seen{term.id};
            std::deque<std::string> queue;
            if (nodes.count(term.id)) queue.push_back(term.id);
            while (!queue.empty()) {
                std::string cur = queue.front();
                queue.pop_front();
                for (const CommLink* l : incident_links(net, cur)) {
                    if (!links.count(l->id)) continue;
                    const std::string& other = l->end_a == cur ? l->end_b : l->end_a;
                    if (!nodes.count(other) || seen.count(other)) continue;
                    seen.insert(other);
                    parent[other] = cur;
                    queue.push_back(other);
                }
            }
            size_t reached_links = 0;
            for (const auto& id : links) {
                const CommLink& l = cm.links()[static_cast<size_t>(cm.link_index(id))];
                if (seen.count(l.end_a) && seen.count(l.end_b)) ++reached_links;
            }
            if (s && !seen.count(center_id)) {
                fail("no path to center");
            } else if (seen.size() != nodes.size() || reached_links != links.size()) {
                fail("stray cycle");
            } else if (!s) {
                // support without the center but connected to the terminal:
                // a dangling chain; the degree checks exclude this already
                fail("stray cycle");
            } else {
                verdict.kind = TerminalVerdict::Kind::connected;
                std::vector<std::string> path{center_id};
                std::string cur = center_id;
                while (cur != term.id) {
                    cur = parent.at(cur);
                    path.push_back(cur);
                }
                std::reverse(path.begin(), path.end());
                verdict.path = path;
            }
        }

        // eq32/eq33: recomputed end-to-end delay over the whole support.
        if (verdict.kind != TerminalVerdict::Kind::violation) {
            double delay = 0.0;
            for (const auto& id : links)
                delay += cm.links()[static_cast<size_t>(cm.link_index(id))].prop_delay;
            for (const auto& id : nodes) {
                const CommNode& n = cm.nodes()[static_cast<size_t>(cm.node_index(id))];
                if (n.kind != CommKind::terminal) delay += n.forward_delay;
            }
            verdict.delay_ms = delay;
            if (delay > term.delay_cap + kTol) fail("eq33");
        }

        report.terminals[term.id] = verdict;
    }

    for (const auto& n : cm.nodes())
        if (report.node_bw[n.id] > n.bandwidth_cap + kTol)
            report.element_violations.push_back(
                {"eq29", n.id, "node bandwidth exceeded"});
    for (const auto& l : cm.links())
        if (report.link_bw[l.id] > l.bandwidth_cap + kTol)
            report.element_violations.push_back(
                {"eq31", l.id, "link bandwidth exceeded"});

    return report;
}

std::set<std::string> energized_buses(const CoupledNetwork& net,
                                      const std::map<std::string, int>& line_state,
                                      const std::map<std::string, int>& load_state) {
    const auto& pw = net.power;
    std::vector<int> parent(pw.buses().size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    };
    for (const auto& l : pw.lines())
        if (flag(line_state, l.id, 0))
            parent[static_cast<size_t>(find(pw.bus_index(l.from_bus)))] =
                find(pw.bus_index(l.to_bus));

    std::vector<char> root_sourced(pw.buses().size(), 0);
    std::vector<char> root_multi(pw.buses().size(), 0); // component has closed lines
    for (size_t i = 0; i < pw.buses().size(); ++i)
        if (pw.buses()[i].has_source) root_sourced[static_cast<size_t>(find(static_cast<int>(i)))] = 1;
    for (const auto& l : pw.lines())
        if (flag(line_state, l.id, 0))
            root_multi[static_cast<size_t>(find(pw.bus_index(l.from_bus)))] = 1;

    std::set<std::string> out;
    for (size_t i = 0; i < pw.buses().size(); ++i) {
        const Bus& b = pw.buses()[i];
        int root = find(static_cast<int>(i));
        bool in_sourced_component =
            root_sourced[static_cast<size_t>(root)] && root_multi[static_cast<size_t>(root)];
        bool self_served = b.has_source && b.p_load > 0 && flag(load_state, b.id, 0) == 1;
        if (in_sourced_component || self_served) out.insert(b.id);
    }
    return out;
}

PowerState verify_power(const CoupledNetwork& net, const Scenario& sc,
                        const std::map<std::string, int>& line_state,
                        const std::map<std::string, int>& load_state,
                        const FormulationConfig& cfg) {
    PowerState st;
    const auto& pw = net.power;

    // eq1: closed lines must be healthy end to end
    for (const auto& l : pw.lines()) {
        if (!flag(line_state, l.id, 0)) continue;
        if (!flag(sc.line_ok, l.id) || !flag(sc.bus_ok, l.from_bus) || !flag(sc.bus_ok, l.to_bus))
            st.violations.push_back({"eq1", l.id, "closed line with failed equipment"});
    }

    // Closed-line components.
    std::vector<int> parent(pw.buses().size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    };
    int closed_count = 0;
    for (const auto& l : pw.lines()) {
        if (!flag(line_state, l.id, 0)) continue;
        ++closed_count;
        parent[static_cast<size_t>(find(pw.bus_index(l.from_bus)))] = find(pw.bus_index(l.to_bus));
    }

    std::map<int, std::vector<int>> comp_buses;
    for (size_t i = 0; i < pw.buses().size(); ++i)
        comp_buses[find(static_cast<int>(i))].push_back(static_cast<int>(i));
    std::map<int, int> comp_lines;
    for (const auto& l : pw.lines())
        if (flag(line_state, l.id, 0)) comp_lines[find(pw.bus_index(l.from_bus))]++;

    st.energized = energized_buses(net, line_state, load_state);

    int energized_nonsource = 0;
    for (const auto& [root, buses] : comp_buses) {
        int lines = comp_lines.count(root) ? comp_lines.at(root) : 0;
        if (lines == 0) continue; // singletons handled below
        int sources = 0;
        for (int bi : buses)
            if (pw.buses()[static_cast<size_t>(bi)].has_source) ++sources;
        if (sources == 0) {
            st.violations.push_back(
                {"eq20", pw.buses()[static_cast<size_t>(buses.front())].id,
                 "closed lines in a component without a source"});
            continue;
        }
        if (sources > 1)
            st.violations.push_back({"one-DG rule",
                                     pw.buses()[static_cast<size_t>(buses.front())].id,
                                     "energized component with multiple sources"});
        if (lines != static_cast<int>(buses.size()) - 1)
            st.violations.push_back({"radiality",
                                     pw.buses()[static_cast<size_t>(buses.front())].id,
                                     "energized component is not a tree"});
    }

    // Load-switch consistency (eq17 family).
    for (const auto& b : pw.buses()) {
        int served = flag(load_state, b.id, 0);
        bool in_energized = st.energized.count(b.id) > 0;
        if (served && !in_energized)
            st.violations.push_back({"eq17", b.id, "load served at a de-energized bus"});
        if (!b.has_load_switch) {
            // Default-closed: the load follows the bus state. A source bus
            // serving only itself is the one free case.
            bool component_energized = false;
            int root = find(pw.bus_index(b.id));
            if (comp_lines.count(root) && comp_lines.at(root) > 0 && in_energized)
                component_energized = true;
            if (component_energized && !served)
                st.violations.push_back({"eq17", b.id, "default-closed load not served"});
            if (!component_energized && served && !b.has_source)
                st.violations.push_back({"eq17", b.id, "default-closed load served while dark"});
        }
    }

    // eq20 census: energized non-source buses == closed lines.
    for (const auto& id : st.energized)
        if (!pw.bus(id).has_source) ++energized_nonsource;
    if (energized_nonsource != closed_count)
        st.violations.push_back(
            {"eq20", "", "radiality census: " + std::to_string(energized_nonsource) +
                             " energized non-source buses vs " + std::to_string(closed_count) +
                             " closed lines"});

    if (!st.violations.empty()) return st;

    // Tree flows and voltages per energized component.
    std::map<int, std::vector<std::pair<int, int>>> adj; // bus -> (line idx, mu)
    for (size_t k = 0; k < pw.lines().size(); ++k) {
        const Line& l = pw.lines()[k];
        if (!flag(line_state, l.id, 0)) continue;
        adj[pw.bus_index(l.from_bus)].push_back({static_cast<int>(k), +1});
        adj[pw.bus_index(l.to_bus)].push_back({static_cast<int>(k), -1});
    }

    auto served_p = [&](const Bus& b) {
        return flag(load_state, b.id, 0) ? b.p_load : 0.0;
    };
    auto served_q = [&](const Bus& b) {
        return flag(load_state, b.id, 0) ? b.q_load : 0.0;
    };

    std::set<int> visited;
    for (size_t i = 0; i < pw.buses().size(); ++i) {
        const Bus& root_bus = pw.buses()[i];
        if (!root_bus.has_source || visited.count(static_cast<int>(i))) continue;
        if (!st.energized.count(root_bus.id)) continue;

        // DFS order from the source root.
        std::vector<int> order;
        std::vector<std::pair<int, int>> tree_edge(pw.buses().size(), {-1, 0}); // (line, mu at child)
        std::vector<int> tree_parent(pw.buses().size(), -1);
        std::deque<int> stack{static_cast<int>(i)};
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

        // Subtree sums give the flow on each tree edge.
        std::map<int, double> sub_p, sub_q;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const Bus& b = pw.buses()[static_cast<size_t>(*it)];
            sub_p[*it] += served_p(b);
            sub_q[*it] += served_q(b);
            int par = tree_parent[static_cast<size_t>(*it)];
            if (par >= 0) {
                sub_p[par] += sub_p[*it];
                sub_q[par] += sub_q[*it];
            }
        }
        for (int bi : order) {
            auto [k, mu_child] = tree_edge[static_cast<size_t>(bi)];
            if (k < 0) continue;
            const Line& l = pw.lines()[static_cast<size_t>(k)];
            // mu_child is the child's orientation sign; flow into the child
            // equals the subtree demand, so the from->to flow is -mu * sub.
            double p = -mu_child * sub_p[bi];
            double q = -mu_child * sub_q[bi];
            st.line_p[l.id] = p;
            st.line_q[l.id] = q;
            if (std::abs(p) > l.p_max + kTol)
                st.violations.push_back({"eq4", l.id, "line active-power cap exceeded"});
            if (std::abs(q) > l.q_max + kTol)
                st.violations.push_back({"eq5", l.id, "line reactive-power cap exceeded"});
        }

        double gen_p = sub_p[static_cast<int>(i)];
        double gen_q = sub_q[static_cast<int>(i)];
        st.source_p[root_bus.id] = gen_p;
        st.source_q[root_bus.id] = gen_q;
        if (gen_p > root_bus.source_p_max + kTol)
            st.violations.push_back({"eq2", root_bus.id, "source active cap exceeded"});
        if (gen_q > root_bus.source_q_max + kTol)
            st.violations.push_back({"eq3", root_bus.id, "source reactive cap exceeded"});

        // Voltages: reference at the source, exact eq14 drops downstream.
        st.bus_v[root_bus.id] = cfg.v_ref;
        double lo = (1.0 - cfg.delta) * cfg.v_ref - kTol;
        double hi = (1.0 + cfg.delta) * cfg.v_ref + kTol;
        for (int bi : order) {
            auto [k, mu_child] = tree_edge[static_cast<size_t>(bi)];
            if (k < 0) continue;
            const Line& l = pw.lines()[static_cast<size_t>(k)];
            int par = tree_parent[static_cast<size_t>(bi)];
            const std::string& par_id = pw.buses()[static_cast<size_t>(par)].id;
            const std::string& bus_id = pw.buses()[static_cast<size_t>(bi)].id;
            double drop = (st.line_p[l.id] * l.r + st.line_q[l.id] * l.x) / cfg.v_ref;
            // v_from - v_to = drop; walk from the parent side.
            if (mu_child < 0) // child is the to end
                st.bus_v[bus_id] = st.bus_v[par_id] - drop;
            else
                st.bus_v[bus_id] = st.bus_v[par_id] + drop;
            if (st.bus_v[bus_id] < lo || st.bus_v[bus_id] > hi)
                st.violations.push_back({"eq13", bus_id, "voltage outside the band"});
        }
    }

    for (const auto& b : pw.buses()) {
        if (flag(load_state, b.id, 0) && st.energized.count(b.id)) {
            st.served_kw += b.p_load;
            st.served_weighted += b.p_load * b.load_weight;
        }
    }
    return st;
}

std::vector<Violation> verify_line_ops(const CoupledNetwork& net,
                                       const std::map<std::string, int>& prev_state,
                                       const std::map<std::string, int>& next_state,
                                       const std::map<std::string, int>& comm_states,
                                       const FormulationConfig& cfg) {
    std::vector<Violation> out;
    auto s_of_bus = [&](const std::string& bus_id) -> int {
        int ti = net.comm.terminal_for_bus(bus_id);
        if (ti < 0) return 1; // unmonitored end: no requirement from that side
        const std::string& term = net.comm.nodes()[static_cast<size_t>(ti)].id;
        return flag(comm_states, term, 0);
    };
    for (const auto& l : net.power.lines()) {
        int prev = flag(prev_state, l.id, 0);
        int next = flag(next_state, l.id, 0);
        if (prev == next) continue;
        if (!l.controllable()) {
            out.push_back({"non-controllable", l.id, "line without switches changed state"});
            continue;
        }
        int si = s_of_bus(l.from_bus);
        int sj = s_of_bus(l.to_bus);
        double rho_i = l.switch_at_from ? 1 : 0;
        double rho_j = l.switch_at_to ? 1 : 0;
        if (next == 1) {
            bool allowed = cfg.require_both_ends_observed_to_close
                               ? (si + sj >= 2)
                               : (rho_i * si + rho_j * sj >= 1);
            if (!allowed)
                out.push_back({"eq35", l.id, "closing without the required observation"});
        } else {
            if (rho_i * si + rho_j * sj < 1)
                out.push_back({"eq35", l.id, "opening without a communicating switch end"});
        }
    }
    return out;
}

std::map<std::string, int> reachable(const CoupledNetwork& net, const Scenario& sc) {
    const auto& cm = net.comm;
    std::map<std::string, int> out;
    for (int ti : cm.terminal_indices()) out[cm.nodes()[static_cast<size_t>(ti)].id] = 0;
    int center = cm.center_index();
    if (center < 0) return out;
    const std::string center_id = cm.nodes()[static_cast<size_t>(center)].id;
    if (!flag(sc.node_ok, center_id)) return out;

    std::set<std::string> seen{center_id};
    std::deque<std::string> queue{center_id};
    while (!queue.empty()) {
        std::string cur = queue.front();
        queue.pop_front();
        for (const CommLink* l : incident_links(net, cur)) {
            if (!flag(sc.link_ok, l->id)) continue;
            const std::string& other = l->end_a == cur ? l->end_b : l->end_a;
            if (seen.count(other) || !flag(sc.node_ok, other)) continue;
            // data cannot transit foreign terminals, but a terminal can be
            // the endpoint of the search
            seen.insert(other);
            const CommNode& n = cm.nodes()[static_cast<size_t>(cm.node_index(other))];
            if (n.kind != CommKind::terminal) queue.push_back(other);
        }
    }
    for (auto& [term, v] : out) v = seen.count(term) ? 1 : 0;
    return out;
}

} // namespace dsr
