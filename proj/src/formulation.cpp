#include "dsr/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace dsr {

StageState StageState::initial(const CoupledNetwork& net, const Scenario& sc) {
    StageState st;
    st.stage_index = 1;
    st.line_state = sc.line_initial;
    for (const auto& b : net.power.buses()) st.load_state[b.id] = 0;
    return st;
}

namespace {

int scenario_flag(const std::map<std::string, int>& m, const std::string& id) {
    auto it = m.find(id);
    return it == m.end() ? 1 : it->second;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};

} // namespace

EffectiveInitial effective_line_states(const CoupledNetwork& net, const Scenario& sc,
                                       const std::map<std::string, int>& raw_state) {
    EffectiveInitial out;
    const auto& pw = net.power;
    for (const auto& l : pw.lines()) {
        int raw = scenario_flag(raw_state, l.id);
        int healthy = scenario_flag(sc.line_ok, l.id) & scenario_flag(sc.bus_ok, l.from_bus) &
                      scenario_flag(sc.bus_ok, l.to_bus);
        int eff = raw & healthy;
        if (raw == 1 && eff == 0 && !l.controllable()) out.manual_isolation.push_back(l.id);
        out.state[l.id] = eff;
    }
    // Open closed lines stranded in components without any source.
    UnionFind uf(pw.buses().size());
    for (const auto& l : pw.lines())
        if (out.state[l.id] == 1) uf.unite(pw.bus_index(l.from_bus), pw.bus_index(l.to_bus));
    std::vector<char> root_has_source(pw.buses().size(), 0);
    for (size_t i = 0; i < pw.buses().size(); ++i)
        if (pw.buses()[i].has_source) root_has_source[static_cast<size_t>(uf.find(static_cast<int>(i)))] = 1;
    for (const auto& l : pw.lines()) {
        if (out.state[l.id] == 1 &&
            !root_has_source[static_cast<size_t>(uf.find(pw.bus_index(l.from_bus)))])
            out.state[l.id] = 0;
    }
    return out;
}

namespace {

void ensure_effective(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
                      FormulationHandles& h) {
    if (!h.effective) h.effective = effective_line_states(net, sc, stage.line_state);
}

void ensure_line_vars(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
                      MilpModel& model, FormulationHandles& h) {
    if (!h.line_closed.empty()) return;
    ensure_effective(net, sc, stage, h);
    for (const auto& l : net.power.lines()) {
        VarId b = model.add_binary("b(" + l.id + ")");
        if (!l.controllable()) {
            int eff = h.effective->state.at(l.id);
            model.set_bounds(b, eff, eff);
        }
        h.line_closed[l.id] = b;
    }
}

void ensure_load_vars(const CoupledNetwork& net, const StageState& stage, MilpModel& model,
                      FormulationHandles& h) {
    if (!h.load_served.empty()) return;
    for (const auto& b : net.power.buses()) {
        VarId v = model.add_binary("bL(" + b.id + ")");
        auto it = stage.load_state.find(b.id);
        if (it != stage.load_state.end() && it->second == 1) model.set_bounds(v, 1, 1);
        h.load_served[b.id] = v;
    }
}

double auto_voltage_big_m(const CoupledNetwork& net, const FormulationConfig& cfg) {
    double max_drop = 0.0;
    for (const auto& l : net.power.lines())
        max_drop = std::max(max_drop, (l.p_max * l.r + l.q_max * l.x) / cfg.v_ref);
    return 2.0 * cfg.delta * cfg.v_ref + max_drop;
}

} // namespace

void build_doc(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h) {
    const auto& pw = net.power;
    ensure_effective(net, sc, stage, h);
    ensure_line_vars(net, sc, stage, model, h);
    ensure_load_vars(net, stage, model, h);

    const double va = cfg.v_ref;
    const double mv = cfg.big_m_voltage > 0 ? cfg.big_m_voltage : auto_voltage_big_m(net, cfg);

    for (const auto& b : pw.buses()) {
        if (b.has_source) {
            h.source_p[b.id] =
                model.add_var("pG(" + b.id + ")", VarKind::continuous, 0.0, b.source_p_max); // eq2
            h.source_q[b.id] =
                model.add_var("qG(" + b.id + ")", VarKind::continuous, 0.0, b.source_q_max); // eq3
        }
        h.bus_v[b.id] = model.add_var("v(" + b.id + ")", VarKind::continuous,
                                      (1.0 - cfg.delta) * va, (1.0 + cfg.delta) * va); // eq13
    }
    for (const auto& l : pw.lines()) {
        h.line_p[l.id] =
            model.add_var("pL(" + l.id + ")", VarKind::continuous, -l.p_max, l.p_max); // eq4
        h.line_q[l.id] =
            model.add_var("qL(" + l.id + ")", VarKind::continuous, -l.q_max, l.q_max); // eq5
    }

    for (const auto& l : pw.lines()) {
        VarId b = h.line_closed.at(l.id);
        // eq1: a line closes only when it and both end buses are healthy
        double chi = scenario_flag(sc.line_ok, l.id) + scenario_flag(sc.bus_ok, l.from_bus) +
                     scenario_flag(sc.bus_ok, l.to_bus);
        LinExpr e1;
        e1.add(b, 1.0);
        model.add_constraint(e1, Sense::le, chi / 3.0, "eq1");

        // eq6/eq7: flow only on closed lines; big-M replaced by the exact caps
        LinExpr p_hi, p_lo, q_hi, q_lo;
        p_hi.add(h.line_p.at(l.id), 1.0).add(b, -l.p_max);
        p_lo.add(h.line_p.at(l.id), -1.0).add(b, -l.p_max);
        model.add_constraint(p_hi, Sense::le, 0.0, "eq6");
        model.add_constraint(p_lo, Sense::le, 0.0, "eq6");
        q_hi.add(h.line_q.at(l.id), 1.0).add(b, -l.q_max);
        q_lo.add(h.line_q.at(l.id), -1.0).add(b, -l.q_max);
        model.add_constraint(q_hi, Sense::le, 0.0, "eq7");
        model.add_constraint(q_lo, Sense::le, 0.0, "eq7");
    }

    // eq8..eq11: nodal balance
    for (size_t bi = 0; bi < pw.buses().size(); ++bi) {
        const Bus& bus = pw.buses()[bi];
        LinExpr p_bal, q_bal;
        for (const auto& [k, mu] : pw.incident_line_indices(static_cast<int>(bi))) {
            const Line& l = pw.lines()[static_cast<size_t>(k)];
            p_bal.add(h.line_p.at(l.id), mu);
            q_bal.add(h.line_q.at(l.id), mu);
        }
        p_bal.add(h.load_served.at(bus.id), bus.p_load);
        q_bal.add(h.load_served.at(bus.id), bus.q_load);
        if (bus.has_source) {
            p_bal.add(h.source_p.at(bus.id), -1.0);
            q_bal.add(h.source_q.at(bus.id), -1.0);
            model.add_constraint(p_bal, Sense::eq, 0.0, "eq10");
            model.add_constraint(q_bal, Sense::eq, 0.0, "eq11");
        } else {
            model.add_constraint(p_bal, Sense::eq, 0.0, "eq8");
            model.add_constraint(q_bal, Sense::eq, 0.0, "eq9");
        }
    }

    // eq12: source buses hold the reference voltage
    for (const auto& b : pw.buses()) {
        if (!b.has_source) continue;
        LinExpr e;
        e.add(h.bus_v.at(b.id), 1.0);
        model.add_constraint(e, Sense::eq, va, "eq12");
    }

    // eq14: linearized voltage drop, relaxed when the line is open
    for (const auto& l : pw.lines()) {
        VarId b = h.line_closed.at(l.id);
        LinExpr hi, lo;
        hi.add(h.bus_v.at(l.from_bus), 1.0)
            .add(h.bus_v.at(l.to_bus), -1.0)
            .add(h.line_p.at(l.id), -l.r / va)
            .add(h.line_q.at(l.id), -l.x / va)
            .add(b, mv);
        model.add_constraint(hi, Sense::le, mv, "eq14");
        lo.add(h.bus_v.at(l.from_bus), 1.0)
            .add(h.bus_v.at(l.to_bus), -1.0)
            .add(h.line_p.at(l.id), -l.r / va)
            .add(h.line_q.at(l.id), -l.x / va)
            .add(b, -mv);
        model.add_constraint(lo, Sense::ge, -mv, "eq14");
    }
}

void build_dcc(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h) {
    const auto& pw = net.power;
    ensure_line_vars(net, sc, stage, model, h);
    ensure_load_vars(net, stage, model, h);

    const double mf =
        cfg.big_m_commodity > 0 ? cfg.big_m_commodity : static_cast<double>(pw.buses().size());

    // f is declared integer in the reference formulation, but integrality is
    // implied: once every b is integral the tree conservation laws pin f to
    // integers. Declaring it continuous spares the solver useless branching;
    // integral values are restored on extraction.
    for (const auto& l : pw.lines())
        h.flow_line[l.id] = model.add_var("fL(" + l.id + ")", VarKind::continuous, -mf, mf);
    for (const auto& b : pw.buses()) {
        h.flow_bus[b.id] = model.add_binary("fN(" + b.id + ")");
        if (b.has_source)
            h.flow_source[b.id] = model.add_var("fS(" + b.id + ")", VarKind::continuous, 0.0, mf);
    }

    for (const auto& l : pw.lines()) {
        VarId b = h.line_closed.at(l.id);
        VarId f = h.flow_line.at(l.id);
        // eq15: commodity moves only on closed lines
        LinExpr f_hi, f_lo;
        f_hi.add(f, 1.0).add(b, -mf);
        f_lo.add(f, -1.0).add(b, -mf);
        model.add_constraint(f_hi, Sense::le, 0.0, "eq15");
        model.add_constraint(f_lo, Sense::le, 0.0, "eq15");
        // eq16: closed lines equalize the energized state of both ends (M = 1)
        LinExpr e_hi, e_lo;
        e_hi.add(h.flow_bus.at(l.from_bus), 1.0).add(h.flow_bus.at(l.to_bus), -1.0).add(b, 1.0);
        model.add_constraint(e_hi, Sense::le, 1.0, "eq16");
        e_lo.add(h.flow_bus.at(l.from_bus), 1.0).add(h.flow_bus.at(l.to_bus), -1.0).add(b, -1.0);
        model.add_constraint(e_lo, Sense::ge, -1.0, "eq16");
    }

    // eq17: loads may only be served at energized buses; without a load
    // switch the load follows the bus state exactly (default-closed switch)
    for (const auto& b : pw.buses()) {
        LinExpr e;
        e.add(h.load_served.at(b.id), 1.0).add(h.flow_bus.at(b.id), -1.0);
        model.add_constraint(e, b.has_load_switch ? Sense::le : Sense::eq, 0.0, "eq17");
    }

    // eq18/eq19: unit-demand commodity conservation
    for (size_t bi = 0; bi < pw.buses().size(); ++bi) {
        const Bus& bus = pw.buses()[bi];
        LinExpr bal;
        for (const auto& [k, mu] : pw.incident_line_indices(static_cast<int>(bi)))
            bal.add(h.flow_line.at(pw.lines()[static_cast<size_t>(k)].id), mu);
        bal.add(h.flow_bus.at(bus.id), 1.0);
        if (bus.has_source) {
            bal.add(h.flow_source.at(bus.id), -1.0);
            model.add_constraint(bal, Sense::eq, 0.0, "eq19");
        } else {
            model.add_constraint(bal, Sense::eq, 0.0, "eq18");
        }
    }

    // eq20: radiality census
    LinExpr rad;
    for (const auto& b : pw.buses())
        if (!b.has_source) rad.add(h.flow_bus.at(b.id), 1.0);
    for (const auto& l : pw.lines()) rad.add(h.line_closed.at(l.id), -1.0);
    model.add_constraint(rad, Sense::eq, 0.0, "eq20");
}

void build_dfc(const CoupledNetwork& net, const Scenario& sc,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h) {
    (void)cfg;
    const auto& cm = net.comm;
    if (cm.center_index() < 0)
        throw std::invalid_argument("communication network needs exactly one operation center");
    const std::string center_id = cm.nodes()[static_cast<size_t>(cm.center_index())].id;

    for (int ti : cm.terminal_indices()) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
        // eq27 as an upper bound: a failed terminal cannot communicate
        VarId s = model.add_binary("s(" + term.id + ")");
        model.set_bounds(s, 0.0, scenario_flag(sc.node_ok, term.id));
        h.comm_state[term.id] = s;

        auto& hn = h.route_node[term.id];
        auto& hl = h.route_link[term.id];
        for (const auto& node : cm.nodes()) {
            VarId v = model.add_binary("hN(" + term.id + "," + node.id + ")");
            double ub = scenario_flag(sc.node_ok, node.id); // eq22 as a bound
            if (node.kind == CommKind::terminal && node.id != term.id)
                ub = 0.0; // eq25 structural zero: foreign terminals cannot relay
            model.set_bounds(v, 0.0, ub);
            hn[node.id] = v;
        }
        for (const auto& link : cm.links()) {
            VarId v = model.add_binary("hL(" + term.id + "," + link.id + ")");
            double ub = scenario_flag(sc.link_ok, link.id); // eq21 as a bound
            const CommNode& a = cm.nodes()[static_cast<size_t>(cm.node_index(link.end_a))];
            const CommNode& b = cm.nodes()[static_cast<size_t>(cm.node_index(link.end_b))];
            if ((a.kind == CommKind::terminal && a.id != term.id) ||
                (b.kind == CommKind::terminal && b.id != term.id))
                ub = 0.0; // eq25 structural zero on foreign terminal stubs
            model.set_bounds(v, 0.0, ub);
            hl[link.id] = v;
        }
    }

    for (int ti : cm.terminal_indices()) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
        auto& hn = h.route_node.at(term.id);
        auto& hl = h.route_link.at(term.id);

        // eq23: the center terminates each routed flow
        LinExpr center_deg;
        for (int li : cm.incident_link_indices(cm.center_index()))
            center_deg.add(hl.at(cm.links()[static_cast<size_t>(li)].id), 1.0);
        center_deg.add(hn.at(center_id), -1.0);
        model.add_constraint(center_deg, Sense::eq, 0.0, "eq23");

        // eq24: forwarders relay (receive + send)
        for (size_t mi = 0; mi < cm.nodes().size(); ++mi) {
            const CommNode& m = cm.nodes()[mi];
            if (m.kind != CommKind::forwarder) continue;
            LinExpr deg;
            for (int li : cm.incident_link_indices(static_cast<int>(mi)))
                deg.add(hl.at(cm.links()[static_cast<size_t>(li)].id), 1.0);
            deg.add(hn.at(m.id), -2.0);
            model.add_constraint(deg, Sense::eq, 0.0, "eq24");
        }

        // eq25: the terminal transmits exactly its own flow
        LinExpr own_deg;
        for (int li : cm.incident_link_indices(ti))
            own_deg.add(hl.at(cm.links()[static_cast<size_t>(li)].id), 1.0);
        own_deg.add(hn.at(term.id), -1.0);
        model.add_constraint(own_deg, Sense::eq, 0.0, "eq25");
        LinExpr own_id;
        own_id.add(hn.at(term.id), 1.0).add(h.comm_state.at(term.id), -1.0);
        model.add_constraint(own_id, Sense::eq, 0.0, "eq25");

        // eq26: communicating == data reaches the center
        LinExpr comm;
        comm.add(h.comm_state.at(term.id), 1.0).add(hn.at(center_id), -1.0);
        model.add_constraint(comm, Sense::eq, 0.0, "eq26");
    }
}

void build_bdc(const CoupledNetwork& net, const Scenario& sc,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h) {
    const auto& cm = net.comm;
    if (h.comm_state.empty()) build_dfc(net, sc, cfg, model, h);

    // eq28/eq29: node bandwidth
    for (const auto& node : cm.nodes()) {
        VarId d = model.add_var("dN(" + node.id + ")", VarKind::continuous, 0.0,
                                node.bandwidth_cap); // eq29 as a bound
        LinExpr def;
        def.add(d, 1.0);
        for (int ti : cm.terminal_indices()) {
            const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
            def.add(h.route_node.at(term.id).at(node.id), -term.required_bandwidth);
        }
        model.add_constraint(def, Sense::eq, 0.0, "eq28");
        h.node_bw[node.id] = d;
    }

    // eq30/eq31: link bandwidth
    for (const auto& link : cm.links()) {
        VarId d = model.add_var("dL(" + link.id + ")", VarKind::continuous, 0.0,
                                link.bandwidth_cap); // eq31 as a bound
        LinExpr def;
        def.add(d, 1.0);
        for (int ti : cm.terminal_indices()) {
            const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
            def.add(h.route_link.at(term.id).at(link.id), -term.required_bandwidth);
        }
        model.add_constraint(def, Sense::eq, 0.0, "eq30");
        h.link_bw[link.id] = d;
    }

    // eq32/eq33: end-to-end delay = link propagation + forwarding of every
    // non-terminal node on the path (the center's forwarding delay counts)
    for (int ti : cm.terminal_indices()) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(ti)];
        VarId e = model.add_var("e(" + term.id + ")", VarKind::continuous, 0.0,
                                term.delay_cap); // eq33 as a bound
        LinExpr def;
        def.add(e, 1.0);
        for (const auto& link : cm.links())
            def.add(h.route_link.at(term.id).at(link.id), -link.prop_delay);
        for (const auto& node : cm.nodes()) {
            if (node.kind == CommKind::terminal) continue;
            def.add(h.route_node.at(term.id).at(node.id), -node.forward_delay);
        }
        model.add_constraint(def, Sense::eq, 0.0, "eq32");
        h.delay[term.id] = e;
    }
}

namespace {

// Communication-state term of one line end: a terminal's s variable, a
// frozen constant, or the constant 1 for an unmonitored bus.
struct CommTerm {
    VarId var;      // invalid when constant
    double constant = 1.0;
};

CommTerm comm_term_for_bus(const CoupledNetwork& net, const FormulationHandles& h,
                           const std::map<std::string, int>* frozen, const std::string& bus_id) {
    int ti = net.comm.terminal_for_bus(bus_id);
    if (ti < 0) return {VarId{}, 1.0};
    const std::string& term_id = net.comm.nodes()[static_cast<size_t>(ti)].id;
    if (frozen) {
        auto it = frozen->find(term_id);
        return {VarId{}, it == frozen->end() ? 0.0 : static_cast<double>(it->second)};
    }
    auto it = h.comm_state.find(term_id);
    if (it == h.comm_state.end())
        throw std::logic_error("LCC needs communication-state variables or a frozen map");
    return {it->second, 0.0};
}

void add_term(LinExpr& e, const CommTerm& t, double coef, double& rhs_shift) {
    if (t.var.valid())
        e.add(t.var, coef);
    else
        rhs_shift += coef * t.constant;
}

} // namespace

void build_lcc(const CoupledNetwork& net, const Scenario& sc, const StageState& stage,
               const FormulationConfig& cfg, MilpModel& model, FormulationHandles& h,
               const std::map<std::string, int>* frozen_comm) {
    ensure_effective(net, sc, stage, h);
    ensure_line_vars(net, sc, stage, model, h);

    for (const auto& l : net.power.lines()) {
        if (!l.controllable()) continue; // exempt; the variable is pinned already
        double prev = h.effective->state.at(l.id);
        CommTerm si = comm_term_for_bus(net, h, frozen_comm, l.from_bus);
        CommTerm sj = comm_term_for_bus(net, h, frozen_comm, l.to_bus);
        double rho_i = l.switch_at_from ? 1.0 : 0.0;
        double rho_j = l.switch_at_to ? 1.0 : 0.0;

        // lower: b >= prev - (rho_i s_i + rho_j s_j)
        LinExpr lo;
        double lo_shift = 0.0;
        lo.add(h.line_closed.at(l.id), 1.0);
        if (rho_i > 0) add_term(lo, si, rho_i, lo_shift);
        if (rho_j > 0) add_term(lo, sj, rho_j, lo_shift);
        model.add_constraint(lo, Sense::ge, prev - lo_shift,
                             cfg.require_both_ends_observed_to_close ? "eq35" : "eq34");

        // upper: closing needs both end buses observed (eq35) or, in the
        // relaxed reading, any switch-side terminal (eq34)
        LinExpr hi;
        double hi_shift = 0.0;
        hi.add(h.line_closed.at(l.id), 1.0);
        if (cfg.require_both_ends_observed_to_close) {
            add_term(hi, si, -0.5, hi_shift);
            add_term(hi, sj, -0.5, hi_shift);
            model.add_constraint(hi, Sense::le, prev - hi_shift, "eq35");
        } else {
            double denom = rho_i + rho_j;
            if (rho_i > 0) add_term(hi, si, -rho_i / denom, hi_shift);
            if (rho_j > 0) add_term(hi, sj, -rho_j / denom, hi_shift);
            model.add_constraint(hi, Sense::le, prev - hi_shift, "eq34");
        }
    }

    if (cfg.enforce_load_switch_comm) {
        ensure_load_vars(net, stage, model, h);
        for (const auto& b : net.power.buses()) {
            if (!b.has_load_switch) continue;
            auto latched = stage.load_state.find(b.id);
            if (latched != stage.load_state.end() && latched->second == 1) continue;
            if (net.comm.terminal_for_bus(b.id) < 0) continue;
            CommTerm s = comm_term_for_bus(net, h, frozen_comm, b.id);
            LinExpr e;
            double shift = 0.0;
            e.add(h.load_served.at(b.id), 1.0);
            add_term(e, s, -1.0, shift);
            model.add_constraint(e, Sense::le, -shift, "eq35load");
        }
    }
}

double dominance_epsilon(double min_load_value, int n_flows, double max_tau) {
    if (min_load_value <= 0 || n_flows <= 0 || max_tau <= 0) return 0.0;
    return 0.9 * min_load_value / (static_cast<double>(n_flows) * max_tau);
}

namespace {

double min_positive_weighted_load(const CoupledNetwork& net) {
    double g = 0.0;
    for (const auto& b : net.power.buses()) {
        double v = b.p_load * b.load_weight;
        if (v > 0 && (g == 0.0 || v < g)) g = v;
    }
    return g;
}

double max_delay_cap(const CoupledNetwork& net) {
    double t = 0.0;
    for (int ti : net.comm.terminal_indices())
        t = std::max(t, net.comm.nodes()[static_cast<size_t>(ti)].delay_cap);
    return t;
}

} // namespace

double objective_epsilon(const CoupledNetwork& net, const FormulationConfig& cfg) {
    double g = min_positive_weighted_load(net);
    double tau = max_delay_cap(net);
    int phi = static_cast<int>(net.power.buses().size());
    if (cfg.epsilon > 0) {
        if (g > 0 && cfg.epsilon * phi * tau >= g)
            throw std::invalid_argument(
                "epsilon too large: the delay penalty could outweigh a load decision");
        return cfg.epsilon;
    }
    double eps = dominance_epsilon(g, phi, tau);
    if (cfg.gap > 0) {
        // Keep the whole delay term inside the MILP gap so a gap-limited
        // solve never has to branch purely on routing delays. Still positive,
        // so exact solves break ties toward short routes.
        double total = 0.0;
        for (const auto& b : net.power.buses()) total += b.p_load * b.load_weight;
        double cap = dominance_epsilon(0.4 * cfg.gap * total, phi, tau) / 0.9;
        if (cap > 0) eps = std::min(eps, cap);
    }
    return eps;
}

void build_objective(const CoupledNetwork& net, const FormulationConfig& cfg,
                     MilpModel& model, FormulationHandles& h) {
    double eps = h.delay.empty() ? 0.0 : objective_epsilon(net, cfg);
    h.epsilon_used = eps;

    LinExpr obj;
    for (const auto& b : net.power.buses()) {
        double coef = b.p_load * b.load_weight;
        if (coef != 0.0) obj.add(h.load_served.at(b.id), coef);
    }
    for (const auto& [term, e] : h.delay) {
        (void)term;
        if (eps != 0.0) obj.add(e, -eps);
    }
    model.set_objective(obj);
}

FormulationResult build_integrated(const CoupledNetwork& net, const Scenario& sc,
                                   const StageState& stage, const FormulationConfig& cfg,
                                   const BuildOptions& opts) {
    FormulationResult r;
    if (opts.include_comm) {
        build_dfc(net, sc, cfg, r.model, r.handles);
        build_bdc(net, sc, cfg, r.model, r.handles);
    }
    if (opts.include_power) {
        if (!opts.include_comm && opts.frozen_comm == nullptr)
            throw std::invalid_argument("power-only models need frozen communication states");
        build_doc(net, sc, stage, cfg, r.model, r.handles);
        build_dcc(net, sc, stage, cfg, r.model, r.handles);
        build_lcc(net, sc, stage, cfg, r.model, r.handles, opts.frozen_comm);
    }
    if (opts.comm_recovery_objective) {
        // max sum(s) with an epsilon delay tie-break (node-count increments are 1)
        double eps = dominance_epsilon(1.0, static_cast<int>(r.handles.comm_state.size()),
                                       max_delay_cap(net));
        r.handles.epsilon_used = eps;
        LinExpr obj;
        for (const auto& [term, s] : r.handles.comm_state) {
            (void)term;
            obj.add(s, 1.0);
        }
        for (const auto& [term, e] : r.handles.delay) {
            (void)term;
            if (eps != 0.0) obj.add(e, -eps);
        }
        r.model.set_objective(obj);
    } else {
        build_objective(net, cfg, r.model, r.handles);
    }
    return r;
}

void polish_solution(const MilpModel& model, const FormulationHandles& h,
                     std::vector<double>& assignment) {
    for (size_t j = 0; j < model.vars().size(); ++j)
        if (model.vars()[j].is_integral()) assignment[j] = std::round(assignment[j]);

    std::set<int> defined;
    auto collect = [&defined](const std::map<std::string, VarId>& m) {
        for (const auto& [k, v] : m) {
            (void)k;
            defined.insert(v.index);
        }
    };
    collect(h.node_bw);
    collect(h.link_bw);
    collect(h.delay);
    collect(h.source_p);
    collect(h.source_q);
    collect(h.flow_source);

    for (const auto& c : model.constraints()) {
        if (c.sense != Sense::eq) continue;
        if (c.tag != "eq28" && c.tag != "eq30" && c.tag != "eq32" && c.tag != "eq10" &&
            c.tag != "eq11" && c.tag != "eq19")
            continue;
        int def_idx = -1;
        double def_coef = 0.0;
        double rest = 0.0;
        for (const auto& [idx, coef] : c.expr.terms) {
            if (defined.count(idx) && def_idx < 0) {
                def_idx = idx;
                def_coef = coef;
            } else {
                rest += coef * assignment[static_cast<size_t>(idx)];
            }
        }
        if (def_idx >= 0 && def_coef != 0.0)
            assignment[static_cast<size_t>(def_idx)] = (c.rhs - rest) / def_coef;
    }
}

} // namespace dsr
