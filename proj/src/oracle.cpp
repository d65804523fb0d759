#include "dsr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace dsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int flag(const std::map<std::string, int>& m, const std::string& id, int dflt = 1) {
    auto it = m.find(id);
    return it == m.end() ? dflt : it->second;
}

struct CandidatePath {
    std::vector<std::string> nodes; // terminal .. center
    std::vector<std::string> links;
    double delay = 0.0;
};

// All simple terminal->center paths over healthy elements within the delay
// cap. Forwarders only in the interior; delay includes every non-terminal
// node's forwarding delay (the center's too).
std::vector<CandidatePath> enumerate_paths(const CoupledNetwork& net, const Scenario& sc,
                                           int terminal_index) {
    const auto& cm = net.comm;
    std::vector<CandidatePath> out;
    const CommNode& term = cm.nodes()[static_cast<size_t>(terminal_index)];
    if (!flag(sc.node_ok, term.id)) return out;
    int center = cm.center_index();
    if (center < 0) return out;

    std::vector<std::string> nodes{term.id};
    std::vector<std::string> links;
    std::set<std::string> visited{term.id};

    std::function<void(int, double)> dfs = [&](int at, double delay) {
        if (out.size() >= 512) return;
        if (at == center) {
            if (delay <= term.delay_cap + 1e-12) out.push_back({nodes, links, delay});
            return;
        }
        for (int li : cm.incident_link_indices(at)) {
            const CommLink& l = cm.links()[static_cast<size_t>(li)];
            if (!flag(sc.link_ok, l.id)) continue;
            const std::string& cur_id = cm.nodes()[static_cast<size_t>(at)].id;
            const std::string& other_id = l.end_a == cur_id ? l.end_b : l.end_a;
            if (visited.count(other_id) || !flag(sc.node_ok, other_id)) continue;
            int oi = cm.node_index(other_id);
            const CommNode& other = cm.nodes()[static_cast<size_t>(oi)];
            if (other.kind == CommKind::terminal) continue; // no foreign relays
            double next_delay = delay + l.prop_delay + other.forward_delay;
            if (next_delay > term.delay_cap + 1e-12) continue;
            visited.insert(other_id);
            nodes.push_back(other_id);
            links.push_back(l.id);
            dfs(oi, next_delay);
            visited.erase(other_id);
            nodes.pop_back();
            links.pop_back();
        }
    };
    dfs(terminal_index, 0.0);
    std::sort(out.begin(), out.end(),
              [](const CandidatePath& a, const CandidatePath& b) { return a.delay < b.delay; });
    return out;
}

struct RouteResult {
    bool feasible = false;
    double delay = kInf;
    std::vector<int> choice; // path index per set bit, in terminal order
};

// Capacity-accounted path assignment for a terminal subset; minimizes the
// total delay. Memoized per mask.
class Router {
public:
    Router(const CoupledNetwork& net, std::vector<std::vector<CandidatePath>> paths,
           std::vector<double> demand)
        : net_(net), paths_(std::move(paths)), demand_(std::move(demand)) {
        for (const auto& n : net.comm.nodes()) node_rem_[n.id] = n.bandwidth_cap;
        for (const auto& l : net.comm.links()) link_rem_[l.id] = l.bandwidth_cap;
        min_delay_.resize(paths_.size(), kInf);
        for (size_t t = 0; t < paths_.size(); ++t)
            if (!paths_[t].empty()) min_delay_[t] = paths_[t].front().delay;
    }

    const RouteResult& route(unsigned mask) {
        auto it = memo_.find(mask);
        if (it != memo_.end()) return it->second;
        RouteResult res;
        terms_.clear();
        for (size_t t = 0; t < paths_.size(); ++t)
            if (mask & (1u << t)) terms_.push_back(static_cast<int>(t));
        bool all_have_paths = true;
        for (int t : terms_)
            if (paths_[static_cast<size_t>(t)].empty()) all_have_paths = false;
        if (all_have_paths) {
            best_ = kInf;
            current_.assign(terms_.size(), -1);
            search(0, 0.0);
            if (best_ < kInf) {
                res.feasible = true;
                res.delay = best_;
                res.choice = best_choice_;
            }
        }
        return memo_.emplace(mask, std::move(res)).first->second;
    }

private:
    void search(size_t i, double delay) {
        if (i == terms_.size()) {
            if (delay < best_) {
                best_ = delay;
                best_choice_ = current_;
            }
            return;
        }
        double rest = 0.0;
        for (size_t j = i; j < terms_.size(); ++j)
            rest += min_delay_[static_cast<size_t>(terms_[j])];
        if (delay + rest >= best_) return;

        int t = terms_[i];
        const auto& options = paths_[static_cast<size_t>(t)];
        for (size_t p = 0; p < options.size(); ++p) {
            const CandidatePath& path = options[p];
            if (delay + path.delay +
                    (rest - min_delay_[static_cast<size_t>(t)]) >= best_)
                break; // options are delay-sorted
            if (!fits(path, demand_[static_cast<size_t>(t)])) continue;
            apply(path, demand_[static_cast<size_t>(t)]);
            current_[i] = static_cast<int>(p);
            search(i + 1, delay + path.delay);
            apply(path, -demand_[static_cast<size_t>(t)]);
        }
        current_[i] = -1;
    }

    bool fits(const CandidatePath& p, double w) const {
        for (const auto& id : p.nodes)
            if (node_rem_.at(id) < w - 1e-9) return false;
        for (const auto& id : p.links)
            if (link_rem_.at(id) < w - 1e-9) return false;
        return true;
    }
    void apply(const CandidatePath& p, double w) {
        for (const auto& id : p.nodes) node_rem_[id] -= w;
        for (const auto& id : p.links) link_rem_[id] -= w;
    }

    const CoupledNetwork& net_;
    std::vector<std::vector<CandidatePath>> paths_;
    std::vector<double> demand_;
    std::vector<double> min_delay_;
    std::map<std::string, double> node_rem_, link_rem_;
    std::map<unsigned, RouteResult> memo_;
    std::vector<int> terms_;
    std::vector<int> current_, best_choice_;
    double best_ = kInf;
};

} // namespace

OracleResult oracle_solve(const CoupledNetwork& net, const Scenario& sc,
                          const StageState& stage, const FormulationConfig& cfg,
                          const OracleGuards& guards) {
    const auto& pw = net.power;
    const auto& cm = net.comm;

    int controllable = 0;
    for (const auto& l : pw.lines())
        if (l.controllable()) ++controllable;
    if (controllable > guards.max_controllable_lines)
        throw std::invalid_argument("oracle guard exceeded: controllable lines");
    if (static_cast<int>(cm.terminal_indices().size()) > guards.max_terminals)
        throw std::invalid_argument("oracle guard exceeded: terminals");
    if (static_cast<int>(cm.nodes().size()) > guards.max_comm_nodes)
        throw std::invalid_argument("oracle guard exceeded: comm nodes");

    EffectiveInitial eff = effective_line_states(net, sc, stage.line_state);

    // Epsilon mirrors the MILP objective so tie-breaks agree.
    double eps = objective_epsilon(net, cfg);

    // Terminal bookkeeping.
    const auto& terminals = cm.terminal_indices();
    std::map<std::string, int> term_pos; // terminal id -> bit position
    std::vector<std::vector<CandidatePath>> paths;
    std::vector<double> demand;
    for (size_t t = 0; t < terminals.size(); ++t) {
        const CommNode& term = cm.nodes()[static_cast<size_t>(terminals[t])];
        term_pos[term.id] = static_cast<int>(t);
        paths.push_back(enumerate_paths(net, sc, terminals[t]));
        demand.push_back(term.required_bandwidth);
    }
    Router router(net, paths, demand);

    // -1 when the bus has no terminal (counts as observed).
    auto bit_of_bus = [&](const std::string& bus_id) -> int {
        int ti = cm.terminal_for_bus(bus_id);
        if (ti < 0) return -1;
        return term_pos.at(cm.nodes()[static_cast<size_t>(ti)].id);
    };
    auto routable_bit = [&](int bit) {
        return bit >= 0 && !paths[static_cast<size_t>(bit)].empty();
    };

    // Free (healthy, switched) lines to enumerate; everything else is pinned:
    // damaged controllable lines open, non-controllable lines at their
    // normalized initial state.
    std::vector<int> free_lines;
    std::map<std::string, int> pinned;
    for (size_t k = 0; k < pw.lines().size(); ++k) {
        const Line& l = pw.lines()[k];
        bool healthy = flag(sc.line_ok, l.id) && flag(sc.bus_ok, l.from_bus) &&
                       flag(sc.bus_ok, l.to_bus);
        if (l.controllable() && healthy)
            free_lines.push_back(static_cast<int>(k));
        else
            pinned[l.id] = l.controllable() ? 0 : eff.state.at(l.id);
    }

    int potential_free_loads = 0;
    for (const auto& b : pw.buses())
        if (b.has_load_switch || (b.has_source && b.p_load > 0)) ++potential_free_loads;
    if (potential_free_loads > 14)
        throw std::invalid_argument("oracle guard exceeded: load switches");

    OracleResult best;
    best.feasible = false;
    double best_score = -kInf;

    std::vector<char> latched(pw.buses().size(), 0);
    for (size_t bi = 0; bi < pw.buses().size(); ++bi) {
        auto it = stage.load_state.find(pw.buses()[bi].id);
        latched[bi] = (it != stage.load_state.end() && it->second == 1) ? 1 : 0;
    }

    const size_t n_assignments = 1u << free_lines.size();
    for (size_t mask = 0; mask < n_assignments; ++mask) {
        std::map<std::string, int> line_state = pinned;
        for (size_t i = 0; i < free_lines.size(); ++i)
            line_state[pw.lines()[static_cast<size_t>(free_lines[i])].id] =
                (mask >> i) & 1u;

        // Structural feasibility: every component with closed lines is a
        // tree with exactly one source (mirrors eqs. 15-20).
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
        bool cyclic = false;
        for (const auto& l : pw.lines()) {
            if (!line_state.at(l.id)) continue;
            int a = find(pw.bus_index(l.from_bus)), b = find(pw.bus_index(l.to_bus));
            if (a == b) {
                cyclic = true;
                break;
            }
            parent[static_cast<size_t>(a)] = b;
        }
        if (cyclic) continue;
        std::map<int, int> comp_sources, comp_lines;
        for (size_t bi = 0; bi < pw.buses().size(); ++bi)
            if (pw.buses()[bi].has_source) comp_sources[find(static_cast<int>(bi))]++;
        bool bad = false;
        for (const auto& l : pw.lines())
            if (line_state.at(l.id)) comp_lines[find(pw.bus_index(l.from_bus))]++;
        for (const auto& [root, lines] : comp_lines) {
            (void)lines;
            int s = comp_sources.count(root) ? comp_sources.at(root) : 0;
            if (s != 1) {
                bad = true;
                break;
            }
        }
        if (bad) continue;

        // Communication requirements of the switching operations (eq35).
        unsigned required = 0;
        std::vector<std::vector<unsigned>> one_of; // option groups
        for (const auto& l : pw.lines()) {
            int prev = eff.state.at(l.id);
            int next = line_state.at(l.id);
            if (prev == next) continue;
            int bi = bit_of_bus(l.from_bus), bj = bit_of_bus(l.to_bus);
            if (next == 1 && cfg.require_both_ends_observed_to_close) {
                // both monitored ends must communicate
                for (int b : {bi, bj}) {
                    if (b < 0) continue;
                    if (!routable_bit(b)) { bad = true; break; }
                    required |= 1u << b;
                }
            } else {
                // one communicating switch-side end suffices (open, or eq34
                // closing); an unmonitored switch end is free
                std::vector<unsigned> options;
                bool free_side = false;
                if (l.switch_at_from) {
                    if (bi < 0) free_side = true;
                    else if (routable_bit(bi)) options.push_back(1u << bi);
                }
                if (l.switch_at_to) {
                    if (bj < 0) free_side = true;
                    else if (routable_bit(bj)) options.push_back(1u << bj);
                }
                if (free_side) continue;
                if (options.empty()) { bad = true; break; }
                one_of.push_back(std::move(options));
            }
            if (bad) break;
        }
        if (bad) continue;

        // Resolve option groups to the cheapest routable superset of
        // `required`.
        std::set<unsigned> candidate_masks;
        std::function<void(size_t, unsigned)> expand = [&](size_t g, unsigned acc) {
            if (g == one_of.size()) {
                candidate_masks.insert(acc);
                return;
            }
            for (unsigned opt : one_of[g]) expand(g + 1, acc | opt);
        };
        expand(0, required);

        double comm_delay = kInf;
        unsigned comm_mask = 0;
        for (unsigned m : candidate_masks) {
            const RouteResult& rr = router.route(m);
            if (rr.feasible && rr.delay < comm_delay) {
                comm_delay = rr.delay;
                comm_mask = m;
            }
        }
        if (comm_delay == kInf) continue;

        // Load decisions.
        std::set<std::string> comp_energized; // buses in closed components with a source
        for (size_t bi = 0; bi < pw.buses().size(); ++bi) {
            int root = find(static_cast<int>(bi));
            if (comp_lines.count(root) && comp_sources.count(root))
                comp_energized.insert(pw.buses()[bi].id);
        }

        std::map<std::string, int> base_load;
        std::vector<size_t> free_loads;
        bool load_bad = false;
        for (size_t bi = 0; bi < pw.buses().size(); ++bi) {
            const Bus& b = pw.buses()[bi];
            bool in_comp = comp_energized.count(b.id) > 0;
            bool island_source = b.has_source && !in_comp;
            if (latched[bi]) {
                if (!in_comp && !island_source) {
                    load_bad = true; // a latched load lost its supply
                    break;
                }
                base_load[b.id] = 1;
            } else if (!b.has_load_switch) {
                if (in_comp)
                    base_load[b.id] = 1; // default-closed
                else if (island_source && b.p_load > 0)
                    free_loads.push_back(bi); // self-supplied DG bus
                else
                    base_load[b.id] = 0;
            } else {
                if (in_comp || island_source)
                    free_loads.push_back(bi);
                else
                    base_load[b.id] = 0;
            }
        }
        if (load_bad) continue;

        for (size_t lmask = 0; lmask < (1u << free_loads.size()); ++lmask) {
            std::map<std::string, int> load_state = base_load;
            for (size_t i = 0; i < free_loads.size(); ++i)
                load_state[pw.buses()[free_loads[i]].id] = (lmask >> i) & 1u;

            PowerState ps = verify_power(net, sc, line_state, load_state, cfg);
            if (!ps.ok()) continue;

            // Optional gating of load pickups on terminal communication.
            unsigned mask_with_loads = comm_mask;
            double delay_with_loads = comm_delay;
            if (cfg.enforce_load_switch_comm) {
                unsigned extra = 0;
                bool gate_bad = false;
                for (size_t bi : free_loads) {
                    const Bus& b = pw.buses()[bi];
                    if (!b.has_load_switch || !load_state.at(b.id)) continue;
                    int bit = bit_of_bus(b.id);
                    if (bit < 0) continue;
                    if (!routable_bit(bit)) {
                        gate_bad = true;
                        break;
                    }
                    extra |= 1u << bit;
                }
                if (gate_bad) continue;
                if (extra & ~comm_mask) {
                    const RouteResult& rr = router.route(comm_mask | extra);
                    if (!rr.feasible) continue;
                    mask_with_loads = comm_mask | extra;
                    delay_with_loads = rr.delay;
                }
            }

            double score = ps.served_weighted - eps * delay_with_loads;
            if (score > best_score + 1e-12) {
                best_score = score;
                best.feasible = true;
                best.pickup_weighted = ps.served_weighted;
                best.pickup_kw = ps.served_kw;
                best.delay_sum = delay_with_loads;
                best.objective = score;
                best.line_state = line_state;
                best.load_state = load_state;
                best.comm_states.clear();
                best.routing = RoutingAssignment{};
                const RouteResult& rr = router.route(mask_with_loads);
                size_t pos = 0;
                for (size_t t = 0; t < terminals.size(); ++t) {
                    const CommNode& term = cm.nodes()[static_cast<size_t>(terminals[t])];
                    bool on = (mask_with_loads >> t) & 1u;
                    best.comm_states[term.id] = on ? 1 : 0;
                    if (on) {
                        const CandidatePath& p =
                            paths[t][static_cast<size_t>(rr.choice[pos++])];
                        best.routing.nodes[term.id] =
                            std::set<std::string>(p.nodes.begin(), p.nodes.end());
                        best.routing.links[term.id] =
                            std::set<std::string>(p.links.begin(), p.links.end());
                    } else {
                        best.routing.nodes[term.id] = {};
                        best.routing.links[term.id] = {};
                    }
                }
            }
        }
    }

    return best;
}

} // namespace dsr
