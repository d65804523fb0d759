#include "dsr/netmodel.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dsr {

namespace {

template <typename T>
void sort_by_id(std::vector<T>& items) {
    std::sort(items.begin(), items.end(),
              [](const T& a, const T& b) { return a.id < b.id; });
}

} // namespace

PowerNetwork::PowerNetwork(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
    sort_by_id(buses_);
    sort_by_id(lines_);
    for (int i = 0; i < static_cast<int>(buses_.size()); ++i)
        bus_index_.emplace(buses_[i].id, i);
    for (int i = 0; i < static_cast<int>(lines_.size()); ++i)
        line_index_.emplace(lines_[i].id, i);
    incidence_.resize(buses_.size());
    for (int k = 0; k < static_cast<int>(lines_.size()); ++k) {
        auto from = bus_index_.find(lines_[k].from_bus);
        auto to = bus_index_.find(lines_[k].to_bus);
        if (from != bus_index_.end()) incidence_[from->second].push_back({k, +1});
        if (to != bus_index_.end()) incidence_[to->second].push_back({k, -1});
    }
    // lines_ is id-sorted, so per-bus incidence built in line order is too.
}

bool PowerNetwork::has_bus(const std::string& id) const { return bus_index_.count(id) > 0; }
bool PowerNetwork::has_line(const std::string& id) const { return line_index_.count(id) > 0; }

const Bus& PowerNetwork::bus(const std::string& id) const {
    return buses_.at(static_cast<size_t>(bus_index(id)));
}

const Line& PowerNetwork::line(const std::string& id) const {
    return lines_.at(static_cast<size_t>(line_index(id)));
}

int PowerNetwork::bus_index(const std::string& id) const {
    auto it = bus_index_.find(id);
    if (it == bus_index_.end()) throw std::out_of_range("unknown bus id: " + id);
    return it->second;
}

int PowerNetwork::line_index(const std::string& id) const {
    auto it = line_index_.find(id);
    if (it == line_index_.end()) throw std::out_of_range("unknown line id: " + id);
    return it->second;
}

const std::vector<std::pair<int, int>>& PowerNetwork::incident_line_indices(int bus_index) const {
    return incidence_.at(static_cast<size_t>(bus_index));
}

CommNetwork::CommNetwork(std::vector<CommNode> nodes, std::vector<CommLink> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
    sort_by_id(nodes_);
    sort_by_id(links_);
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i)
        node_index_.emplace(nodes_[i].id, i);
    for (int i = 0; i < static_cast<int>(links_.size()); ++i)
        link_index_.emplace(links_[i].id, i);
    incidence_.resize(nodes_.size());
    for (int l = 0; l < static_cast<int>(links_.size()); ++l) {
        auto a = node_index_.find(links_[l].end_a);
        auto b = node_index_.find(links_[l].end_b);
        if (a != node_index_.end()) incidence_[a->second].push_back(l);
        if (b != node_index_.end() && b != a) incidence_[b->second].push_back(l);
    }
    int centers = 0;
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        if (nodes_[i].kind == CommKind::center) {
            ++centers;
            center_index_ = i;
        } else if (nodes_[i].kind == CommKind::terminal) {
            terminal_indices_.push_back(i);
            bus_terminal_.emplace(nodes_[i].attached_bus, i);
        }
    }
    if (centers != 1) center_index_ = -1;
}

bool CommNetwork::has_node(const std::string& id) const { return node_index_.count(id) > 0; }
bool CommNetwork::has_link(const std::string& id) const { return link_index_.count(id) > 0; }

const CommNode& CommNetwork::node(const std::string& id) const {
    return nodes_.at(static_cast<size_t>(node_index(id)));
}

const CommLink& CommNetwork::link(const std::string& id) const {
    return links_.at(static_cast<size_t>(link_index(id)));
}

int CommNetwork::node_index(const std::string& id) const {
    auto it = node_index_.find(id);
    if (it == node_index_.end()) throw std::out_of_range("unknown comm node id: " + id);
    return it->second;
}

int CommNetwork::link_index(const std::string& id) const {
    auto it = link_index_.find(id);
    if (it == link_index_.end()) throw std::out_of_range("unknown comm link id: " + id);
    return it->second;
}

const std::vector<int>& CommNetwork::incident_link_indices(int node_index) const {
    return incidence_.at(static_cast<size_t>(node_index));
}

int CommNetwork::terminal_for_bus(const std::string& bus_id) const {
    auto it = bus_terminal_.find(bus_id);
    return it == bus_terminal_.end() ? -1 : it->second;
}

namespace {

void check_total(const std::map<std::string, int>& m, const std::string& id,
                 const char* map_name, const std::string& element,
                 std::vector<Violation>& out) {
    auto it = m.find(id);
    if (it == m.end()) {
        out.push_back({"scenario-incomplete", element,
                       std::string(map_name) + " has no entry for " + id});
    } else if (it->second != 0 && it->second != 1) {
        out.push_back({"scenario-domain", element,
                       std::string(map_name) + "[" + id + "] must be 0 or 1"});
    }
}

} // namespace

std::vector<Violation> validate(const CoupledNetwork& net, const Scenario& sc) {
    std::vector<Violation> out;
    const auto& pw = net.power;
    const auto& cm = net.comm;

    std::set<std::string> seen;
    for (const auto& b : pw.buses()) {
        if (!seen.insert(b.id).second)
            out.push_back({"duplicate-bus", b.id, "duplicate bus id"});
        if (b.p_load < 0 || b.q_load < 0)
            out.push_back({"negative-load", b.id, "load demand must be >= 0"});
        if (b.load_weight < 0)
            out.push_back({"negative-weight", b.id, "load weight must be >= 0"});
        if (b.has_source) {
            if (b.source_p_max < 0 || b.source_q_max < 0)
                out.push_back({"negative-source-cap", b.id, "source caps must be >= 0"});
        } else if (b.source_p_max != 0 || b.source_q_max != 0) {
            out.push_back({"source-cap-without-source", b.id,
                           "source caps present on a bus without a source"});
        }
    }

    seen.clear();
    for (const auto& l : pw.lines()) {
        if (!seen.insert(l.id).second)
            out.push_back({"duplicate-line", l.id, "duplicate line id"});
        if (l.from_bus == l.to_bus)
            out.push_back({"self-loop", l.id, "line endpoints must differ"});
        if (!pw.has_bus(l.from_bus) || !pw.has_bus(l.to_bus))
            out.push_back({"dangling-line", l.id, "line endpoint bus not in network"});
        if (l.r < 0 || l.x < 0)
            out.push_back({"negative-impedance", l.id, "r and x must be >= 0"});
        if (l.p_max <= 0 || l.q_max <= 0)
            out.push_back({"nonpositive-line-cap", l.id, "flow caps must be > 0"});
    }

    seen.clear();
    int centers = 0;
    std::map<std::string, int> terminals_per_bus;
    for (const auto& n : cm.nodes()) {
        if (!seen.insert(n.id).second)
            out.push_back({"duplicate-node", n.id, "duplicate comm node id"});
        if (n.bandwidth_cap <= 0)
            out.push_back({"nonpositive-bandwidth", n.id, "node bandwidth cap must be > 0"});
        if (n.forward_delay < 0)
            out.push_back({"negative-delay", n.id, "forwarding delay must be >= 0"});
        if (n.kind == CommKind::center) ++centers;
        if (n.kind == CommKind::terminal) {
            if (!pw.has_bus(n.attached_bus))
                out.push_back({"dangling-coupling", n.id,
                               "terminal attached to unknown bus " + n.attached_bus});
            else
                ++terminals_per_bus[n.attached_bus];
            if (n.required_bandwidth <= 0)
                out.push_back({"nonpositive-bandwidth", n.id,
                               "terminal required bandwidth must be > 0"});
            if (n.delay_cap <= 0)
                out.push_back({"nonpositive-delay-cap", n.id, "delay cap must be > 0"});
        }
    }
    if (centers != 1)
        out.push_back({"multiple-operation-centers", "",
                       centers == 0 ? "no operation center node"
                                    : "multiple operation centers"});

    // Coupling: every bus holding any automated switch needs exactly one
    // terminal, and no bus may have two.
    std::map<std::string, bool> bus_needs_terminal;
    for (const auto& b : pw.buses())
        if (b.has_load_switch) bus_needs_terminal[b.id] = true;
    for (const auto& l : pw.lines()) {
        if (l.switch_at_from) bus_needs_terminal[l.from_bus] = true;
        if (l.switch_at_to) bus_needs_terminal[l.to_bus] = true;
    }
    for (const auto& [bus_id, needed] : bus_needs_terminal) {
        (void)needed;
        if (terminals_per_bus.find(bus_id) == terminals_per_bus.end())
            out.push_back({"unmonitored-switch-bus", bus_id,
                           "bus has switches but no terminal device"});
    }
    for (const auto& [bus_id, count] : terminals_per_bus) {
        if (count > 1)
            out.push_back({"coupling-not-injective", bus_id,
                           "more than one terminal attached to bus"});
    }

    seen.clear();
    for (const auto& l : cm.links()) {
        if (!seen.insert(l.id).second)
            out.push_back({"duplicate-link", l.id, "duplicate comm link id"});
        if (l.end_a == l.end_b)
            out.push_back({"self-loop", l.id, "link endpoints must differ"});
        if (!cm.has_node(l.end_a) || !cm.has_node(l.end_b))
            out.push_back({"dangling-link", l.id, "link endpoint node not in network"});
        if (l.bandwidth_cap <= 0)
            out.push_back({"nonpositive-bandwidth", l.id, "link bandwidth cap must be > 0"});
        if (l.prop_delay < 0)
            out.push_back({"negative-delay", l.id, "propagation delay must be >= 0"});
    }

    for (const auto& b : pw.buses()) check_total(sc.bus_ok, b.id, "bus_ok", b.id, out);
    for (const auto& l : pw.lines()) {
        check_total(sc.line_ok, l.id, "line_ok", l.id, out);
        check_total(sc.line_initial, l.id, "line_initial", l.id, out);
    }
    for (const auto& n : cm.nodes()) check_total(sc.node_ok, n.id, "node_ok", n.id, out);
    for (const auto& l : cm.links()) check_total(sc.link_ok, l.id, "link_ok", l.id, out);
    for (const auto& b : pw.buses()) check_total(sc.load_initial, b.id, "load_initial", b.id, out);

    return out;
}

std::vector<std::pair<const Line*, int>> incident_lines(const CoupledNetwork& net,
                                                        const std::string& bus_id) {
    int bi = net.power.bus_index(bus_id);
    std::vector<std::pair<const Line*, int>> out;
    for (const auto& [k, mu] : net.power.incident_line_indices(bi))
        out.push_back({&net.power.lines()[static_cast<size_t>(k)], mu});
    return out;
}

std::vector<const CommLink*> incident_links(const CoupledNetwork& net,
                                            const std::string& node_id) {
    int ni = net.comm.node_index(node_id);
    std::vector<const CommLink*> out;
    for (int l : net.comm.incident_link_indices(ni))
        out.push_back(&net.comm.links()[static_cast<size_t>(l)]);
    return out;
}

} // namespace dsr
