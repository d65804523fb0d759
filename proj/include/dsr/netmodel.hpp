#pragma once

// Immutable graph data model for the coupled power / communication networks
// plus the per-disaster equipment-state overlay. All types are value types
// and never mutate after construction, so they can be shared freely across
// concurrent planner or verifier runs.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dsr {

struct Bus {
    std::string id;
    bool has_source = false;
    double p_load = 0.0;      // kW
    double q_load = 0.0;      // kvar
    double load_weight = 1.0; // priority weight, dimensionless
    bool has_load_switch = false;
    double source_p_max = 0.0; // valid iff has_source
    double source_q_max = 0.0; // valid iff has_source
};

struct Line {
    std::string id;
    std::string from_bus; // flow orientation: positive flow runs from -> to
    std::string to_bus;
    double r = 0.0;
    double x = 0.0;
    double p_max = 0.0;
    double q_max = 0.0;
    bool switch_at_from = false;
    bool switch_at_to = false;

    bool controllable() const { return switch_at_from || switch_at_to; }
};

enum class CommKind { terminal, forwarder, center };

struct CommNode {
    std::string id;
    CommKind kind = CommKind::forwarder;
    double bandwidth_cap = 0.0; // Mbps
    double forward_delay = 0.0; // ms
    // terminal-only fields
    std::string attached_bus;
    double required_bandwidth = 0.0; // Mbps
    double delay_cap = 0.0;          // ms
};

struct CommLink {
    std::string id;
    std::string end_a;
    std::string end_b;
    double bandwidth_cap = 0.0; // Mbps
    double prop_delay = 0.0;    // ms
};

// Equipment-state flags and initial operating state for one disaster case.
// All maps are total over the corresponding element sets; 1 = healthy /
// closed, 0 = failed / open.
struct Scenario {
    std::map<std::string, int> bus_ok;      // per bus id
    std::map<std::string, int> line_ok;     // per line id
    std::map<std::string, int> node_ok;     // per comm node id
    std::map<std::string, int> link_ok;     // per comm link id
    std::map<std::string, int> line_initial; // initial open/closed state
    std::map<std::string, int> load_initial; // initial load-switch state
};

class PowerNetwork {
public:
    PowerNetwork() = default;
    PowerNetwork(std::vector<Bus> buses, std::vector<Line> lines);

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }

    bool has_bus(const std::string& id) const;
    bool has_line(const std::string& id) const;
    const Bus& bus(const std::string& id) const;     // throws std::out_of_range
    const Line& line(const std::string& id) const;   // throws std::out_of_range
    int bus_index(const std::string& id) const;
    int line_index(const std::string& id) const;

    // Lines touching a bus with the orientation sign (+1 when the bus is the
    // line's from end, -1 when it is the to end), ordered by line id. A
    // parallel line appears once per edge.
    const std::vector<std::pair<int, int>>& incident_line_indices(int bus_index) const;

private:
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::map<std::string, int> bus_index_;
    std::map<std::string, int> line_index_;
    std::vector<std::vector<std::pair<int, int>>> incidence_; // per bus: (line index, mu)
};

class CommNetwork {
public:
    CommNetwork() = default;
    CommNetwork(std::vector<CommNode> nodes, std::vector<CommLink> links);

    const std::vector<CommNode>& nodes() const { return nodes_; }
    const std::vector<CommLink>& links() const { return links_; }

    bool has_node(const std::string& id) const;
    bool has_link(const std::string& id) const;
    const CommNode& node(const std::string& id) const;
    const CommLink& link(const std::string& id) const;
    int node_index(const std::string& id) const;
    int link_index(const std::string& id) const;

    // Links incident to a node, ordered by link id.
    const std::vector<int>& incident_link_indices(int node_index) const;

    // Index of the unique center node, or -1 when absent/ambiguous.
    int center_index() const { return center_index_; }
    // Terminal node indices in id order.
    const std::vector<int>& terminal_indices() const { return terminal_indices_; }
    // Terminal index attached to a bus id, or -1.
    int terminal_for_bus(const std::string& bus_id) const;

private:
    std::vector<CommNode> nodes_;
    std::vector<CommLink> links_;
    std::map<std::string, int> node_index_;
    std::map<std::string, int> link_index_;
    std::vector<std::vector<int>> incidence_;
    std::vector<int> terminal_indices_;
    std::map<std::string, int> bus_terminal_;
    int center_index_ = -1;
};

struct CoupledNetwork {
    PowerNetwork power;
    CommNetwork comm;
};

struct Violation {
    std::string code;    // short machine-readable tag, e.g. "multiple-centers"
    std::string where;   // offending element id(s)
    std::string message;
};

// Structural validation of all type invariants. Violations are returned as
// data; an empty report means the instance is well-formed. Pure function.
std::vector<Violation> validate(const CoupledNetwork& net, const Scenario& sc);

// Lines touching `bus_id` with orientation sign, ordered by line id.
// Throws std::out_of_range for an unknown bus.
std::vector<std::pair<const Line*, int>> incident_lines(const CoupledNetwork& net,
                                                        const std::string& bus_id);

// Links touching `node_id`, ordered by link id. Throws std::out_of_range.
std::vector<const CommLink*> incident_links(const CoupledNetwork& net,
                                            const std::string& node_id);

} // namespace dsr
