#include "dsr/casefile.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace dsr {

std::string format_number(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    for (int prec = 15; prec <= 17; ++prec) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

struct Token {
    std::string text;
    int col = 0;
};

struct Record {
    int line = 0;
    std::vector<Token> tokens;
};

// key=value pairs with bare keys treated as boolean flags
struct Fields {
    std::map<std::string, std::pair<std::string, int>> kv; // key -> (value, col)
    int line = 0;
};

class Parser {
public:
    explicit Parser(const std::string& text, CaseParseResult& result)
        : result_(result) {
        std::istringstream in(text);
        std::string raw;
        int number = 0;
        while (std::getline(in, raw)) {
            ++number;
            auto hash = raw.find('#');
            if (hash != std::string::npos) raw = raw.substr(0, hash);
            Record rec;
            rec.line = number;
            size_t i = 0;
            while (i < raw.size()) {
                if (std::isspace(static_cast<unsigned char>(raw[i]))) {
                    ++i;
                    continue;
                }
                size_t start = i;
                while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
                rec.tokens.push_back({raw.substr(start, i - start), static_cast<int>(start) + 1});
            }
            if (!rec.tokens.empty()) records_.push_back(std::move(rec));
        }
    }

    void error(int line, int col, const std::string& message) {
        result_.errors.push_back({line, col, message});
    }

    void run() {
        if (records_.empty()) {
            error(0, 0, "empty document");
            return;
        }
        const Record& header = records_[0];
        if (header.tokens.size() != 2 || header.tokens[0].text != "dsr-case") {
            error(header.line, header.tokens[0].col, "expected header 'dsr-case <version>'");
            return;
        }
        if (header.tokens[1].text != "1") {
            error(header.line, header.tokens[1].col,
                  "unsupported format version " + header.tokens[1].text);
            return;
        }

        std::string section;
        for (size_t r = 1; r < records_.size(); ++r) {
            const Record& rec = records_[r];
            const std::string& first = rec.tokens[0].text;
            if (first.size() >= 2 && first.front() == '[' && first.back() == ']') {
                section = first.substr(1, first.size() - 2);
                if (section != "defaults" && section != "buses" && section != "lines" &&
                    section != "comm.nodes" && section != "comm.links" && section != "scenario")
                    error(rec.line, rec.tokens[0].col, "unknown section [" + section + "]");
                continue;
            }
            if (section.empty()) {
                error(rec.line, rec.tokens[0].col, "record outside any section");
                continue;
            }
            dispatch(section, rec);
        }
    }

    Fields parse_fields(const Record& rec, size_t start) {
        Fields f;
        f.line = rec.line;
        for (size_t i = start; i < rec.tokens.size(); ++i) {
            const Token& t = rec.tokens[i];
            auto eq = t.text.find('=');
            std::string key = eq == std::string::npos ? t.text : t.text.substr(0, eq);
            std::string value = eq == std::string::npos ? "1" : t.text.substr(eq + 1);
            if (key.empty()) {
                error(rec.line, t.col, "empty key");
                continue;
            }
            if (f.kv.count(key))
                error(rec.line, t.col, "duplicate key '" + key + "'");
            else
                f.kv[key] = {value, t.col};
        }
        return f;
    }

    double number_field(Fields& f, const std::string& key, double dflt, bool* present = nullptr) {
        auto it = f.kv.find(key);
        if (present) *present = it != f.kv.end();
        if (it == f.kv.end()) return dflt;
        const char* s = it->second.first.c_str();
        char* end = nullptr;
        double v = std::strtod(s, &end);
        if (end == s || *end != '\0') {
            error(f.line, it->second.second, "number expected for '" + key + "'");
            v = dflt;
        }
        consumed_.insert(&it->second);
        return v;
    }

    std::string string_field(Fields& f, const std::string& key, const std::string& dflt = "") {
        auto it = f.kv.find(key);
        if (it == f.kv.end()) return dflt;
        consumed_.insert(&it->second);
        return it->second.first;
    }

    bool flag_field(Fields& f, const std::string& key) {
        auto it = f.kv.find(key);
        if (it == f.kv.end()) return false;
        consumed_.insert(&it->second);
        const std::string& v = it->second.first;
        if (v != "0" && v != "1")
            error(f.line, it->second.second, "flag '" + key + "' must be 0 or 1");
        return v == "1";
    }

    void reject_unknown(Fields& f) {
        for (auto& [key, value] : f.kv)
            if (!consumed_.count(&value))
                error(f.line, value.second, "unknown field '" + key + "'");
        consumed_.clear();
    }

    void dispatch(const std::string& section, const Record& rec) {
        if (section == "defaults") {
            Fields f = parse_fields(rec, 0);
            default_w_ = number_field(f, "w_mbps", default_w_);
            default_tau_ = number_field(f, "tau_ms", default_tau_);
            result_.cfg.delta = number_field(f, "delta", result_.cfg.delta);
            result_.cfg.v_ref = number_field(f, "v_ref", result_.cfg.v_ref);
            result_.cfg.gap = number_field(f, "gap", result_.cfg.gap);
            result_.cfg.epsilon = number_field(f, "epsilon", result_.cfg.epsilon);
            result_.cfg.big_m_voltage = number_field(f, "big_m_voltage", result_.cfg.big_m_voltage);
            result_.cfg.big_m_commodity =
                number_field(f, "big_m_commodity", result_.cfg.big_m_commodity);
            bool dummy = false;
            double v = number_field(f, "enforce_load_switch_comm", 0, &dummy);
            if (dummy) result_.cfg.enforce_load_switch_comm = v != 0;
            v = number_field(f, "require_both_ends_observed", 1, &dummy);
            if (dummy) result_.cfg.require_both_ends_observed_to_close = v != 0;
            reject_unknown(f);
            return;
        }

        if (section == "buses") {
            Fields f = parse_fields(rec, 1);
            Bus b;
            b.id = rec.tokens[0].text;
            b.p_load = number_field(f, "p", 0);
            b.q_load = number_field(f, "q", 0);
            b.load_weight = number_field(f, "w", 1);
            b.has_load_switch = flag_field(f, "switch");
            b.has_source = flag_field(f, "source");
            b.source_p_max = number_field(f, "p_max", 0);
            b.source_q_max = number_field(f, "q_max", 0);
            reject_unknown(f);
            if (!ids_.insert("bus:" + b.id).second)
                error(rec.line, rec.tokens[0].col, "duplicate bus id '" + b.id + "'");
            buses_.push_back(std::move(b));
            return;
        }

        if (section == "lines") {
            Fields f = parse_fields(rec, 1);
            Line l;
            l.id = rec.tokens[0].text;
            l.from_bus = string_field(f, "from");
            l.to_bus = string_field(f, "to");
            l.r = number_field(f, "r", 0);
            l.x = number_field(f, "x", 0);
            l.p_max = number_field(f, "p_max", 0);
            l.q_max = number_field(f, "q_max", 0);
            l.switch_at_from = flag_field(f, "sw_from");
            l.switch_at_to = flag_field(f, "sw_to");
            reject_unknown(f);
            if (l.from_bus.empty() || l.to_bus.empty())
                error(rec.line, rec.tokens[0].col, "line needs from= and to=");
            if (!ids_.insert("line:" + l.id).second)
                error(rec.line, rec.tokens[0].col, "duplicate line id '" + l.id + "'");
            lines_.push_back(std::move(l));
            return;
        }

        if (section == "comm.nodes") {
            Fields f = parse_fields(rec, 1);
            CommNode n;
            n.id = rec.tokens[0].text;
            std::string kind = string_field(f, "kind");
            if (kind == "center")
                n.kind = CommKind::center;
            else if (kind == "forwarder")
                n.kind = CommKind::forwarder;
            else if (kind == "terminal")
                n.kind = CommKind::terminal;
            else
                error(rec.line, rec.tokens[0].col, "kind must be center|forwarder|terminal");
            n.bandwidth_cap = number_field(f, "bw", 0);
            n.forward_delay = number_field(f, "fwd", 0);
            if (n.kind == CommKind::terminal) {
                n.attached_bus = string_field(f, "bus");
                n.required_bandwidth = number_field(f, "w", default_w_);
                n.delay_cap = number_field(f, "tau", default_tau_);
            } else {
                // reject terminal-only fields on other kinds
                if (f.kv.count("bus") || f.kv.count("w") || f.kv.count("tau"))
                    error(rec.line, rec.tokens[0].col,
                          "bus/w/tau only apply to terminal nodes");
                string_field(f, "bus");
                number_field(f, "w", 0);
                number_field(f, "tau", 0);
            }
            reject_unknown(f);
            if (!ids_.insert("node:" + n.id).second)
                error(rec.line, rec.tokens[0].col, "duplicate node id '" + n.id + "'");
            nodes_.push_back(std::move(n));
            return;
        }

        if (section == "comm.links") {
            Fields f = parse_fields(rec, 1);
            CommLink l;
            l.id = rec.tokens[0].text;
            l.end_a = string_field(f, "a");
            l.end_b = string_field(f, "b");
            l.bandwidth_cap = number_field(f, "bw", 0);
            l.prop_delay = number_field(f, "delay", 0);
            reject_unknown(f);
            if (l.end_a.empty() || l.end_b.empty())
                error(rec.line, rec.tokens[0].col, "link needs a= and b=");
            if (!ids_.insert("link:" + l.id).second)
                error(rec.line, rec.tokens[0].col, "duplicate link id '" + l.id + "'");
            links_.push_back(std::move(l));
            return;
        }

        // scenario
        if (rec.tokens.size() < 2) {
            error(rec.line, rec.tokens[0].col, "scenario record needs an element kind and id");
            return;
        }
        const std::string& kind = rec.tokens[0].text;
        const std::string& id = rec.tokens[1].text;
        Fields f = parse_fields(rec, 2);
        if (kind == "bus") {
            scenario_bus_ok_[id] = static_cast<int>(number_field(f, "ok", 1));
        } else if (kind == "line") {
            scenario_line_ok_[id] = static_cast<int>(number_field(f, "ok", 1));
            scenario_line_init_[id] = static_cast<int>(number_field(f, "initial", 0));
        } else if (kind == "node") {
            scenario_node_ok_[id] = static_cast<int>(number_field(f, "ok", 1));
        } else if (kind == "link") {
            scenario_link_ok_[id] = static_cast<int>(number_field(f, "ok", 1));
        } else if (kind == "load") {
            scenario_load_init_[id] = static_cast<int>(number_field(f, "initial", 0));
        } else {
            error(rec.line, rec.tokens[0].col,
                  "scenario element must be bus|line|node|link|load");
        }
        reject_unknown(f);
    }

    void finish() {
        result_.net.power = PowerNetwork(buses_, lines_);
        result_.net.comm = CommNetwork(nodes_, links_);

        // scenario maps are total: unspecified elements default to healthy /
        // open / shed, explicit entries must reference known elements
        auto build_map = [&](const std::map<std::string, int>& given, auto&& known,
                             const char* what, int dflt, std::map<std::string, int>& out) {
            for (const auto& [id, v] : given) {
                if (!known(id))
                    result_.errors.push_back(
                        {0, 0, std::string("scenario ") + what + " '" + id + "' is not defined"});
                out[id] = v;
            }
            (void)dflt;
        };
        for (const auto& b : result_.net.power.buses()) {
            result_.scenario.bus_ok[b.id] = 1;
            result_.scenario.load_initial[b.id] = 0;
        }
        for (const auto& l : result_.net.power.lines()) {
            result_.scenario.line_ok[l.id] = 1;
            result_.scenario.line_initial[l.id] = 0;
        }
        for (const auto& n : result_.net.comm.nodes()) result_.scenario.node_ok[n.id] = 1;
        for (const auto& l : result_.net.comm.links()) result_.scenario.link_ok[l.id] = 1;

        build_map(scenario_bus_ok_, [&](const std::string& id) { return result_.net.power.has_bus(id); },
                  "bus", 1, result_.scenario.bus_ok);
        build_map(scenario_line_ok_, [&](const std::string& id) { return result_.net.power.has_line(id); },
                  "line", 1, result_.scenario.line_ok);
        build_map(scenario_line_init_, [&](const std::string& id) { return result_.net.power.has_line(id); },
                  "line", 0, result_.scenario.line_initial);
        build_map(scenario_node_ok_, [&](const std::string& id) { return result_.net.comm.has_node(id); },
                  "node", 1, result_.scenario.node_ok);
        build_map(scenario_link_ok_, [&](const std::string& id) { return result_.net.comm.has_link(id); },
                  "link", 1, result_.scenario.link_ok);
        build_map(scenario_load_init_, [&](const std::string& id) { return result_.net.power.has_bus(id); },
                  "load", 0, result_.scenario.load_initial);

        for (const auto& v : validate(result_.net, result_.scenario))
            result_.errors.push_back({0, 0, v.code + " (" + v.where + "): " + v.message});
        result_.ok = result_.errors.empty();
    }

private:
    CaseParseResult& result_;
    std::vector<Record> records_;
    std::set<const std::pair<std::string, int>*> consumed_;
    std::set<std::string> ids_;
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<CommNode> nodes_;
    std::vector<CommLink> links_;
    std::map<std::string, int> scenario_bus_ok_, scenario_line_ok_, scenario_line_init_,
        scenario_node_ok_, scenario_link_ok_, scenario_load_init_;
    double default_w_ = 2.0;
    double default_tau_ = 10.0;
};

} // namespace

CaseParseResult parse_case(const std::string& text) {
    CaseParseResult result;
    Parser p(text, result);
    p.run();
    if (result.errors.empty()) p.finish();
    result.ok = result.errors.empty();
    return result;
}

std::string emit_case(const CoupledNetwork& net, const Scenario& sc,
                      const FormulationConfig& cfg) {
    std::ostringstream out;
    auto num = [](double v) { return format_number(v); };

    // Terminal w/tau defaults: emit the dominant values in [defaults] and
    // only per-terminal overrides.
    std::map<double, int> w_votes, tau_votes;
    for (int ti : net.comm.terminal_indices()) {
        const CommNode& t = net.comm.nodes()[static_cast<size_t>(ti)];
        ++w_votes[t.required_bandwidth];
        ++tau_votes[t.delay_cap];
    }
    auto dominant = [](const std::map<double, int>& votes, double dflt) {
        double best = dflt;
        int count = -1;
        for (const auto& [v, n] : votes)
            if (n > count) {
                count = n;
                best = v;
            }
        return best;
    };
    double w_default = dominant(w_votes, 2.0);
    double tau_default = dominant(tau_votes, 10.0);

    out << "dsr-case 1\n\n[defaults]\n";
    out << "w_mbps=" << num(w_default) << "\n";
    out << "tau_ms=" << num(tau_default) << "\n";
    out << "delta=" << num(cfg.delta) << "\n";
    out << "v_ref=" << num(cfg.v_ref) << "\n";
    out << "gap=" << num(cfg.gap) << "\n";
    if (cfg.epsilon > 0) out << "epsilon=" << num(cfg.epsilon) << "\n";
    if (cfg.big_m_voltage > 0) out << "big_m_voltage=" << num(cfg.big_m_voltage) << "\n";
    if (cfg.big_m_commodity > 0) out << "big_m_commodity=" << num(cfg.big_m_commodity) << "\n";
    if (cfg.enforce_load_switch_comm) out << "enforce_load_switch_comm=1\n";
    if (!cfg.require_both_ends_observed_to_close) out << "require_both_ends_observed=0\n";

    out << "\n[buses]\n";
    for (const auto& b : net.power.buses()) {
        out << b.id;
        if (b.p_load != 0) out << " p=" << num(b.p_load);
        if (b.q_load != 0) out << " q=" << num(b.q_load);
        if (b.load_weight != 1) out << " w=" << num(b.load_weight);
        if (b.has_load_switch) out << " switch";
        if (b.has_source)
            out << " source p_max=" << num(b.source_p_max) << " q_max=" << num(b.source_q_max);
        out << "\n";
    }

    out << "\n[lines]\n";
    for (const auto& l : net.power.lines()) {
        out << l.id << " from=" << l.from_bus << " to=" << l.to_bus << " r=" << num(l.r)
            << " x=" << num(l.x) << " p_max=" << num(l.p_max) << " q_max=" << num(l.q_max);
        if (l.switch_at_from) out << " sw_from";
        if (l.switch_at_to) out << " sw_to";
        out << "\n";
    }

    out << "\n[comm.nodes]\n";
    for (const auto& n : net.comm.nodes()) {
        out << n.id << " kind="
            << (n.kind == CommKind::center
                    ? "center"
                    : n.kind == CommKind::forwarder ? "forwarder" : "terminal");
        out << " bw=" << num(n.bandwidth_cap) << " fwd=" << num(n.forward_delay);
        if (n.kind == CommKind::terminal) {
            out << " bus=" << n.attached_bus;
            if (n.required_bandwidth != w_default) out << " w=" << num(n.required_bandwidth);
            if (n.delay_cap != tau_default) out << " tau=" << num(n.delay_cap);
        }
        out << "\n";
    }

    out << "\n[comm.links]\n";
    for (const auto& l : net.comm.links()) {
        out << l.id << " a=" << l.end_a << " b=" << l.end_b << " bw=" << num(l.bandwidth_cap)
            << " delay=" << num(l.prop_delay) << "\n";
    }

    out << "\n[scenario]\n";
    auto flag = [](const std::map<std::string, int>& m, const std::string& id, int dflt) {
        auto it = m.find(id);
        return it == m.end() ? dflt : it->second;
    };
    for (const auto& b : net.power.buses())
        if (!flag(sc.bus_ok, b.id, 1)) out << "bus " << b.id << " ok=0\n";
    for (const auto& l : net.power.lines()) {
        int ok = flag(sc.line_ok, l.id, 1);
        int init = flag(sc.line_initial, l.id, 0);
        if (ok != 1 || init != 0)
            out << "line " << l.id << " ok=" << ok << " initial=" << init << "\n";
    }
    for (const auto& n : net.comm.nodes())
        if (!flag(sc.node_ok, n.id, 1)) out << "node " << n.id << " ok=0\n";
    for (const auto& l : net.comm.links())
        if (!flag(sc.link_ok, l.id, 1)) out << "link " << l.id << " ok=0\n";
    for (const auto& b : net.power.buses())
        if (flag(sc.load_initial, b.id, 0)) out << "load " << b.id << " initial=1\n";

    return out.str();
}

} // namespace dsr
