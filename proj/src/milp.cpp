#include "dsr/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dsr {

void LinExpr::normalize() {
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> merged;
    for (const auto& [idx, coef] : terms) {
        if (!merged.empty() && merged.back().first == idx)
            merged.back().second += coef;
        else
            merged.push_back({idx, coef});
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& t) { return t.second == 0.0; }),
                 merged.end());
    terms = std::move(merged);
}

VarId MilpModel::add_var(const std::string& name, VarKind kind, double lb, double ub) {
    if (name.empty()) throw std::invalid_argument("variable name must be non-empty");
    if (name_index_.count(name))
        throw std::invalid_argument("duplicate variable name: " + name);
    if (kind == VarKind::binary) {
        lb = 0.0;
        ub = 1.0;
    }
    if (lb > ub)
        throw std::invalid_argument("variable " + name + " has lb > ub");
    Var v{name, kind, lb, ub};
    vars_.push_back(std::move(v));
    int idx = static_cast<int>(vars_.size()) - 1;
    name_index_.emplace(name, idx);
    return VarId{idx};
}

void MilpModel::check_expr(const LinExpr& expr) const {
    for (const auto& [idx, coef] : expr.terms) {
        (void)coef;
        if (idx < 0 || idx >= static_cast<int>(vars_.size()))
            throw std::invalid_argument("unregistered variable in expression (index " +
                                        std::to_string(idx) + ")");
    }
}

void MilpModel::add_constraint(LinExpr expr, Sense sense, double rhs, const std::string& tag) {
    if (tag.empty()) throw std::invalid_argument("constraint tag must be non-empty");
    check_expr(expr);
    expr.normalize();
    rhs -= expr.constant;
    expr.constant = 0.0;
    constraints_.push_back({std::move(expr), sense, rhs, tag});
}

void MilpModel::set_objective(LinExpr expr) {
    check_expr(expr);
    expr.normalize();
    objective_.expr = std::move(expr);
}

void MilpModel::set_bounds(VarId v, double lb, double ub) {
    if (!v.valid() || v.index >= static_cast<int>(vars_.size()))
        throw std::invalid_argument("unregistered variable");
    if (lb > ub)
        throw std::invalid_argument("variable " + vars_[static_cast<size_t>(v.index)].name +
                                    " would get lb > ub");
    vars_[static_cast<size_t>(v.index)].lb = lb;
    vars_[static_cast<size_t>(v.index)].ub = ub;
}

VarId MilpModel::var_id(const std::string& name) const {
    auto it = name_index_.find(name);
    if (it == name_index_.end()) throw std::out_of_range("unknown variable: " + name);
    return VarId{it->second};
}

bool MilpModel::has_var(const std::string& name) const { return name_index_.count(name) > 0; }

int MilpModel::integer_var_count() const {
    int n = 0;
    for (const auto& v : vars_)
        if (v.is_integral()) ++n;
    return n;
}

int MilpModel::free_integer_var_count() const {
    int n = 0;
    for (const auto& v : vars_)
        if (v.is_integral() && v.lb < v.ub) ++n;
    return n;
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::gap_limit: return "gap_limit";
        case SolveStatus::time_limit: return "time_limit";
    }
    return "unknown";
}

std::map<std::string, int> census(const MilpModel& model) {
    std::map<std::string, int> out;
    for (const auto& c : model.constraints()) ++out[c.tag];
    return out;
}

double eval_expr(const LinExpr& expr, const std::vector<double>& assignment) {
    double v = expr.constant;
    for (const auto& [idx, coef] : expr.terms)
        v += coef * assignment.at(static_cast<size_t>(idx));
    return v;
}

std::vector<std::string> check_solution(const MilpModel& model,
                                        const std::vector<double>& assignment,
                                        double tol) {
    std::vector<std::string> out;
    if (assignment.size() != model.vars().size()) {
        out.push_back("assignment size mismatch");
        return out;
    }
    for (size_t i = 0; i < model.vars().size(); ++i) {
        const Var& v = model.vars()[i];
        double x = assignment[i];
        if (x < v.lb - tol || x > v.ub + tol)
            out.push_back("bound violated: " + v.name);
        if (v.is_integral() && std::abs(x - std::round(x)) > tol)
            out.push_back("integrality violated: " + v.name);
    }
    for (size_t c = 0; c < model.constraints().size(); ++c) {
        const Constraint& con = model.constraints()[c];
        double lhs = eval_expr(con.expr, assignment);
        bool ok = true;
        switch (con.sense) {
            case Sense::le: ok = lhs <= con.rhs + tol; break;
            case Sense::ge: ok = lhs >= con.rhs - tol; break;
            case Sense::eq: ok = std::abs(lhs - con.rhs) <= tol; break;
        }
        if (!ok) {
            std::ostringstream os;
            os << "constraint " << c << " (" << con.tag << ") violated: lhs=" << lhs
               << " rhs=" << con.rhs;
            out.push_back(os.str());
        }
    }
    return out;
}

namespace {

std::string lp_name(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char ch : name) {
        bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                  (ch >= '0' && ch <= '9') || ch == '_' || ch == '.';
        out.push_back(ok ? ch : '_');
    }
    if (out.empty() || (out[0] >= '0' && out[0] <= '9') || out[0] == '.' ||
        out[0] == 'e' || out[0] == 'E')
        out = "x" + out;
    return out;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_expr(std::string& out, const LinExpr& expr, const std::vector<Var>& vars) {
    bool first = true;
    for (const auto& [idx, coef] : expr.terms) {
        if (coef >= 0)
            out += first ? "" : " + ";
        else
            out += first ? "- " : " - ";
        out += num(std::abs(coef));
        out += " ";
        out += lp_name(vars[static_cast<size_t>(idx)].name);
        first = false;
    }
    if (first) out += "0";
}

} // namespace

std::string to_lp_format(const MilpModel& model) {
    const auto& vars = model.vars();
    std::string out = "Maximize\n obj: ";
    append_expr(out, model.objective().expr, vars);
    out += "\nSubject To\n";
    int idx = 0;
    for (const auto& c : model.constraints()) {
        out += " " + lp_name(c.tag) + "_" + std::to_string(idx++) + ": ";
        append_expr(out, c.expr, vars);
        switch (c.sense) {
            case Sense::le: out += " <= "; break;
            case Sense::ge: out += " >= "; break;
            case Sense::eq: out += " = "; break;
        }
        out += num(c.rhs);
        out += "\n";
    }
    out += "Bounds\n";
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& v : vars) {
        if (v.kind == VarKind::binary) continue;
        out += " ";
        if (v.lb == -inf && v.ub == inf) {
            out += lp_name(v.name) + " free";
        } else {
            if (v.lb == -inf)
                out += "-inf <= ";
            else
                out += num(v.lb) + " <= ";
            out += lp_name(v.name);
            if (v.ub == inf)
                out += " <= +inf";
            else
                out += " <= " + num(v.ub);
        }
        out += "\n";
    }
    std::string bins, gens;
    for (const auto& v : vars) {
        if (v.kind == VarKind::binary) bins += " " + lp_name(v.name) + "\n";
        if (v.kind == VarKind::integer) gens += " " + lp_name(v.name) + "\n";
    }
    if (!bins.empty()) out += "Binaries\n" + bins;
    if (!gens.empty()) out += "Generals\n" + gens;
    out += "End\n";
    return out;
}

} // namespace dsr
