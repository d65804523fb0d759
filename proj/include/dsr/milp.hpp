#pragma once

// Language-agnostic mixed-integer linear program representation. The model
// is a plain container of variables, tagged linear constraints, and a single
// maximization objective; solver backends live in solver.hpp.

#include <map>
#include <string>
#include <vector>

namespace dsr {

enum class VarKind { binary, integer, continuous };

struct VarId {
    int index = -1;
    bool valid() const { return index >= 0; }
};

struct Var {
    std::string name;
    VarKind kind = VarKind::continuous;
    double lb = 0.0;
    double ub = 0.0;

    bool is_integral() const { return kind != VarKind::continuous; }
};

// Sum of coefficient*variable terms plus a constant. Terms are normalized
// (sorted by variable, duplicates merged) when a constraint is added.
struct LinExpr {
    std::vector<std::pair<int, double>> terms; // (var index, coefficient)
    double constant = 0.0;

    LinExpr& add(VarId v, double coef) {
        terms.push_back({v.index, coef});
        return *this;
    }
    LinExpr& add_constant(double c) {
        constant += c;
        return *this;
    }
    void normalize();
};

enum class Sense { le, eq, ge };

struct Constraint {
    LinExpr expr;   // constant folded into rhs on add
    Sense sense = Sense::le;
    double rhs = 0.0;
    std::string tag; // equation label, e.g. "eq14"
};

struct Objective {
    // Maximization only; minimization is expressed by negating coefficients.
    LinExpr expr;
};

class MilpModel {
public:
    // Throws std::invalid_argument on duplicate names, bad bounds, or an
    // empty tag. Binary variables get implicit {0,1} bounds.
    VarId add_var(const std::string& name, VarKind kind, double lb = 0.0, double ub = 0.0);
    VarId add_binary(const std::string& name) { return add_var(name, VarKind::binary, 0.0, 1.0); }

    // Throws std::invalid_argument when the expression references a variable
    // index outside this model ("unregistered variable") or the tag is empty.
    void add_constraint(LinExpr expr, Sense sense, double rhs, const std::string& tag);
    void set_objective(LinExpr expr);

    // Tighten a variable's bounds after creation (used to pin decisions such
    // as latched loads). Throws if the result is an empty interval.
    void set_bounds(VarId v, double lb, double ub);

    const std::vector<Var>& vars() const { return vars_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const Objective& objective() const { return objective_; }

    const Var& var(VarId v) const { return vars_.at(static_cast<size_t>(v.index)); }
    VarId var_id(const std::string& name) const; // throws std::out_of_range
    bool has_var(const std::string& name) const;

    int integer_var_count() const;       // all integral-kind variables
    int free_integer_var_count() const;  // integral variables with lb < ub

private:
    void check_expr(const LinExpr& expr) const;

    std::vector<Var> vars_;
    std::map<std::string, int> name_index_;
    std::vector<Constraint> constraints_;
    Objective objective_;
};

enum class SolveStatus { optimal, infeasible, gap_limit, time_limit };

struct Solution {
    SolveStatus status = SolveStatus::infeasible;
    double objective_value = 0.0;
    std::vector<double> assignment; // by variable index
    double gap = 0.0;               // relative optimality gap

    double value(VarId v) const { return assignment.at(static_cast<size_t>(v.index)); }
    bool has_assignment() const { return !assignment.empty(); }
};

const char* to_string(SolveStatus s);

// Per-tag constraint counts; the sum over tags equals constraints().size().
std::map<std::string, int> census(const MilpModel& model);

// Re-checks an assignment against every stored constraint, variable bound,
// and integrality requirement. Returns human-readable violation strings;
// empty means feasible within `tol`.
std::vector<std::string> check_solution(const MilpModel& model,
                                        const std::vector<double>& assignment,
                                        double tol = 1e-6);

double eval_expr(const LinExpr& expr, const std::vector<double>& assignment);

// CPLEX-style LP-format text (Maximize / Subject To / Bounds / Binaries /
// Generals sections) for debugging against external tools.
std::string to_lp_format(const MilpModel& model);

} // namespace dsr
