#include "dsr/solver.hpp"

#include "dsr/simplex.hpp"

#include "json.hpp" // vendored nlohmann/json

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace dsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntTol = 1e-7;

double now_s() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

struct BbNode {
    double bound = 0.0;
    std::vector<double> lb, ub;
};

struct BbNodeCompare {
    bool operator()(const BbNode& a, const BbNode& b) const { return a.bound < b.bound; }
};

} // namespace

Solution bb_solve(const MilpModel& model, const SolveOptions& opts) {
    int free_ints = model.free_integer_var_count();
    if (free_ints > opts.bb_int_var_guard)
        throw std::invalid_argument(
            "bb_solve size guard exceeded (" + std::to_string(free_ints) + " > " +
            std::to_string(opts.bb_int_var_guard) + " free integer variables); use an external backend");

    const double t_start = now_s();
    size_t nv = model.vars().size();
    std::vector<double> root_lb(nv), root_ub(nv);
    std::vector<int> int_vars;
    for (size_t j = 0; j < nv; ++j) {
        root_lb[j] = model.vars()[j].lb;
        root_ub[j] = model.vars()[j].ub;
        if (model.vars()[j].is_integral()) int_vars.push_back(static_cast<int>(j));
    }

    std::priority_queue<BbNode, std::vector<BbNode>, BbNodeCompare> open;
    open.push({kInf, root_lb, root_ub});

    Solution best;
    best.status = SolveStatus::infeasible;
    bool have_incumbent = false;
    double incumbent = -kInf;
    long nodes = 0;

    if (opts.warm_start && check_solution(model, *opts.warm_start, 1e-7).empty()) {
        best.assignment = *opts.warm_start;
        best.objective_value = eval_expr(model.objective().expr, best.assignment);
        incumbent = best.objective_value;
        have_incumbent = true;
    }

    auto finish = [&](SolveStatus st, double bound) {
        Solution out = best;
        out.status = have_incumbent ? st : (st == SolveStatus::optimal ? SolveStatus::infeasible : st);
        if (have_incumbent) {
            double denom = std::max(1.0, std::abs(incumbent));
            out.gap = std::max(0.0, (bound - incumbent) / denom);
        }
        return out;
    };

    while (!open.empty()) {
        double best_bound = open.top().bound;
        if (have_incumbent &&
            best_bound - incumbent <= opts.gap * std::max(1.0, std::abs(incumbent)))
            return finish(SolveStatus::optimal, best_bound);
        if (now_s() - t_start > opts.time_limit_s || ++nodes > 2000000)
            return finish(SolveStatus::time_limit, best_bound);

        BbNode node = open.top();
        open.pop();

        LpResult lp = solve_lp(model, node.lb, node.ub);
        if (lp.status == LpStatus::infeasible) continue;
        if (lp.status == LpStatus::unbounded)
            throw std::runtime_error("bb_solve: relaxation is unbounded");
        if (lp.status == LpStatus::iteration_limit)
            throw std::runtime_error("bb_solve: LP did not converge");
        if (have_incumbent && lp.objective <= incumbent + 1e-9) continue;

        int branch_var = -1;
        double branch_frac = 0.0;
        for (int j : int_vars) {
            double v = lp.x[static_cast<size_t>(j)];
            double frac = v - std::floor(v);
            double dist = std::min(frac, 1.0 - frac);
            if (dist > kIntTol && dist > branch_frac) {
                branch_frac = dist;
                branch_var = j;
            }
        }

        if (branch_var < 0) {
            // Integral: round and accept as incumbent.
            for (int j : int_vars)
                lp.x[static_cast<size_t>(j)] = std::round(lp.x[static_cast<size_t>(j)]);
            if (!have_incumbent || lp.objective > incumbent) {
                incumbent = lp.objective;
                have_incumbent = true;
                best.assignment = lp.x;
                best.objective_value = lp.objective;
            }
            continue;
        }

        double v = lp.x[static_cast<size_t>(branch_var)];
        BbNode down = node, up = node;
        down.bound = lp.objective;
        up.bound = lp.objective;
        down.ub[static_cast<size_t>(branch_var)] = std::floor(v);
        up.lb[static_cast<size_t>(branch_var)] = std::ceil(v);
        if (down.lb[static_cast<size_t>(branch_var)] <= down.ub[static_cast<size_t>(branch_var)])
            open.push(std::move(down));
        if (up.lb[static_cast<size_t>(branch_var)] <= up.ub[static_cast<size_t>(branch_var)])
            open.push(std::move(up));
    }

    if (!have_incumbent) {
        Solution out;
        out.status = SolveStatus::infeasible;
        return out;
    }
    best.status = SolveStatus::optimal;
    best.gap = 0.0;
    return best;
}

namespace {

// scipy.optimize.milp driver; kept as a standalone script so the subprocess
// is a plain python3 invocation with JSON files on both ends.
const char* kPythonDriver = R"PY(
import json, sys
import numpy as np
from scipy import sparse
from scipy.optimize import milp, LinearConstraint, Bounds

def num(v):
    if v >= 1e30:
        return np.inf
    if v <= -1e30:
        return -np.inf
    return v

spec = json.load(open(sys.argv[1]))
nv = len(spec["vars"])
c = np.zeros(nv)
for idx, coef in spec["obj"]:
    c[idx] = coef
integrality = np.array([1 if k in ("b", "i") else 0 for k in spec["kinds"]])
lb = np.array([num(v) for v in spec["lb"]])
ub = np.array([num(v) for v in spec["ub"]])
cons = []
ri, rj, rv, clo, cup = [], [], [], [], []
for r, con in enumerate(spec["cons"]):
    for idx, coef in con["t"]:
        ri.append(r); rj.append(idx); rv.append(coef)
    rhs = con["r"]
    if con["s"] == "le":
        clo.append(-np.inf); cup.append(rhs)
    elif con["s"] == "ge":
        clo.append(rhs); cup.append(np.inf)
    else:
        clo.append(rhs); cup.append(rhs)
nc = len(spec["cons"])
if nc:
    A = sparse.csr_matrix((rv, (ri, rj)), shape=(nc, nv))
    cons = [LinearConstraint(A, np.array(clo), np.array(cup))]
options = {"mip_rel_gap": spec.get("gap", 1e-4), "presolve": True}
tl = spec.get("time_limit", 0.0)
if tl and tl > 0 and np.isfinite(tl):
    options["time_limit"] = tl
res = milp(c=-c, constraints=cons, integrality=integrality,
           bounds=Bounds(lb, ub), options=options)
out = {"status_code": int(res.status), "message": str(res.message)}
if res.x is not None:
    out["x"] = [float(v) for v in res.x]
    out["objective"] = float(-res.fun)
    g = getattr(res, "mip_gap", None)
    out["gap"] = float(g) if g is not None and np.isfinite(g) else 0.0
json.dump(out, open(sys.argv[2], "w"))
)PY";

std::string python_exe() {
    const char* env = std::getenv("DSR_PYTHON");
    return env && *env ? env : "python3";
}

double bounded(double v) {
    if (v == kInf) return 1e30;
    if (v == -kInf) return -1e30;
    return v;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("dsr-milp-" + std::to_string(std::rand()) + "-" +
                                     std::to_string(attempt));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create temp directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

} // namespace

bool external_backend_available() {
    static int cached = -1;
    if (cached < 0) {
        std::string cmd = python_exe() +
                          " -c \"import scipy.optimize, numpy\" >/dev/null 2>&1";
        cached = std::system(cmd.c_str()) == 0 ? 1 : 0;
    }
    return cached == 1;
}

Solution external_solve(const MilpModel& model, const SolveOptions& opts) {
    using nlohmann::json;

    // A verified warm start becomes a valid objective floor: every optimum
    // survives, and the solver gets a strong primal prune level.
    bool have_floor = false;
    double floor_value = 0.0;
    std::vector<double> warm;
    if (opts.warm_start && check_solution(model, *opts.warm_start, 1e-7).empty()) {
        warm = *opts.warm_start;
        floor_value = eval_expr(model.objective().expr, warm);
        have_floor = true;
    }

    json spec;
    spec["gap"] = opts.gap;
    if (std::isfinite(opts.time_limit_s)) spec["time_limit"] = opts.time_limit_s;
    json kinds = json::array(), lb = json::array(), ub = json::array();
    for (const auto& v : model.vars()) {
        kinds.push_back(v.kind == VarKind::binary ? "b"
                        : v.kind == VarKind::integer ? "i" : "c");
        lb.push_back(bounded(v.lb));
        ub.push_back(bounded(v.ub));
    }
    spec["vars"] = json::array();
    for (const auto& v : model.vars()) spec["vars"].push_back(v.name);
    spec["kinds"] = std::move(kinds);
    spec["lb"] = std::move(lb);
    spec["ub"] = std::move(ub);
    json obj = json::array();
    for (const auto& [idx, coef] : model.objective().expr.terms)
        obj.push_back(json::array({idx, coef}));
    spec["obj"] = std::move(obj);
    json cons = json::array();
    for (const auto& c : model.constraints()) {
        json jc;
        jc["s"] = c.sense == Sense::le ? "le" : c.sense == Sense::ge ? "ge" : "eq";
        jc["r"] = c.rhs;
        json terms = json::array();
        for (const auto& [idx, coef] : c.expr.terms)
            terms.push_back(json::array({idx, coef}));
        jc["t"] = std::move(terms);
        cons.push_back(std::move(jc));
    }
    if (have_floor) {
        json jc;
        jc["s"] = "ge";
        jc["r"] = floor_value - 1e-9 * std::max(1.0, std::abs(floor_value));
        json terms = json::array();
        for (const auto& [idx, coef] : model.objective().expr.terms)
            terms.push_back(json::array({idx, coef}));
        jc["t"] = std::move(terms);
        cons.push_back(std::move(jc));
    }
    spec["cons"] = std::move(cons);

    TempDir dir;
    auto model_path = dir.path / "model.json";
    auto out_path = dir.path / "solution.json";
    auto driver_path = dir.path / "driver.py";
    auto err_path = dir.path / "stderr.txt";
    {
        std::ofstream f(model_path);
        f << spec.dump();
    }
    {
        std::ofstream f(driver_path);
        f << kPythonDriver;
    }

    std::string cmd = python_exe() + " \"" + driver_path.string() + "\" \"" +
                      model_path.string() + "\" \"" + out_path.string() + "\" 2> \"" +
                      err_path.string() + "\"";
    int rc = std::system(cmd.c_str());
    if (rc != 0) {
        std::ifstream err(err_path);
        std::stringstream ss;
        ss << err.rdbuf();
        throw std::runtime_error("external MILP backend failed (exit " + std::to_string(rc) +
                                 "): " + ss.str());
    }

    std::ifstream out_file(out_path);
    if (!out_file) throw std::runtime_error("external MILP backend produced no output");
    json out = json::parse(out_file);

    Solution sol;
    int status = out.at("status_code").get<int>();
    bool has_x = out.contains("x");
    if (has_x) {
        sol.assignment = out.at("x").get<std::vector<double>>();
        if (sol.assignment.size() != model.vars().size())
            throw std::runtime_error("external backend returned a malformed assignment");
        // Snap integral variables; continuous values stay as reported.
        for (size_t j = 0; j < sol.assignment.size(); ++j)
            if (model.vars()[j].is_integral())
                sol.assignment[j] = std::round(sol.assignment[j]);
        sol.objective_value = out.at("objective").get<double>();
        sol.gap = out.value("gap", 0.0);
    }
    if (has_x && have_floor && sol.objective_value < floor_value) {
        // tolerance noise around the floor: the verified warm start wins
        sol.assignment = warm;
        sol.objective_value = floor_value;
    }
    switch (status) {
        case 0:
            sol.status = sol.gap <= opts.gap + 1e-12 ? SolveStatus::optimal : SolveStatus::gap_limit;
            break;
        case 1:
            sol.status = SolveStatus::time_limit;
            break;
        case 2:
            if (have_floor) {
                // the floor was witnessed feasible; retry without it
                SolveOptions retry = opts;
                retry.warm_start = nullptr;
                return external_solve(model, retry);
            }
            sol.status = SolveStatus::infeasible;
            sol.assignment.clear();
            break;
        case 3:
            throw std::runtime_error("external MILP backend: problem unbounded");
        default:
            throw std::runtime_error("external MILP backend: numerical failure: " +
                                     out.value("message", std::string("unknown")));
    }
    return sol;
}

Solution solve(const MilpModel& model, const SolveOptions& opts) {
    switch (opts.backend) {
        case SolverBackend::branch_and_bound:
            return bb_solve(model, opts);
        case SolverBackend::external:
            return external_solve(model, opts);
        case SolverBackend::automatic:
            break;
    }
    if (model.free_integer_var_count() <= opts.bb_int_var_guard)
        return bb_solve(model, opts);
    if (!external_backend_available())
        throw std::runtime_error(
            "model exceeds the built-in solver guard and no external backend is available "
            "(needs python3 with scipy)");
    return external_solve(model, opts);
}

} // namespace dsr
