#include "dsr/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-7;
constexpr double kOptTol = 1e-9;
constexpr double kPivTol = 1e-9;

enum class VarState { basic, at_lb, at_ub, nb_free };

// Column-oriented view of [A | I] with bounded structurals and slacks.
struct Tableau {
    int n = 0; // structural count
    int m = 0; // row count
    std::vector<std::vector<std::pair<int, double>>> cols; // per var: (row, coef)
    std::vector<double> lo, up;  // per var (n + m entries)
    std::vector<double> rhs;     // per row
    std::vector<double> cost;    // per var, phase-2 objective (maximize)

    int total() const { return n + m; }
};

class Simplex {
public:
    explicit Simplex(const Tableau& t) : t_(t) {}

    LpResult run();

private:
    void init_basis();
    void refactorize();
    void compute_basics();
    double infeasibility() const;
    void classify(std::vector<double>& d) const;

    // Returns entering variable and move direction (+1/-1), or -1 if none.
    int price(bool phase1, bool bland, int& dir) const;
    bool step(int entering, int dir, bool phase1); // false -> unbounded

    const Tableau& t_;
    std::vector<VarState> state_;
    std::vector<int> basis_;      // var index per row
    std::vector<int> basis_row_;  // row per var, -1 when nonbasic
    std::vector<double> binv_;    // m x m row-major
    std::vector<double> x_;       // per var
    int pivots_since_refactor_ = 0;

    double binv(int i, int j) const { return binv_[static_cast<size_t>(i) * t_.m + j]; }
    double& binv(int i, int j) { return binv_[static_cast<size_t>(i) * t_.m + j]; }
};

void Simplex::init_basis() {
    int N = t_.total();
    state_.assign(static_cast<size_t>(N), VarState::at_lb);
    basis_.assign(static_cast<size_t>(t_.m), 0);
    basis_row_.assign(static_cast<size_t>(N), -1);
    x_.assign(static_cast<size_t>(N), 0.0);

    for (int j = 0; j < t_.n; ++j) {
        double lo = t_.lo[static_cast<size_t>(j)], up = t_.up[static_cast<size_t>(j)];
        if (lo == -kInf && up == kInf) {
            state_[static_cast<size_t>(j)] = VarState::nb_free;
            x_[static_cast<size_t>(j)] = 0.0;
        } else if (lo == -kInf || (up != kInf && std::abs(up) < std::abs(lo))) {
            state_[static_cast<size_t>(j)] = VarState::at_ub;
            x_[static_cast<size_t>(j)] = up;
        } else {
            state_[static_cast<size_t>(j)] = VarState::at_lb;
            x_[static_cast<size_t>(j)] = lo;
        }
    }
    for (int i = 0; i < t_.m; ++i) {
        int v = t_.n + i;
        basis_[static_cast<size_t>(i)] = v;
        basis_row_[static_cast<size_t>(v)] = i;
        state_[static_cast<size_t>(v)] = VarState::basic;
    }
    binv_.assign(static_cast<size_t>(t_.m) * t_.m, 0.0);
    for (int i = 0; i < t_.m; ++i) binv(i, i) = 1.0;
    compute_basics();
}

void Simplex::refactorize() {
    int m = t_.m;
    // Gauss-Jordan inversion of the basis matrix with partial pivoting.
    std::vector<double> a(static_cast<size_t>(m) * m, 0.0);
    for (int col = 0; col < m; ++col) {
        int v = basis_[static_cast<size_t>(col)];
        for (const auto& [row, coef] : t_.cols[static_cast<size_t>(v)])
            a[static_cast<size_t>(row) * m + col] = coef;
    }
    std::vector<double> inv(static_cast<size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) inv[static_cast<size_t>(i) * m + i] = 1.0;
    for (int col = 0; col < m; ++col) {
        int piv = col;
        double best = std::abs(a[static_cast<size_t>(col) * m + col]);
        for (int r = col + 1; r < m; ++r) {
            double v = std::abs(a[static_cast<size_t>(r) * m + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < 1e-12) throw std::runtime_error("singular basis during refactorization");
        if (piv != col) {
            for (int j = 0; j < m; ++j) {
                std::swap(a[static_cast<size_t>(piv) * m + j], a[static_cast<size_t>(col) * m + j]);
                std::swap(inv[static_cast<size_t>(piv) * m + j], inv[static_cast<size_t>(col) * m + j]);
            }
        }
        double d = a[static_cast<size_t>(col) * m + col];
        for (int j = 0; j < m; ++j) {
            a[static_cast<size_t>(col) * m + j] /= d;
            inv[static_cast<size_t>(col) * m + j] /= d;
        }
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            double f = a[static_cast<size_t>(r) * m + col];
            if (f == 0.0) continue;
            for (int j = 0; j < m; ++j) {
                a[static_cast<size_t>(r) * m + j] -= f * a[static_cast<size_t>(col) * m + j];
                inv[static_cast<size_t>(r) * m + j] -= f * inv[static_cast<size_t>(col) * m + j];
            }
        }
    }
    binv_ = std::move(inv);
    pivots_since_refactor_ = 0;
}

void Simplex::compute_basics() {
    int m = t_.m;
    std::vector<double> resid(t_.rhs);
    for (int j = 0; j < t_.total(); ++j) {
        if (state_[static_cast<size_t>(j)] == VarState::basic) continue;
        double xj = x_[static_cast<size_t>(j)];
        if (xj == 0.0) continue;
        for (const auto& [row, coef] : t_.cols[static_cast<size_t>(j)])
            resid[static_cast<size_t>(row)] -= coef * xj;
    }
    for (int i = 0; i < m; ++i) {
        double v = 0.0;
        for (int r = 0; r < m; ++r) v += binv(i, r) * resid[static_cast<size_t>(r)];
        x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = v;
    }
}

double Simplex::infeasibility() const {
    double total = 0.0;
    for (int i = 0; i < t_.m; ++i) {
        int v = basis_[static_cast<size_t>(i)];
        double xv = x_[static_cast<size_t>(v)];
        if (xv < t_.lo[static_cast<size_t>(v)]) total += t_.lo[static_cast<size_t>(v)] - xv;
        if (xv > t_.up[static_cast<size_t>(v)]) total += xv - t_.up[static_cast<size_t>(v)];
    }
    return total;
}

void Simplex::classify(std::vector<double>& d) const {
    d.assign(static_cast<size_t>(t_.m), 0.0);
    for (int i = 0; i < t_.m; ++i) {
        int v = basis_[static_cast<size_t>(i)];
        double xv = x_[static_cast<size_t>(v)];
        if (xv > t_.up[static_cast<size_t>(v)] + kFeasTol)
            d[static_cast<size_t>(i)] = 1.0;
        else if (xv < t_.lo[static_cast<size_t>(v)] - kFeasTol)
            d[static_cast<size_t>(i)] = -1.0;
    }
}

int Simplex::price(bool phase1, bool bland, int& dir) const {
    int m = t_.m;
    std::vector<double> d(static_cast<size_t>(m), 0.0);
    if (phase1) {
        classify(d);
    } else {
        for (int i = 0; i < m; ++i)
            d[static_cast<size_t>(i)] = t_.cost[static_cast<size_t>(basis_[static_cast<size_t>(i)])];
    }
    // y = Binv^T d
    std::vector<double> y(static_cast<size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        double di = d[static_cast<size_t>(i)];
        if (di == 0.0) continue;
        for (int r = 0; r < m; ++r) y[static_cast<size_t>(r)] += di * binv(i, r);
    }

    int best = -1, best_dir = 0;
    double best_score = 0.0;
    for (int j = 0; j < t_.total(); ++j) {
        VarState st = state_[static_cast<size_t>(j)];
        if (st == VarState::basic) continue;
        if (t_.lo[static_cast<size_t>(j)] == t_.up[static_cast<size_t>(j)]) continue; // fixed
        double ya = 0.0;
        for (const auto& [row, coef] : t_.cols[static_cast<size_t>(j)])
            ya += y[static_cast<size_t>(row)] * coef;
        // Phase 1 minimizes infeasibility: df/dx_j = -ya. Phase 2 maximizes
        // cost: dobj/dx_j = cost_j - ya.
        double grad = phase1 ? -ya : (t_.cost[static_cast<size_t>(j)] - ya);
        double score = 0.0;
        int candidate_dir = 0;
        if (phase1) {
            if (st != VarState::at_ub && grad < -kOptTol) {
                score = -grad;
                candidate_dir = +1;
            } else if (st != VarState::at_lb && grad > kOptTol) {
                score = grad;
                candidate_dir = -1;
            }
        } else {
            if (st != VarState::at_ub && grad > kOptTol) {
                score = grad;
                candidate_dir = +1;
            } else if (st != VarState::at_lb && grad < -kOptTol) {
                score = -grad;
                candidate_dir = -1;
            }
        }
        if (candidate_dir == 0) continue;
        if (bland) {
            dir = candidate_dir;
            return j; // first improving index
        }
        if (score > best_score + 1e-15) {
            best_score = score;
            best = j;
            best_dir = candidate_dir;
        }
    }
    dir = best_dir;
    return best;
}

bool Simplex::step(int entering, int dir, bool phase1) {
    int m = t_.m;
    // w = Binv * A_entering
    std::vector<double> w(static_cast<size_t>(m), 0.0);
    for (const auto& [row, coef] : t_.cols[static_cast<size_t>(entering)])
        for (int i = 0; i < m; ++i) w[static_cast<size_t>(i)] += binv(i, row) * coef;

    // Basic i moves at rate -wd_i per unit step of the entering variable.
    double t_best = kInf;
    int leave_row = -1;
    int leave_to_ub = 0;
    double best_piv = 0.0;

    auto consider = [&](double t, int row, int to_ub, double piv) {
        if (t < -1e-12) t = 0.0;
        if (t < t_best - 1e-9 ||
            (t <= t_best + 1e-9 && std::abs(piv) > std::abs(best_piv))) {
            t_best = t;
            leave_row = row;
            leave_to_ub = to_ub;
            best_piv = piv;
        }
    };

    for (int i = 0; i < m; ++i) {
        double wd = dir * w[static_cast<size_t>(i)];
        if (std::abs(wd) < kPivTol) continue;
        int v = basis_[static_cast<size_t>(i)];
        double xv = x_[static_cast<size_t>(v)];
        double lo = t_.lo[static_cast<size_t>(v)], up = t_.up[static_cast<size_t>(v)];
        bool below = phase1 && xv < lo - kFeasTol;
        bool above = phase1 && xv > up + kFeasTol;
        if (wd > 0) {
            // x_v decreases.
            if (above) {
                consider((xv - up) / wd, i, 1, wd); // becomes feasible at its upper bound
            } else if (!below && lo != -kInf) {
                consider((xv - lo) / wd, i, 0, wd);
            }
            // below + decreasing: moves further out, no breakpoint
        } else {
            // x_v increases.
            if (below) {
                consider((lo - xv) / (-wd), i, 0, wd);
            } else if (!above && up != kInf) {
                consider((up - xv) / (-wd), i, 1, wd);
            }
        }
    }

    // Bound flip on the entering variable itself.
    double lo_e = t_.lo[static_cast<size_t>(entering)], up_e = t_.up[static_cast<size_t>(entering)];
    double own_range = (lo_e == -kInf || up_e == kInf) ? kInf : (up_e - lo_e);
    if (own_range < t_best - 1e-9) {
        // Flip without changing the basis.
        for (int i = 0; i < m; ++i) {
            int v = basis_[static_cast<size_t>(i)];
            x_[static_cast<size_t>(v)] -= dir * w[static_cast<size_t>(i)] * own_range;
        }
        x_[static_cast<size_t>(entering)] += dir * own_range;
        state_[static_cast<size_t>(entering)] =
            dir > 0 ? VarState::at_ub : VarState::at_lb;
        return true;
    }

    if (leave_row < 0) return false; // unbounded direction

    // Pivot: entering becomes basic, basis_[leave_row] leaves at a bound.
    int leaving = basis_[static_cast<size_t>(leave_row)];
    for (int i = 0; i < m; ++i) {
        int v = basis_[static_cast<size_t>(i)];
        x_[static_cast<size_t>(v)] -= dir * w[static_cast<size_t>(i)] * t_best;
    }
    x_[static_cast<size_t>(entering)] += dir * t_best;
    x_[static_cast<size_t>(leaving)] =
        leave_to_ub ? t_.up[static_cast<size_t>(leaving)] : t_.lo[static_cast<size_t>(leaving)];

    double piv = w[static_cast<size_t>(leave_row)];
    // Binv update: eliminate the entering column from all other rows.
    for (int jj = 0; jj < m; ++jj) binv(leave_row, jj) /= piv;
    for (int i = 0; i < m; ++i) {
        if (i == leave_row) continue;
        double f = w[static_cast<size_t>(i)];
        if (f == 0.0) continue;
        for (int jj = 0; jj < m; ++jj) binv(i, jj) -= f * binv(leave_row, jj);
    }

    basis_[static_cast<size_t>(leave_row)] = entering;
    basis_row_[static_cast<size_t>(entering)] = leave_row;
    basis_row_[static_cast<size_t>(leaving)] = -1;
    state_[static_cast<size_t>(entering)] = VarState::basic;
    state_[static_cast<size_t>(leaving)] = leave_to_ub ? VarState::at_ub : VarState::at_lb;

    if (++pivots_since_refactor_ >= 100) {
        refactorize();
        compute_basics();
    }
    return true;
}

LpResult Simplex::run() {
    init_basis();
    const long max_iters = 20000 + 200L * t_.total();

    long iters = 0;
    int degenerate_streak = 0;
    bool bland = false;

    auto any_infeasible_basic = [&]() {
        std::vector<double> d;
        classify(d);
        for (double v : d)
            if (v != 0.0) return true;
        return false;
    };

    // Phase 1: drive basic infeasibility to zero.
    while (any_infeasible_basic()) {
        if (++iters > max_iters) return {LpStatus::iteration_limit, 0.0, {}};
        int dir = 0;
        int j = price(true, bland, dir);
        if (j < 0) return {LpStatus::infeasible, 0.0, {}};
        double before = infeasibility();
        if (!step(j, dir, true)) return {LpStatus::iteration_limit, 0.0, {}};
        double after = infeasibility();
        if (before - after < 1e-12) {
            if (++degenerate_streak > 4 * t_.total()) bland = true;
        } else {
            degenerate_streak = 0;
            bland = false;
        }
    }

    // Phase 2: optimize.
    bland = false;
    degenerate_streak = 0;
    while (true) {
        if (++iters > max_iters) return {LpStatus::iteration_limit, 0.0, {}};
        int dir = 0;
        int j = price(false, bland, dir);
        if (j < 0) break;
        double before = x_[static_cast<size_t>(j)];
        if (!step(j, dir, false)) return {LpStatus::unbounded, 0.0, {}};
        if (std::abs(x_[static_cast<size_t>(j)] - before) < 1e-12) {
            if (++degenerate_streak > 4 * t_.total()) bland = true;
        } else {
            degenerate_streak = 0;
            bland = false;
        }
        // A phase-2 step can, in rare degenerate cases, push a basic value
        // out of bounds through accumulated roundoff; repair via phase 1.
        if (any_infeasible_basic()) {
            refactorize();
            compute_basics();
            while (any_infeasible_basic()) {
                if (++iters > max_iters) return {LpStatus::iteration_limit, 0.0, {}};
                int d1 = 0;
                int j1 = price(true, true, d1);
                if (j1 < 0) return {LpStatus::infeasible, 0.0, {}};
                if (!step(j1, d1, true)) return {LpStatus::iteration_limit, 0.0, {}};
            }
        }
    }

    refactorize();
    compute_basics();

    LpResult res;
    res.status = LpStatus::optimal;
    res.x.assign(static_cast<size_t>(t_.n), 0.0);
    for (int j = 0; j < t_.n; ++j) res.x[static_cast<size_t>(j)] = x_[static_cast<size_t>(j)];
    double obj = 0.0;
    for (int j = 0; j < t_.n; ++j) obj += t_.cost[static_cast<size_t>(j)] * res.x[static_cast<size_t>(j)];
    res.objective = obj;
    return res;
}

Tableau build_tableau(const MilpModel& model, const std::vector<double>& lb,
                      const std::vector<double>& ub) {
    Tableau t;
    t.n = static_cast<int>(model.vars().size());
    t.m = static_cast<int>(model.constraints().size());
    t.cols.resize(static_cast<size_t>(t.n + t.m));
    t.lo.resize(static_cast<size_t>(t.n + t.m));
    t.up.resize(static_cast<size_t>(t.n + t.m));
    t.cost.assign(static_cast<size_t>(t.n + t.m), 0.0);
    t.rhs.resize(static_cast<size_t>(t.m));

    for (int j = 0; j < t.n; ++j) {
        t.lo[static_cast<size_t>(j)] = lb[static_cast<size_t>(j)];
        t.up[static_cast<size_t>(j)] = ub[static_cast<size_t>(j)];
    }
    for (const auto& [idx, coef] : model.objective().expr.terms)
        t.cost[static_cast<size_t>(idx)] = coef;

    for (int i = 0; i < t.m; ++i) {
        const Constraint& c = model.constraints()[static_cast<size_t>(i)];
        for (const auto& [idx, coef] : c.expr.terms)
            t.cols[static_cast<size_t>(idx)].push_back({i, coef});
        t.rhs[static_cast<size_t>(i)] = c.rhs;
        int sv = t.n + i;
        t.cols[static_cast<size_t>(sv)].push_back({i, 1.0});
        switch (c.sense) {
            case Sense::le:
                t.lo[static_cast<size_t>(sv)] = 0.0;
                t.up[static_cast<size_t>(sv)] = kInf;
                break;
            case Sense::ge:
                t.lo[static_cast<size_t>(sv)] = -kInf;
                t.up[static_cast<size_t>(sv)] = 0.0;
                break;
            case Sense::eq:
                t.lo[static_cast<size_t>(sv)] = 0.0;
                t.up[static_cast<size_t>(sv)] = 0.0;
                break;
        }
    }
    return t;
}

} // namespace

LpResult solve_lp(const MilpModel& model, const std::vector<double>& lb,
                  const std::vector<double>& ub) {
    if (lb.size() != model.vars().size() || ub.size() != model.vars().size())
        throw std::invalid_argument("bound vector size mismatch");
    for (size_t j = 0; j < lb.size(); ++j)
        if (lb[j] > ub[j]) return {LpStatus::infeasible, 0.0, {}};

    if (model.constraints().empty()) {
        // Pure box problem.
        LpResult res;
        res.status = LpStatus::optimal;
        res.x.assign(model.vars().size(), 0.0);
        std::vector<double> cost(model.vars().size(), 0.0);
        for (const auto& [idx, coef] : model.objective().expr.terms)
            cost[static_cast<size_t>(idx)] = coef;
        for (size_t j = 0; j < model.vars().size(); ++j) {
            double v;
            if (cost[j] > 0)
                v = ub[j];
            else if (cost[j] < 0)
                v = lb[j];
            else
                v = (lb[j] == -kInf) ? std::min(0.0, ub[j]) : lb[j];
            if (std::abs(v) == kInf) return {LpStatus::unbounded, 0.0, {}};
            res.x[j] = v;
            res.objective += cost[j] * v;
        }
        return res;
    }

    Tableau t = build_tableau(model, lb, ub);
    Simplex s(t);
    return s.run();
}

LpResult solve_lp(const MilpModel& model) {
    std::vector<double> lb, ub;
    lb.reserve(model.vars().size());
    ub.reserve(model.vars().size());
    for (const auto& v : model.vars()) {
        lb.push_back(v.lb);
        ub.push_back(v.ub);
    }
    return solve_lp(model, lb, ub);
}

} // namespace dsr
