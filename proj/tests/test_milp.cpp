#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dsr/milp.hpp"
#include "dsr/simplex.hpp"
#include "dsr/solver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace dsr;

TEST_CASE("model builder tracks vars, tags, and rejects bad input") {
    MilpModel m;
    VarId bk = m.add_binary("b_k");
    LinExpr e;
    e.add(bk, 1.0);
    m.add_constraint(e, Sense::le, 1.0 / 3.0, "eq1");
    CHECK(m.vars().size() == 1);
    CHECK(m.constraints().size() == 1);

    CHECK_THROWS_AS(m.add_binary("b_k"), std::invalid_argument);

    LinExpr bogus;
    bogus.add(VarId{42}, 1.0);
    CHECK_THROWS_AS(m.add_constraint(bogus, Sense::le, 0.0, "eq1"), std::invalid_argument);

    LinExpr e2;
    e2.add(bk, 2.0);
    m.add_constraint(e2, Sense::ge, 0.0, "eq1");
    auto counts = census(m);
    CHECK(counts["eq1"] == 2);
}

TEST_CASE("census partitions the constraint set") {
    MilpModel m;
    VarId x = m.add_var("x", VarKind::continuous, 0, 10);
    for (int i = 0; i < 5; ++i) {
        LinExpr e;
        e.add(x, 1.0);
        m.add_constraint(e, Sense::le, i, i % 2 ? "odd" : "even");
    }
    auto counts = census(m);
    int total = 0;
    for (const auto& [tag, n] : counts) total += n;
    CHECK(total == static_cast<int>(m.constraints().size()));
    CHECK(counts["even"] == 3);
    CHECK(counts["odd"] == 2);
}

TEST_CASE("duplicate terms are merged on normalization") {
    MilpModel m;
    VarId x = m.add_var("x", VarKind::continuous, 0, 10);
    LinExpr e;
    e.add(x, 1.0).add(x, 2.0);
    m.add_constraint(e, Sense::le, 6.0, "t");
    REQUIRE(m.constraints()[0].expr.terms.size() == 1);
    CHECK(m.constraints()[0].expr.terms[0].second == doctest::Approx(3.0));
}

TEST_CASE("simplex solves a bounded LP with equality and range rows") {
    // max 3x + 2y  s.t.  x + y <= 4,  x - y = 1,  0 <= x <= 3, 0 <= y <= 5
    MilpModel m;
    VarId x = m.add_var("x", VarKind::continuous, 0, 3);
    VarId y = m.add_var("y", VarKind::continuous, 0, 5);
    LinExpr c1, c2, obj;
    c1.add(x, 1).add(y, 1);
    c2.add(x, 1).add(y, -1);
    obj.add(x, 3).add(y, 2);
    m.add_constraint(c1, Sense::le, 4, "c");
    m.add_constraint(c2, Sense::eq, 1, "c");
    m.set_objective(obj);
    auto r = solve_lp(m);
    REQUIRE(r.status == LpStatus::optimal);
    // x = 2.5, y = 1.5 -> 10.5
    CHECK(r.objective == doctest::Approx(10.5).epsilon(1e-9));
    CHECK(r.x[0] == doctest::Approx(2.5));
    CHECK(r.x[1] == doctest::Approx(1.5));
}

TEST_CASE("simplex reports infeasible systems") {
    MilpModel m;
    VarId x = m.add_var("x", VarKind::continuous, 0, 10);
    LinExpr a, b;
    a.add(x, 1);
    b.add(x, 1);
    m.add_constraint(a, Sense::le, 1, "c");
    m.add_constraint(b, Sense::ge, 2, "c");
    LinExpr obj;
    obj.add(x, 1);
    m.set_objective(obj);
    CHECK(solve_lp(m).status == LpStatus::infeasible);
}

TEST_CASE("bb_solve: max x s.t. x <= 3 over integers") {
    MilpModel m;
    VarId x = m.add_var("x", VarKind::integer, 0, 10);
    LinExpr c;
    c.add(x, 1);
    m.add_constraint(c, Sense::le, 3.2, "c");
    LinExpr obj;
    obj.add(x, 1);
    m.set_objective(obj);
    auto s = bb_solve(m);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective_value == doctest::Approx(3.0));
    CHECK(s.value(x) == doctest::Approx(3.0));
}

TEST_CASE("bb_solve: infeasible box") {
    MilpModel m;
    VarId x = m.add_var("x", VarKind::integer, 0, 10);
    LinExpr a, b;
    a.add(x, 1);
    b.add(x, 1);
    m.add_constraint(a, Sense::le, 1, "c");
    m.add_constraint(b, Sense::ge, 2, "c");
    LinExpr obj;
    obj.add(x, 1);
    m.set_objective(obj);
    CHECK(bb_solve(m).status == SolveStatus::infeasible);
}

TEST_CASE("bb_solve: binary knapsack picks the heavy item") {
    MilpModel m;
    VarId a = m.add_binary("a");
    VarId b = m.add_binary("b");
    LinExpr cap;
    cap.add(a, 1).add(b, 1);
    m.add_constraint(cap, Sense::le, 1, "cap");
    LinExpr obj;
    obj.add(a, 3).add(b, 2);
    m.set_objective(obj);
    auto s = bb_solve(m);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.objective_value == doctest::Approx(3.0));
    CHECK(s.value(a) == doctest::Approx(1.0));
}

TEST_CASE("bb_solve size guard refuses oversized models") {
    MilpModel m;
    LinExpr obj;
    for (int i = 0; i < 50; ++i) obj.add(m.add_binary("z" + std::to_string(i)), 1.0);
    m.set_objective(obj);
    SolveOptions opts;
    opts.bb_int_var_guard = 40;
    CHECK_THROWS_AS(bb_solve(m, opts), std::invalid_argument);
}

namespace {

// Random small MILPs with bounded vars; brute force over integer grids.
struct RandomMilp {
    MilpModel model;
    std::vector<VarId> ints;
};

RandomMilp make_random_milp(std::mt19937_64& rng, int n_int, int n_cont, int n_rows) {
    RandomMilp out;
    std::uniform_real_distribution<double> coef(-4.0, 4.0);
    std::uniform_int_distribution<int> ub_pick(1, 3);
    LinExpr obj;
    for (int i = 0; i < n_int; ++i) {
        VarId v = out.model.add_var("i" + std::to_string(i), VarKind::integer, 0, ub_pick(rng));
        out.ints.push_back(v);
        obj.add(v, coef(rng));
    }
    for (int i = 0; i < n_cont; ++i) {
        VarId v = out.model.add_var("c" + std::to_string(i), VarKind::continuous, 0, 5.0);
        obj.add(v, coef(rng));
    }
    out.model.set_objective(obj);
    std::uniform_int_distribution<int> sense_pick(0, 2);
    for (int r = 0; r < n_rows; ++r) {
        LinExpr e;
        double mag = 0.0;
        for (size_t j = 0; j < out.model.vars().size(); ++j) {
            double c = coef(rng);
            if (std::abs(c) < 1.0) continue;
            e.add(VarId{static_cast<int>(j)}, c);
            mag += std::abs(c);
        }
        if (e.terms.empty()) e.add(VarId{0}, 1.0);
        int s = sense_pick(rng);
        // rhs chosen loose enough that rows rarely make the model infeasible
        double rhs = (s == 2) ? coef(rng) : mag * 1.5;
        if (s == 1) rhs = -rhs;
        out.model.add_constraint(e, s == 0 ? Sense::le : s == 1 ? Sense::ge : Sense::eq, rhs,
                                 "r" + std::to_string(r));
    }
    return out;
}

// Enumerates integer grids, solving the continuous remainder by LP.
double brute_force_best(const RandomMilp& rm, bool& feasible) {
    const MilpModel& m = rm.model;
    std::vector<double> lb(m.vars().size()), ub(m.vars().size());
    for (size_t j = 0; j < m.vars().size(); ++j) {
        lb[j] = m.vars()[j].lb;
        ub[j] = m.vars()[j].ub;
    }
    double best = -1e300;
    feasible = false;
    std::vector<int> values(rm.ints.size(), 0);
    while (true) {
        auto l = lb, u = ub;
        for (size_t k = 0; k < rm.ints.size(); ++k) {
            l[static_cast<size_t>(rm.ints[k].index)] = values[k];
            u[static_cast<size_t>(rm.ints[k].index)] = values[k];
        }
        auto r = solve_lp(m, l, u);
        if (r.status == LpStatus::optimal) {
            feasible = true;
            best = std::max(best, r.objective);
        }
        // advance the odometer
        size_t k = 0;
        for (; k < rm.ints.size(); ++k) {
            if (values[k] < static_cast<int>(m.vars()[static_cast<size_t>(rm.ints[k].index)].ub)) {
                ++values[k];
                break;
            }
            values[k] = 0;
        }
        if (k == rm.ints.size()) break;
    }
    return best;
}

} // namespace

TEST_CASE("bb_solve agrees with exhaustive enumeration on random instances") {
    std::mt19937_64 rng(20240811);
    int solved = 0;
    for (int trial = 0; trial < 40; ++trial) {
        auto rm = make_random_milp(rng, 6, 2, 4);
        bool feas = false;
        double best = brute_force_best(rm, feas);
        SolveOptions opts;
        opts.gap = 0.0;
        auto s = bb_solve(rm.model, opts);
        if (!feas) {
            CHECK(s.status == SolveStatus::infeasible);
            continue;
        }
        REQUIRE(s.status == SolveStatus::optimal);
        CHECK(s.objective_value == doctest::Approx(best).epsilon(1e-7));
        auto viol = check_solution(rm.model, s.assignment, 1e-6);
        CHECK_MESSAGE(viol.empty(), "first violation: ", viol.empty() ? "" : viol[0]);
        ++solved;
    }
    CHECK(solved > 20); // the generator should produce mostly feasible cases
}

TEST_CASE("bb_solve and the external backend agree within 1e-6"
          * doctest::skip(!external_backend_available())) {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 8; ++trial) {
        auto rm = make_random_milp(rng, 8, 3, 5);
        SolveOptions opts;
        opts.gap = 1e-9;
        auto a = bb_solve(rm.model, opts);
        auto b = external_solve(rm.model, opts);
        REQUIRE(a.status == b.status);
        if (a.status == SolveStatus::optimal) {
            CHECK(a.objective_value ==
                  doctest::Approx(b.objective_value).epsilon(1e-6).scale(1.0));
            CHECK(check_solution(rm.model, b.assignment, 1e-6).empty());
        }
    }
}

TEST_CASE("solutions re-check against every stored constraint") {
    std::mt19937_64 rng(99);
    auto rm = make_random_milp(rng, 5, 3, 6);
    auto s = bb_solve(rm.model);
    if (s.status == SolveStatus::optimal)
        CHECK(check_solution(rm.model, s.assignment, 1e-6).empty());
}

TEST_CASE("LP-format export contains the expected sections") {
    MilpModel m;
    VarId x = m.add_var("x#1", VarKind::integer, 0, 7);
    VarId b = m.add_binary("pick[a]");
    LinExpr c;
    c.add(x, 1).add(b, 2);
    m.add_constraint(c, Sense::le, 5, "eq1");
    LinExpr obj;
    obj.add(x, 1).add(b, 1);
    m.set_objective(obj);
    std::string lp = to_lp_format(m);
    CHECK(lp.find("Maximize") != std::string::npos);
    CHECK(lp.find("Subject To") != std::string::npos);
    CHECK(lp.find("Bounds") != std::string::npos);
    CHECK(lp.find("Binaries") != std::string::npos);
    CHECK(lp.find("Generals") != std::string::npos);
    CHECK(lp.find("End") != std::string::npos);
    CHECK(lp.find("#") == std::string::npos); // names sanitized
    CHECK(lp.find("[") == std::string::npos);
}

TEST_CASE("bb_solve honors the time limit with the best incumbent if any") {
    std::mt19937_64 rng(4242);
    auto rm = make_random_milp(rng, 10, 2, 6);
    SolveOptions opts;
    opts.time_limit_s = 0.0;
    auto s = bb_solve(rm.model, opts);
    CHECK(s.status == SolveStatus::time_limit);
}
