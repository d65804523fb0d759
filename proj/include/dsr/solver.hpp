#pragma once

// Solver backends behind a single contract: any backend must return an
// assignment that satisfies every stored constraint within 1e-6 and an
// objective within the configured relative gap of the optimum.
//
//   * bb_solve    — built-in exact branch-and-bound over the dense simplex;
//                   guarded to toy scale, used as the correctness oracle.
//   * external    — subprocess backend driving scipy.optimize.milp (HiGHS);
//                   handles the full-size feeder models.
//   * solve       — dispatches: `auto` picks bb_solve when the model is
//                   within the guard, otherwise the external backend.

#include "dsr/milp.hpp"

#include <limits>
#include <string>

namespace dsr {

enum class SolverBackend { automatic, branch_and_bound, external };

struct SolveOptions {
    double gap = 1e-4;
    double time_limit_s = std::numeric_limits<double>::infinity();
    SolverBackend backend = SolverBackend::automatic;
    // bb_solve refuses models with more free integer variables than this.
    int bb_int_var_guard = 40;
    // Optional known-feasible assignment priming the search: an initial
    // incumbent for branch-and-bound, a valid objective floor for the
    // external backend. Backends re-check it and ignore it when it fails.
    const std::vector<double>* warm_start = nullptr;
};

// Exact branch-and-bound. Throws std::invalid_argument when the model has
// more free integer variables than opts.bb_int_var_guard, and
// std::runtime_error on an unbounded relaxation or LP numerical failure.
Solution bb_solve(const MilpModel& model, const SolveOptions& opts = {});

// True when a python3 with scipy.optimize.milp is reachable. Probed once.
bool external_backend_available();

// Subprocess backend. Throws std::runtime_error when the backend is
// unavailable or misbehaves.
Solution external_solve(const MilpModel& model, const SolveOptions& opts = {});

// Backend dispatch per opts.backend.
Solution solve(const MilpModel& model, const SolveOptions& opts = {});

} // namespace dsr
