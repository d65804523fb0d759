#pragma once

// Dense bounded-variable two-phase primal simplex. Sized for the toy-scale
// LP relaxations used by the built-in branch-and-bound backend; not meant
// for large models.

#include "dsr/milp.hpp"

#include <vector>

namespace dsr {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x; // structural variables only, by model index
};

// Solves the LP relaxation of `model` (integrality dropped) with the given
// variable bounds, which must have one entry per model variable. Maximizes.
LpResult solve_lp(const MilpModel& model,
                  const std::vector<double>& lb,
                  const std::vector<double>& ub);

// Convenience overload using the bounds stored in the model.
LpResult solve_lp(const MilpModel& model);

} // namespace dsr
