#pragma once

#include <functional>
#include <vector>

namespace fb5 {

struct NelderMeadOptions {
  double x_tol = 1e-6;     // simplex diameter tolerance per coordinate
  double f_tol = 1e-10;    // absolute spread of simplex values
  int max_evals = 5000;
  int restarts = 1;        // re-seed the simplex at the incumbent optimum
};

struct OptimResult {
  std::vector<double> x;
  double fmin = 0;
  int evals = 0;
  bool converged = false;
};

/// Nelder-Mead simplex minimization of an unconstrained objective.
/// `step` sets the initial simplex edge per coordinate.
OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                        std::vector<double> x0, std::vector<double> step,
                        const NelderMeadOptions& opts = {});

}  // namespace fb5
