#pragma once

#include <Eigen/Dense>
#include <utility>

#include "lse/signal.hpp"

namespace lse {

// Discrete basis-pursuit stand-in for the continuous problem: the
// dictionary is the N x N on-grid 2-D atoms at (a/N, b/N), observed on T.
// Used only as a correctness oracle.
struct GridProblem {
  int n = 0;  // index grid side (atoms live on {0..n-1}^2)
  int N = 0;  // frequency grid side, N >= n
  Observations obs;

  void validate() const;
};

struct GridL1Result {
  Eigen::VectorXcd coefficients;  // length N^2, column a*N + b
  double objective = 0.0;
  double duality_gap = 0.0;  // certified by a scaled dual feasible point
  int iterations = 0;
};

// min sum_j |c_j| subject to A c = x_T, solved by ADMM with a complex
// modulus shrinkage; terminates when the primal residual and the
// certified duality gap both fall below tol.
GridL1Result solve_grid_l1(const GridProblem& problem, double tol = 1e-7,
                           int max_iter = 200000);

// upper = min over N in {n, 2n, 4n, ...} (refinements sizes) of the grid
// l1 objective; lower = objective of the continuous dual program.
std::pair<double, double> atomic_norm_bracket(const Eigen::VectorXcd& x,
                                              const SampleSet& set,
                                              int refinements);

}  // namespace lse
