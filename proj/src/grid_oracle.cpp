#include "lse/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "lse/certificate.hpp"

namespace lse {

void GridProblem::validate() const {
  if (n <= 0) throw std::invalid_argument("GridProblem: n must be positive");
  if (N < n) throw std::invalid_argument("GridProblem: N must be at least n");
  if (obs.set.n != n)
    throw std::invalid_argument("GridProblem: sample set grid mismatch");
  if (obs.set.size() == 0)
    throw std::invalid_argument("GridProblem: empty sample set");
  obs.set.validate();
}

namespace {

// Restricted dictionary: row i is sample obs.set.indices[i] of the atom at
// frequency (a/N, b/N), column a*N + b.
Eigen::MatrixXcd build_dictionary(const GridProblem& p) {
  const int m = p.obs.set.size();
  Eigen::MatrixXcd A(m, p.N * p.N);
  for (int a = 0; a < p.N; ++a) {
    for (int b = 0; b < p.N; ++b) {
      const Eigen::VectorXcd atom =
          atom2d({static_cast<double>(a) / p.N, static_cast<double>(b) / p.N},
                 p.n);
      const int col = a * p.N + b;
      for (int i = 0; i < m; ++i) A(i, col) = atom(p.obs.set.indices[i]);
    }
  }
  return A;
}

double l1_modulus(const Eigen::VectorXcd& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::abs(v(i));
  return s;
}

Eigen::VectorXcd soft_threshold(const Eigen::VectorXcd& v, double t) {
  Eigen::VectorXcd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    out(i) = mag > t ? v(i) * ((mag - t) / mag) : Complex(0.0, 0.0);
  }
  return out;
}

}  // namespace

GridL1Result solve_grid_l1(const GridProblem& problem, double tol,
                           int max_iter) {
  problem.validate();
  const Eigen::MatrixXcd A = build_dictionary(problem);
  const Eigen::VectorXcd& b = problem.obs.values;
  const Eigen::Index ncols = A.cols();

  GridL1Result result;
  if (b.norm() <= 1e-14) {
    result.coefficients = Eigen::VectorXcd::Zero(ncols);
    return result;
  }

  // ADMM on min ||z||_1 s.t. Ac = b, c = z:
  //   c <- argmin over {Ac=b} of ||c - (z - u)||^2  (affine projection)
  //   z <- shrink(c + u, 1/rho), u <- u + c - z
  const Eigen::LLT<Eigen::MatrixXcd> gram_llt(
      Eigen::MatrixXcd(A * A.adjoint()));
  if (gram_llt.info() != Eigen::Success)
    throw std::runtime_error("solve_grid_l1: rank-deficient sample Gram matrix");

  const double rho = 1.0;
  Eigen::VectorXcd z = Eigen::VectorXcd::Zero(ncols);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(ncols);
  Eigen::VectorXcd c = z;

  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::VectorXcd v = z - u;
    c = v + A.adjoint() * gram_llt.solve(b - A * v);
    z = soft_threshold(c + u, 1.0 / rho);
    u += c - z;
    result.iterations = it;

    if (it % 10 != 0 && it != max_iter) continue;
    const double primal_res = (c - z).norm();
    if (primal_res > tol) continue;

    // Dual of the basis pursuit: max Re<b,y> s.t. ||A^H y||_inf <= 1.
    // rho*u approximates A^H y at the optimum; project it back through
    // the Gram matrix and scale into the feasible region.
    Eigen::VectorXcd y = gram_llt.solve(A * (rho * u));
    const Eigen::VectorXcd aty = A.adjoint() * y;
    double inf_norm = 0.0;
    for (Eigen::Index i = 0; i < aty.size(); ++i)
      inf_norm = std::max(inf_norm, std::abs(aty(i)));
    y /= std::max(1.0, inf_norm);
    const double lower = std::real(b.dot(y));
    const double obj = l1_modulus(z);
    const double gap = obj - lower;
    if (std::abs(gap) <= tol * (1.0 + obj) && primal_res <= tol) {
      result.coefficients = z;
      result.objective = obj;
      result.duality_gap = gap;
      return result;
    }
  }
  throw std::runtime_error("solve_grid_l1: no convergence within budget");
}

std::pair<double, double> atomic_norm_bracket(const Eigen::VectorXcd& x,
                                              const SampleSet& set,
                                              int refinements) {
  if (refinements < 1)
    throw std::invalid_argument("atomic_norm_bracket: refinements must be >= 1");
  if (x.norm() <= 1e-14) return {0.0, 0.0};

  const Observations obs = sample(x, set);
  double upper = std::numeric_limits<double>::infinity();
  int N = set.n;
  for (int r = 0; r < refinements; ++r, N *= 2) {
    GridProblem gp;
    gp.n = set.n;
    gp.N = N;
    gp.obs = obs;
    upper = std::min(upper, solve_grid_l1(gp).objective);
  }

  const DualCertificate cert = solve_unweighted(obs);
  if (cert.status != SdpStatus::Optimal)
    throw std::runtime_error("atomic_norm_bracket: dual solve failed");
  return {cert.objective, upper};
}

}  // namespace lse
