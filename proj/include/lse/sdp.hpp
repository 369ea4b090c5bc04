#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace lse {

// Conic-form container: maximize (or minimize) a sparse real-linear
// functional of the entries of Hermitian PSD blocks subject to sparse
// linear equalities and hard-pinned entries. Real and imaginary parts of
// block entries are independent real coordinates of the functionals.

struct SdpBlockSpec {
  std::string name;
  int side = 0;
};

// coefficient re_coeff on Re(block[row,col]) plus im_coeff on
// Im(block[row,col]); the block is Hermitian, so (row,col) and (col,row)
// refer to conjugate values.
struct SdpTerm {
  int block = 0;
  int row = 0;
  int col = 0;
  double re_coeff = 0.0;
  double im_coeff = 0.0;
};

struct SdpFunctional {
  std::vector<SdpTerm> terms;
};

struct SdpEquality {
  SdpFunctional lhs;
  double rhs = 0.0;
};

struct SdpFixedEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  std::complex<double> value;
};

struct SdpProblem {
  std::vector<SdpBlockSpec> blocks;
  SdpFunctional objective;
  bool maximize = true;
  std::vector<SdpEquality> equalities;
  std::vector<SdpFixedEntry> fixed_entries;

  void validate() const;

  // Text dump for cross-checking against external solvers:
  // header "SDP blocks=<b> eqs=<m>", one line per functional term
  // "<eq-index> <block> <row> <col> <re-coeff> <im-coeff>" (index -1 for
  // the objective), then one "rhs <eq-index> <value>" line per equality.
  void dump(std::ostream& os) const;
};

enum class SdpStatus { Optimal, MaxIterations, NumericalFailure };

struct SdpResiduals {
  double primal_infeasibility = 0.0;  // max equality violation (incl. pins)
  double dual_infeasibility = 0.0;
  double duality_gap = 0.0;
};

struct SdpSolution {
  std::vector<Eigen::MatrixXcd> block_values;      // Hermitian PSD
  std::vector<Eigen::MatrixXcd> dual_slacks;       // Hermitian PSD
  Eigen::VectorXd dual_multipliers;                // one per retained row
  double objective = 0.0;
  SdpResiduals residuals;                          // recomputed, not internal
  SdpStatus status = SdpStatus::NumericalFailure;
  int iterations = 0;
  int dropped_rows = 0;  // redundant equality rows removed before solving
};

struct SdpOptions {
  double tol = 1e-7;
  int max_iter = 200;
  double step_fraction = 0.98;  // fraction-to-the-boundary factor
  // Adds trace_reg * tr(X) to the minimized objective. A degenerate
  // optimal face (no strict complementarity) makes the interior-point
  // endgame stall; this Tikhonov-style perturbation selects a unique
  // optimizer at an objective bias of trace_reg * tr(X*). The reported
  // objective and primal residuals still refer to the original problem.
  double trace_reg = 0.0;
  bool verbose = false;
};

// Primal-dual path-following interior-point solve. Hermitian blocks are
// handled through the real symmetric embedding [[Re,-Im],[Im,Re]];
// scaling is Nesterov-Todd with a Mehrotra-style predictor-corrector and
// a dense Schur complement solved by Cholesky.
SdpSolution solve(const SdpProblem& problem, const SdpOptions& options = {});

struct FeasibilityReport {
  double max_equality_violation = 0.0;
  double min_eigenvalue = 0.0;
  double max_fixed_entry_violation = 0.0;
};

// Pure diagnostic: residuals of a candidate block assignment.
FeasibilityReport check_feasibility(const SdpProblem& problem,
                                    const std::vector<Eigen::MatrixXcd>& blocks);

// Value of a functional at a block assignment.
double evaluate(const SdpFunctional& f,
                const std::vector<Eigen::MatrixXcd>& blocks);

}  // namespace lse
