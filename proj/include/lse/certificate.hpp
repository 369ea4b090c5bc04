#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lse/sdp.hpp"
#include "lse/signal.hpp"
#include "lse/trig_ops.hpp"

namespace lse {

// A frequency rectangle believed to contain true components with
// relative likelihood prob; the atomic-norm weight is 1/prob.
struct SubbandPrior {
  RawSubband raw;
  double prob = 1.0;

  double weight() const;
  void validate() const;
};

// The dual variable q of the (weighted) atomic-norm program together
// with its solve metadata. q is zero outside T by construction.
struct DualCertificate {
  int n = 0;
  Eigen::VectorXcd q;  // length n^2
  double objective = 0.0;
  SdpResiduals residuals;
  SdpStatus status = SdpStatus::NumericalFailure;
  int iterations = 0;
};

// Whether the certificate is numerically trustworthy at the given
// accuracy. Judged from the recomputed residuals rather than the solver
// status: a run that stalls at its attainable accuracy still returns a
// valid certificate when the residuals are small, while a run that
// terminated by tolerance always passes.
inline bool certificate_usable(const DualCertificate& c, double tol = 1e-5) {
  return c.status != SdpStatus::NumericalFailure &&
         c.residuals.primal_infeasibility <= tol &&
         c.residuals.dual_infeasibility <= tol &&
         c.residuals.duality_gap <= tol * (1.0 + std::abs(c.objective));
}

// A built dual program plus the bookkeeping needed to read q back out of
// the solved blocks.
struct CertificateProblem {
  SdpProblem sdp;
  int n = 0;
  SampleSet set;
  Eigen::VectorXcd observed_values;  // aligned with set.indices
  // q = border_weight * (border column of block border_block)
  int border_block = 0;
  double border_weight = 1.0;
  // per constraint family: folded band and weight (diagnostics)
  std::vector<FoldedSubband> bands;
  std::vector<double> weights;
};

// Dual of unweighted atomic-norm minimization: maximize Re<x,q> subject
// to tr[Theta_k Q] = delta_k over the halfspace, [[Q,q],[q*,1]] PSD and
// q zero off the sample set.
CertificateProblem build_unweighted(const Observations& obs);

// Prior-aware dual: one Gram constraint family and one bordered PSD
// block per (folded) subband, borders carrying q scaled by 1/w_i, with
// the shared q realized through linear coupling of the borders.
CertificateProblem build_weighted(const Observations& obs,
                                  const std::vector<SubbandPrior>& priors,
                                  bool covering_straddle = false);

// Reads q out of an optimal solution and revalidates the objective.
DualCertificate extract_certificate(const CertificateProblem& problem,
                                    const SdpSolution& solution);

// Convenience: build + solve + extract.
DualCertificate solve_unweighted(const Observations& obs, const SdpOptions& opt = {});
DualCertificate solve_weighted(const Observations& obs,
                               const std::vector<SubbandPrior>& priors,
                               const SdpOptions& opt = {},
                               bool covering_straddle = false);

// Complement of a single rectangular prior on the folded torus
// [0,0.5]^2, decomposed into rectangles that each carry
// complement_prob. Returns the original prior followed by the
// complement rectangles. Throws if the band already covers everything.
std::vector<SubbandPrior> prior_complement(const SubbandPrior& band,
                                           double complement_prob);

// JSON dump: { "n": int, "q": [ {"re":..,"im":..} ], "objective": float }
std::string certificate_to_json(const DualCertificate& cert);
DualCertificate certificate_from_json(const std::string& text);

}  // namespace lse
