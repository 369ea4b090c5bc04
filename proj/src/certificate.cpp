#include "lse/certificate.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace lse {

namespace {

// Appends the terms of the complex-valued shifted-diagonal functional
//   sum_{a,b} G[(a+s1)*m + (b+s2) + off, a*m + b + off] * coeff
// to the real or imaginary constraint row.
void add_shifted_diag(std::vector<SdpTerm>& terms, int block, int off, int s1,
                      int s2, int m, double coeff, bool imag_part) {
  if (std::abs(s1) >= m || std::abs(s2) >= m || coeff == 0.0) return;
  const int a_lo = std::max(0, -s1), a_hi = std::min(m, m - s1);
  const int b_lo = std::max(0, -s2), b_hi = std::min(m, m - s2);
  for (int a = a_lo; a < a_hi; ++a)
    for (int b = b_lo; b < b_hi; ++b) {
      SdpTerm t;
      t.block = block;
      t.row = off + (a + s1) * m + (b + s2);
      t.col = off + a * m + b;
      (imag_part ? t.im_coeff : t.re_coeff) = coeff;
      terms.push_back(t);
    }
}

struct FamilyBlocks {
  int big = 0;           // bordered (n^2+1) block holding G0 and q/w
  int small[4] = {0, 0, 0, 0};  // G1..G4, side (n-1)^2
};

// One Gram-family row (Re or Im part) at lattice index k.
SdpEquality family_row(const LatticeIndex& k, const FoldedSubband& band, int n,
                       const FamilyBlocks& fb, bool imag_part) {
  SdpEquality eq;
  auto& T = eq.lhs.terms;
  const int m = n - 1;
  // G0 part of the bordered block
  add_shifted_diag(T, fb.big, 0, k.k2, k.k1, n, 1.0, imag_part);
  // axis-1 cosine box: multipliers (cos w1 - cos wH1) and (cos wL1 - cos w1)
  add_shifted_diag(T, fb.small[0], 0, k.k2 - 1, k.k1, m, 0.5, imag_part);
  add_shifted_diag(T, fb.small[0], 0, k.k2, k.k1, m, -band.cos_hi1(), imag_part);
  add_shifted_diag(T, fb.small[0], 0, k.k2 + 1, k.k1, m, 0.5, imag_part);
  add_shifted_diag(T, fb.small[1], 0, k.k2 - 1, k.k1, m, -0.5, imag_part);
  add_shifted_diag(T, fb.small[1], 0, k.k2, k.k1, m, band.cos_lo1(), imag_part);
  add_shifted_diag(T, fb.small[1], 0, k.k2 + 1, k.k1, m, -0.5, imag_part);
  // axis-2 cosine box
  add_shifted_diag(T, fb.small[2], 0, k.k2, k.k1 - 1, m, 0.5, imag_part);
  add_shifted_diag(T, fb.small[2], 0, k.k2, k.k1, m, -band.cos_hi2(), imag_part);
  add_shifted_diag(T, fb.small[2], 0, k.k2, k.k1 + 1, m, 0.5, imag_part);
  add_shifted_diag(T, fb.small[3], 0, k.k2, k.k1 - 1, m, -0.5, imag_part);
  add_shifted_diag(T, fb.small[3], 0, k.k2, k.k1, m, band.cos_lo2(), imag_part);
  add_shifted_diag(T, fb.small[3], 0, k.k2, k.k1 + 1, m, -0.5, imag_part);
  eq.rhs = (!imag_part && k.k1 == 0 && k.k2 == 0) ? 1.0 : 0.0;
  return eq;
}

void add_border_pins_and_objective(CertificateProblem& cp,
                                   const Observations& obs,
                                   const std::vector<int>& big_blocks,
                                   const std::vector<double>& weights) {
  const int n = obs.set.n;
  const int N = n * n;
  // corner of every bordered block is 1
  for (int big : big_blocks) cp.sdp.fixed_entries.push_back({big, N, N, {1.0, 0.0}});
  // q vanishes off the sample set: pin every border
  for (int idx = 0; idx < N; ++idx) {
    if (obs.set.contains(idx)) continue;
    for (int big : big_blocks)
      cp.sdp.fixed_entries.push_back({big, idx, N, {0.0, 0.0}});
  }
  // borders of all blocks represent the same q: w_j b_j = w_1 b_1 on T
  for (size_t j = 1; j < big_blocks.size(); ++j) {
    for (int t = 0; t < obs.set.size(); ++t) {
      const int idx = obs.set.indices[t];
      for (bool imag_part : {false, true}) {
        SdpEquality eq;
        SdpTerm a;
        a.block = big_blocks[j];
        a.row = idx;
        a.col = N;
        (imag_part ? a.im_coeff : a.re_coeff) = weights[j];
        SdpTerm b;
        b.block = big_blocks[0];
        b.row = idx;
        b.col = N;
        (imag_part ? b.im_coeff : b.re_coeff) = -weights[0];
        eq.lhs.terms = {a, b};
        eq.rhs = 0.0;
        cp.sdp.equalities.push_back(std::move(eq));
      }
    }
  }
  // objective: Re<x,q>. The Gram families certify the border against the
  // unnormalized exponential vector, while atoms carry a 1/n entry scale,
  // so q = n * w_1 * border_1.
  const double scale = static_cast<double>(n) * weights[0];
  for (int t = 0; t < obs.set.size(); ++t) {
    const int idx = obs.set.indices[t];
    const Complex x = obs.values(t);
    SdpTerm re_t{big_blocks[0], idx, N, scale * x.real(), 0.0};
    SdpTerm im_t{big_blocks[0], idx, N, 0.0, scale * x.imag()};
    cp.sdp.objective.terms.push_back(re_t);
    cp.sdp.objective.terms.push_back(im_t);
  }
  cp.sdp.maximize = true;
  cp.border_block = big_blocks[0];
  cp.border_weight = scale;
  cp.observed_values = obs.values;
}

}  // namespace

double SubbandPrior::weight() const { return 1.0 / prob; }

void SubbandPrior::validate() const {
  raw.validate();
  if (!(prob > 0.0)) throw std::invalid_argument("SubbandPrior: probability must be positive");
}

CertificateProblem build_unweighted(const Observations& obs) {
  obs.set.validate();
  const int n = obs.set.n;
  const int N = n * n;
  CertificateProblem cp;
  cp.n = n;
  cp.set = obs.set;
  cp.sdp.blocks.push_back({"Qq", N + 1});
  for (const auto& k : halfspace(n)) {
    SdpEquality re_eq;
    add_shifted_diag(re_eq.lhs.terms, 0, 0, k.k2, k.k1, n, 1.0, false);
    re_eq.rhs = (k.k1 == 0 && k.k2 == 0) ? 1.0 : 0.0;
    cp.sdp.equalities.push_back(std::move(re_eq));
    if (k.k1 != 0 || k.k2 != 0) {
      SdpEquality im_eq;
      add_shifted_diag(im_eq.lhs.terms, 0, 0, k.k2, k.k1, n, 1.0, true);
      im_eq.rhs = 0.0;
      cp.sdp.equalities.push_back(std::move(im_eq));
    }
  }
  add_border_pins_and_objective(cp, obs, {0}, {1.0});
  cp.bands.push_back(FoldedSubband{0.0, 0.5, 0.0, 0.5});
  cp.weights.push_back(1.0);
  return cp;
}

CertificateProblem build_weighted(const Observations& obs,
                                  const std::vector<SubbandPrior>& priors,
                                  bool covering_straddle) {
  obs.set.validate();
  if (priors.empty()) throw std::invalid_argument("build_weighted: empty prior list");
  const int n = obs.set.n;
  if (n < 2) throw std::invalid_argument("build_weighted: n >= 2 required");
  const int N = n * n;
  const int M = (n - 1) * (n - 1);

  CertificateProblem cp;
  cp.n = n;
  cp.set = obs.set;

  std::vector<FamilyBlocks> fbs;
  std::vector<int> big_blocks;
  std::vector<double> weights;
  for (size_t i = 0; i < priors.size(); ++i) {
    priors[i].validate();
    FoldedSubband band = fold_subband(priors[i].raw, covering_straddle);
    FamilyBlocks fb;
    fb.big = static_cast<int>(cp.sdp.blocks.size());
    cp.sdp.blocks.push_back({"P" + std::to_string(i), N + 1});
    for (int l = 0; l < 4; ++l) {
      fb.small[l] = static_cast<int>(cp.sdp.blocks.size());
      cp.sdp.blocks.push_back({"G" + std::to_string(l + 1) + "_" + std::to_string(i), M});
    }
    fbs.push_back(fb);
    big_blocks.push_back(fb.big);
    weights.push_back(priors[i].weight());
    cp.bands.push_back(band);
    cp.weights.push_back(priors[i].weight());
  }

  for (size_t i = 0; i < priors.size(); ++i) {
    for (const auto& k : halfspace(n)) {
      cp.sdp.equalities.push_back(family_row(k, cp.bands[i], n, fbs[i], false));
      if (k.k1 != 0 || k.k2 != 0)
        cp.sdp.equalities.push_back(family_row(k, cp.bands[i], n, fbs[i], true));
    }
  }

  add_border_pins_and_objective(cp, obs, big_blocks, weights);
  return cp;
}

DualCertificate extract_certificate(const CertificateProblem& cp,
                                    const SdpSolution& sol) {
  if (sol.block_values.empty())
    throw std::runtime_error("extract_certificate: solution carries no iterate");
  const int n = cp.n;
  const int N = n * n;
  DualCertificate cert;
  cert.n = n;
  cert.q = Eigen::VectorXcd::Zero(N);
  const auto& B = sol.block_values[cp.border_block];
  for (int t = 0; t < cp.set.size(); ++t) {
    const int idx = cp.set.indices[t];
    cert.q(idx) = cp.border_weight * B(idx, N);
  }
  cert.objective = sol.objective;
  cert.residuals = sol.residuals;
  cert.status = sol.status;
  cert.iterations = sol.iterations;

  double recomputed = 0.0;
  for (int t = 0; t < cp.set.size(); ++t) {
    const int idx = cp.set.indices[t];
    const Complex x = cp.observed_values(t);
    recomputed += x.real() * cert.q(idx).real() + x.imag() * cert.q(idx).imag();
  }
  if (std::abs(recomputed - cert.objective) > 1e-9 * (1.0 + std::abs(cert.objective)))
    throw std::runtime_error("extract_certificate: objective revalidation failed");
  return cert;
}

namespace {

double solution_score(const SdpSolution& s) {
  return std::max({s.residuals.primal_infeasibility,
                   s.residuals.dual_infeasibility,
                   s.residuals.duality_gap / (1.0 + std::abs(s.objective))});
}

// Solve the certificate program; when the plain run stalls short of a
// trustworthy accuracy (a degenerate optimal face jams the endgame),
// retry with a small trace regularization that restores a unique
// optimizer, and keep whichever solution is more accurate.
DualCertificate solve_certificate(const CertificateProblem& cp,
                                  const SdpOptions& opt) {
  SdpSolution sol = solve(cp.sdp, opt);
  const bool clean = sol.status != SdpStatus::NumericalFailure &&
                     solution_score(sol) <= 1e-5;
  if (!clean) {
    SdpOptions reg_opt = opt;
    reg_opt.trace_reg = 1e-5;
    SdpSolution reg_sol = solve(cp.sdp, reg_opt);
    if (reg_sol.status != SdpStatus::NumericalFailure &&
        !reg_sol.block_values.empty() &&
        (sol.block_values.empty() ||
         solution_score(reg_sol) < solution_score(sol)))
      sol = std::move(reg_sol);
  }
  if (sol.block_values.empty()) {
    DualCertificate cert;
    cert.n = cp.n;
    cert.q = Eigen::VectorXcd::Zero(cp.n * cp.n);
    cert.status = sol.status;
    cert.residuals = sol.residuals;
    cert.iterations = sol.iterations;
    return cert;
  }
  return extract_certificate(cp, sol);
}

}  // namespace

DualCertificate solve_unweighted(const Observations& obs, const SdpOptions& opt) {
  return solve_certificate(build_unweighted(obs), opt);
}

DualCertificate solve_weighted(const Observations& obs,
                               const std::vector<SubbandPrior>& priors,
                               const SdpOptions& opt, bool covering_straddle) {
  return solve_certificate(build_weighted(obs, priors, covering_straddle), opt);
}

std::vector<SubbandPrior> prior_complement(const SubbandPrior& band,
                                           double complement_prob) {
  band.validate();
  if (!(complement_prob > 0.0))
    throw std::invalid_argument("prior_complement: probability must be positive");
  FoldedSubband f = fold_subband(band.raw);
  std::vector<SubbandPrior> out{band};
  auto push_rect = [&](double a1, double b1, double a2, double b2) {
    if (b1 - a1 <= 0.0 || b2 - a2 <= 0.0) return;
    SubbandPrior p;
    p.raw = RawSubband{a1, b1, a2, b2};
    p.prob = complement_prob;
    out.push_back(p);
  };
  push_rect(0.0, f.lo1, 0.0, 0.5);
  push_rect(f.hi1, 0.5, 0.0, 0.5);
  push_rect(f.lo1, f.hi1, 0.0, f.lo2);
  push_rect(f.lo1, f.hi1, f.hi2, 0.5);
  if (out.size() == 1)
    throw std::invalid_argument("prior_complement: complement of the full torus is empty");
  return out;
}

std::string certificate_to_json(const DualCertificate& cert) {
  nlohmann::json j;
  j["n"] = cert.n;
  j["objective"] = cert.objective;
  j["q"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < cert.q.size(); ++i)
    j["q"].push_back({{"re", cert.q(i).real()}, {"im", cert.q(i).imag()}});
  return j.dump(2);
}

DualCertificate certificate_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DualCertificate cert;
  cert.n = j.at("n").get<int>();
  cert.objective = j.at("objective").get<double>();
  const auto& arr = j.at("q");
  cert.q.resize(arr.size());
  for (size_t i = 0; i < arr.size(); ++i)
    cert.q(static_cast<Eigen::Index>(i)) =
        Complex(arr[i].at("re").get<double>(), arr[i].at("im").get<double>());
  cert.status = SdpStatus::Optimal;
  return cert;
}

}  // namespace lse
