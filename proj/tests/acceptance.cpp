// Acceptance suite: one line per criterion, pass/fail judged against
// tolerances pinned below. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lse/certificate.hpp"
#include "lse/experiments.hpp"
#include "lse/grid_oracle.hpp"
#include "lse/recovery.hpp"
#include "lse/rng.hpp"
#include "lse/signal.hpp"
#include "lse/trig_ops.hpp"
#include "support.hpp"

using lse::Complex;
using lse::LatticeIndex;

namespace {

int g_failures = 0;

double now_seconds() {
  static const auto t0 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::printf("criterion %d: %s (%s) [%.1f s]\n", id, pass ? "PASS" : "FAIL",
              detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

Eigen::MatrixXd theta_or_zero(int k, int m) {
  if (k <= -m || k >= m) return Eigen::MatrixXd::Zero(m, m);
  return lse::theta1d(k, m);
}

Complex op_T_oracle(const LatticeIndex& k, double d0, double d1,
                    const Eigen::MatrixXcd& G, int n) {
  const int m = n - 1;
  const Eigen::MatrixXd M =
      d1 * kron(theta_or_zero(k.k2, m), theta_or_zero(k.k1 - 1, m)) +
      d0 * kron(theta_or_zero(k.k2, m), theta_or_zero(k.k1, m)) +
      d1 * kron(theta_or_zero(k.k2, m), theta_or_zero(k.k1 + 1, m));
  return (M.cast<Complex>() * G).trace();
}

Complex op_L_oracle(const LatticeIndex& k, double r0, double r1,
                    const Eigen::MatrixXcd& G, int n) {
  const int m = n - 1;
  const Eigen::MatrixXd M =
      r1 * kron(theta_or_zero(k.k2 - 1, m), theta_or_zero(k.k1, m)) +
      r0 * kron(theta_or_zero(k.k2, m), theta_or_zero(k.k1, m)) +
      r1 * kron(theta_or_zero(k.k2 + 1, m), theta_or_zero(k.k1, m));
  return (M.cast<Complex>() * G).trace();
}

Eigen::MatrixXcd random_hermitian(int side, lse::SplitMix64& g) {
  Eigen::MatrixXcd M(side, side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      M(i, j) = Complex(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0));
  return 0.5 * (M + M.adjoint().eval());
}

lse::Observations full_obs(const lse::SpectralSignal& sig) {
  return lse::sample(lse::synthesize(sig), lse::SampleSet::full(sig.n));
}

// ---------------------------------------------------------------- 1
void criterion1() {
  const double t0 = now_seconds();
  double worst = 0.0;
  for (int n : {2, 3, 4}) {
    lse::SplitMix64 g(1000 + n);
    const int big = n * n, small = (n - 1) * (n - 1);
    const Eigen::MatrixXcd G0 = random_hermitian(big, g);
    const Eigen::MatrixXcd G1 = random_hermitian(small, g);
    const Eigen::MatrixXcd G2 = random_hermitian(small, g);
    const Eigen::MatrixXcd G3 = random_hermitian(small, g);
    const Eigen::MatrixXcd G4 = random_hermitian(small, g);
    const lse::FoldedSubband band = lse::fold_subband({0.1, 0.35, 0.05, 0.4});
    const double ch1 = band.cos_hi1(), cl1 = band.cos_lo1();
    const double ch2 = band.cos_hi2(), cl2 = band.cos_lo2();
    for (const LatticeIndex& k : lse::halfspace(n)) {
      // theta2d against the dense Kronecker product
      const Eigen::MatrixXd dense =
          kron(lse::theta1d(k.k2, n), lse::theta1d(k.k1, n));
      worst = std::max(worst,
                       (lse::theta2d(k, n) - dense).cwiseAbs().maxCoeff());
      // T/L functionals against dense materialization
      worst = std::max(worst, std::abs(lse::op_T(k, 0.6, -0.3, G1) -
                                       op_T_oracle(k, 0.6, -0.3, G1, n)));
      worst = std::max(worst, std::abs(lse::op_L(k, -0.2, 0.9, G2) -
                                       op_L_oracle(k, -0.2, 0.9, G2, n)));
      // the assembled band functional against its dense constituents
      const Complex want =
          (lse::theta2d(k, n).cast<Complex>() * G0).trace() +
          op_L_oracle(k, -ch1, 0.5, G1, n) + op_L_oracle(k, cl1, -0.5, G2, n) +
          op_T_oracle(k, -ch2, 0.5, G3, n) + op_T_oracle(k, cl2, -0.5, G4, n);
      worst = std::max(
          worst, std::abs(lse::gram_constraint(k, band, G0, G1, G2, G3, G4) -
                          want));
    }
  }
  std::ostringstream d;
  d << "max operator deviation " << worst << " vs tol 1e-12";
  report(1, worst <= 1e-12, d.str(), now_seconds() - t0);
}

// ---------------------------------------------------------------- 2
void criterion2() {
  const double t0 = now_seconds();
  double worst_obj = 0.0, worst_kkt = 0.0;
  bool all_optimal = true;

  auto check = [&](const lse::SdpProblem& p, double optimum) {
    const lse::SdpSolution sol = lse::solve(p);
    all_optimal = all_optimal && sol.status == lse::SdpStatus::Optimal;
    worst_obj = std::max(worst_obj, std::abs(sol.objective - optimum));
    worst_kkt = std::max({worst_kkt, sol.residuals.primal_infeasibility,
                          sol.residuals.dual_infeasibility});
  };

  {  // minimize trace with a single feasible point
    lse::SdpProblem p;
    p.blocks.push_back({"X", 2});
    p.maximize = false;
    p.objective.terms.push_back({0, 0, 0, 1.0, 0.0});
    p.objective.terms.push_back({0, 1, 1, 1.0, 0.0});
    lse::SdpEquality e1, e2, e3, e4;
    e1.lhs.terms.push_back({0, 0, 0, 1.0, 0.0});
    e1.rhs = 1.0;
    e2.lhs.terms.push_back({0, 1, 1, 1.0, 0.0});
    e2.rhs = 1.0;
    e3.lhs.terms.push_back({0, 0, 1, 1.0, 0.0});
    e3.rhs = 0.5;
    e4.lhs.terms.push_back({0, 0, 1, 0.0, 1.0});
    e4.rhs = 0.0;
    p.equalities = {e1, e2, e3, e4};
    check(p, 2.0);
  }
  {  // maximize the symmetric off-diagonal of a correlation matrix
    lse::SdpProblem p;
    p.blocks.push_back({"X", 2});
    p.maximize = true;
    p.objective.terms.push_back({0, 0, 1, 2.0, 0.0});
    lse::SdpEquality e1, e2;
    e1.lhs.terms.push_back({0, 0, 0, 1.0, 0.0});
    e1.rhs = 1.0;
    e2.lhs.terms.push_back({0, 1, 1, 1.0, 0.0});
    e2.rhs = 1.0;
    p.equalities = {e1, e2};
    check(p, 2.0);
  }
  for (std::uint64_t seed = 200; seed < 225; ++seed) {
    const lse_test::PinnedSdp ps = lse_test::make_pinned_sdp(seed);
    check(ps.problem, ps.optimum);
  }
  std::ostringstream d;
  d << "27 problems, max |obj err| " << worst_obj << " vs 1e-5, max KKT "
    << worst_kkt << " vs 1e-7" << (all_optimal ? "" : ", non-optimal status!");
  report(2, all_optimal && worst_obj <= 1e-5 && worst_kkt <= 1e-7, d.str(),
         now_seconds() - t0);
}

// ---------------------------------------------------------------- 3
void criterion3() {
  const double t0 = now_seconds();
  double worst_l1 = 0.0, worst_oracle = 0.0;
  bool all_optimal = true;
  for (std::uint64_t seed = 300; seed < 310; ++seed) {
    lse::SplitMix64 g(seed);
    lse::SpectralSignal sig;
    sig.n = 7;
    double sum_d = 0.0;
    // rejection-sample cells with wraparound Chebyshev separation >= 2 so
    // the continuous atomic norm coincides with the orthogonal-atom sum
    std::vector<int> cells;
    for (;;) {
      cells = g.sample_without_replacement(49, 4);
      bool ok = true;
      for (size_t i = 0; i < cells.size() && ok; ++i)
        for (size_t j = i + 1; j < cells.size() && ok; ++j) {
          const int d1 = std::abs(cells[i] / 7 - cells[j] / 7);
          const int d2 = std::abs(cells[i] % 7 - cells[j] % 7);
          const int sep = std::max(std::min(d1, 7 - d1), std::min(d2, 7 - d2));
          ok = sep >= 2;
        }
      if (ok) break;
    }
    for (int c : cells) {
      const lse::Frequency2D f((c / 7) / 7.0, (c % 7) / 7.0);
      const double mag = g.uniform(0.5, 3.0);
      sum_d += mag;
      sig.components.push_back({f, std::polar(mag, g.uniform(0.0, 6.28))});
    }
    const lse::Observations obs = full_obs(sig);
    const lse::DualCertificate cert = lse::solve_unweighted(obs);
    all_optimal = all_optimal && cert.status == lse::SdpStatus::Optimal;
    worst_l1 = std::max(worst_l1, std::abs(cert.objective - sum_d));
    lse::GridProblem gp{7, 7, obs};
    const lse::GridL1Result l1 = lse::solve_grid_l1(gp);
    worst_oracle = std::max(worst_oracle, std::abs(cert.objective - l1.objective));
  }
  std::ostringstream d;
  d << "10 on-grid instances, max |obj - sum|d|| " << worst_l1
    << ", max |obj - grid l1| " << worst_oracle << " vs 1e-4"
    << (all_optimal ? "" : ", non-optimal status!");
  report(3, all_optimal && worst_l1 <= 1e-4 && worst_oracle <= 1e-4, d.str(),
         now_seconds() - t0);
}

// ---------------------------------------------------------------- 4
void criterion4() {
  const double t0 = now_seconds();
  double worst_rel = 0.0;
  bool all_optimal = true;
  for (std::uint64_t seed = 400; seed < 410; ++seed) {
    lse::SplitMix64 g(seed);
    lse::SpectralSignal sig;
    sig.n = 5;
    for (int c = 0; c < 3; ++c)
      sig.components.push_back({{g.uniform01(), g.uniform01()},
                                std::polar(g.uniform(0.5, 2.0),
                                           g.uniform(0.0, 6.28))});
    const lse::Observations obs = full_obs(sig);
    const lse::DualCertificate base = lse::solve_unweighted(obs);
    const std::vector<lse::SubbandPrior> torus = {{{0.0, 1.0, 0.0, 1.0}, 1.0}};
    const lse::DualCertificate wcert = lse::solve_weighted(obs, torus);
    all_optimal = all_optimal && base.status == lse::SdpStatus::Optimal &&
                  wcert.status == lse::SdpStatus::Optimal;
    worst_rel = std::max(worst_rel, std::abs(wcert.objective - base.objective) /
                                        std::abs(base.objective));
  }
  std::ostringstream d;
  d << "10 instances, max relative objective difference " << worst_rel
    << " vs 1e-5" << (all_optimal ? "" : ", non-optimal status!");
  report(4, all_optimal && worst_rel <= 1e-5, d.str(), now_seconds() - t0);
}

// ---------------------------------------------------------------- 5
void criterion5() {
  const double t0 = now_seconds();
  double worst_unw = 0.0, worst_w = 0.0;
  bool all_optimal = true;
  // unweighted: partial observation, bound 1 on the whole torus
  for (std::uint64_t seed = 500; seed < 510; ++seed) {
    lse::SplitMix64 g(seed);
    lse::SpectralSignal sig;
    sig.n = 5;
    for (int c = 0; c < 3; ++c)
      sig.components.push_back({{g.uniform01(), g.uniform01()},
                                std::polar(g.uniform(0.5, 2.0),
                                           g.uniform(0.0, 6.28))});
    const lse::SampleSet set =
        lse::SampleSet::from_flat(5, g.sample_without_replacement(25, 18));
    const lse::Observations obs = lse::sample(lse::synthesize(sig), set);
    const lse::DualCertificate cert = lse::solve_unweighted(obs);
    all_optimal = all_optimal && lse::certificate_usable(cert, 1e-5);
    if (!lse::certificate_usable(cert, 1e-5)) continue;
    const lse::DualPolynomialGrid grid = lse::eval_dual_poly(cert, 128);
    worst_unw = std::max(worst_unw, grid.values.cwiseAbs().maxCoeff() - 1.0);
  }
  // weighted: two-band priors, per-band bound w_i on the raw band
  const std::vector<lse::SubbandPrior> priors = {{{0.0, 0.2, 0.0, 0.2}, 2.0},
                                                 {{0.5, 0.7, 0.5, 0.7}, 0.5}};
  for (std::uint64_t seed = 550; seed < 560; ++seed) {
    lse::SplitMix64 g(seed);
    lse::SpectralSignal sig;
    sig.n = 5;
    for (int c = 0; c < 2; ++c) {
      const auto& band = priors[c].raw;
      sig.components.push_back(
          {{g.uniform(band.lo1, band.hi1), g.uniform(band.lo2, band.hi2)},
           std::polar(g.uniform(0.5, 2.0), g.uniform(0.0, 6.28))});
    }
    const lse::Observations obs = full_obs(sig);
    const lse::DualCertificate cert = lse::solve_weighted(obs, priors);
    all_optimal = all_optimal && lse::certificate_usable(cert, 1e-5);
    if (!lse::certificate_usable(cert, 1e-5)) continue;
    for (const auto& p : priors) {
      const int res = 48;
      for (int a = 0; a < res; ++a)
        for (int b = 0; b < res; ++b) {
          const double f1 =
              p.raw.lo1 + (p.raw.hi1 - p.raw.lo1) * a / (res - 1.0);
          const double f2 =
              p.raw.lo2 + (p.raw.hi2 - p.raw.lo2) * b / (res - 1.0);
          worst_w = std::max(
              worst_w, std::abs(lse::eval_dual_poly_at(cert, {f1, f2})) -
                           p.weight());
        }
    }
  }
  std::ostringstream d;
  d << "max unweighted excess over 1: " << worst_unw
    << ", max weighted excess over w_i: " << worst_w << " vs 1e-4"
    << (all_optimal ? "" : ", non-optimal status!");
  report(5, all_optimal && worst_unw <= 1e-4 && worst_w <= 1e-4, d.str(),
         now_seconds() - t0);
}

// ---------------------------------------------------------------- 6/7 helpers
struct PairedOutcome {
  std::vector<bool> weighted;
  std::vector<bool> unweighted;
  int solver_failures = 0;
};

bool recover_success(const lse::DualCertificate& cert,
                     const std::vector<lse::PeakRegion>& regions,
                     const lse::SpectralSignal& truth) {
  if (!lse::certificate_usable(cert, 1e-3)) return false;
  const lse::DualPolynomialGrid grid = lse::eval_dual_poly(cert, 256);
  const std::vector<lse::Frequency2D> peaks =
      lse::find_peaks(grid, cert, regions);
  lse::SpectralSignal est;
  est.n = truth.n;
  for (const auto& f : peaks) est.components.push_back({f, Complex(1.0, 0.0)});
  return lse::score(truth, est, 1e-2).success;
}

// Paired comparison: both methods see the same signal and sample set.
PairedOutcome paired_trials(const lse::ExperimentConfig& cfg,
                            const std::vector<lse::SubbandPrior>& priors,
                            int trials, int m, std::uint64_t label) {
  PairedOutcome out;
  std::vector<lse::PeakRegion> wregions;
  for (const auto& p : priors) wregions.push_back({p.raw, p.weight()});
  const std::vector<lse::PeakRegion> uregions = {{{0.0, 1.0, 0.0, 1.0}, 1.0}};
  for (int t = 0; t < trials; ++t) {
    lse::SplitMix64 g(lse::derive_stream(cfg.seed, t, label));
    const std::uint64_t signal_seed = g.next();
    const std::uint64_t sample_seed = g.next();
    const lse::SpectralSignal truth = lse::draw_signal(cfg, signal_seed);
    lse::SampleSet set;
    if (m == cfg.n * cfg.n) {
      set = lse::SampleSet::full(cfg.n);
    } else {
      lse::SplitMix64 sg(sample_seed);
      set = lse::SampleSet::from_flat(
          cfg.n, sg.sample_without_replacement(cfg.n * cfg.n, m));
    }
    const lse::Observations obs = lse::sample(lse::synthesize(truth), set);

    const lse::DualCertificate ucert = lse::solve_unweighted(obs);
    const lse::DualCertificate wcert = lse::solve_weighted(obs, priors);
    if (!lse::certificate_usable(ucert, 1e-3)) ++out.solver_failures;
    if (!lse::certificate_usable(wcert, 1e-3)) ++out.solver_failures;
    out.unweighted.push_back(recover_success(ucert, uregions, truth));
    out.weighted.push_back(recover_success(wcert, wregions, truth));
  }
  return out;
}

int count(const std::vector<bool>& v) {
  int c = 0;
  for (bool b : v) c += b ? 1 : 0;
  return c;
}

// ---------------------------------------------------------------- 6
PairedOutcome run_criterion6() {
  lse::ExperimentConfig cfg;
  cfg.n = 7;
  cfg.s = 4;
  cfg.seed = 2026;
  cfg.regions = {{0.1, 0.4, 0.1, 0.4}};
  const lse::SubbandPrior band{{0.1, 0.4, 0.1, 0.4}, 1.0 / 0.242};
  const std::vector<lse::SubbandPrior> priors =
      lse::prior_complement(band, 1.0 / 71.42);
  return paired_trials(cfg, priors, 50, 49, 6);
}

void criterion6(PairedOutcome& saved) {
  const double t0 = now_seconds();
  saved = run_criterion6();
  const int w = count(saved.weighted);
  const int u = count(saved.unweighted);
  bool witness = false;
  for (size_t i = 0; i < saved.weighted.size(); ++i)
    if (saved.weighted[i] && !saved.unweighted[i]) witness = true;
  std::ostringstream d;
  d << "50 trials: weighted " << w << "/50, unweighted " << u
    << "/50, weighted-only witness " << (witness ? "yes" : "no")
    << ", solver failures " << saved.solver_failures;
  report(6, w > u && witness, d.str(), now_seconds() - t0);
}

// ---------------------------------------------------------------- 7
struct Sweep7 {
  std::vector<int> m_list{15, 25, 35, 45};
  std::vector<PairedOutcome> cells;
};

Sweep7 run_criterion7() {
  lse::ExperimentConfig cfg;
  cfg.n = 7;
  cfg.s = 4;
  cfg.seed = 2027;
  cfg.regions = {{0.0, 0.2, 0.0, 0.2}, {0.5, 0.7, 0.5, 0.7}};
  cfg.region_counts = {2, 2};
  const std::vector<lse::SubbandPrior> priors = {{{0.0, 0.2, 0.0, 0.2}, 1.0},
                                                 {{0.5, 0.7, 0.5, 0.7}, 1.0}};
  Sweep7 sweep;
  for (int m : sweep.m_list)
    sweep.cells.push_back(
        paired_trials(cfg, priors, 100, m, 700 + static_cast<std::uint64_t>(m)));
  return sweep;
}

void criterion7(Sweep7& saved) {
  const double t0 = now_seconds();
  saved = run_criterion7();
  bool dominated = true;
  bool separated = false;
  std::ostringstream d;
  for (size_t i = 0; i < saved.cells.size(); ++i) {
    const int w = count(saved.cells[i].weighted);
    const int u = count(saved.cells[i].unweighted);
    if (w < u) dominated = false;
    const auto wi = lse::wilson_interval(w, 100);
    const auto ui = lse::wilson_interval(u, 100);
    if (wi.first > ui.second) separated = true;
    d << "m=" << saved.m_list[i] << " w=" << w << "/100 u=" << u << "/100; ";
  }
  d << "dominance " << (dominated ? "yes" : "no") << ", CI separation "
    << (separated ? "yes" : "no");
  report(7, dominated && separated, d.str(), now_seconds() - t0);
}

// ---------------------------------------------------------------- 8
void criterion8(const PairedOutcome& six, const Sweep7& seven) {
  const double t0 = now_seconds();
  const PairedOutcome six2 = run_criterion6();
  const Sweep7 seven2 = run_criterion7();
  bool same = six2.weighted == six.weighted && six2.unweighted == six.unweighted;
  for (size_t i = 0; i < seven.cells.size(); ++i)
    same = same && seven2.cells[i].weighted == seven.cells[i].weighted &&
           seven2.cells[i].unweighted == seven.cells[i].unweighted;
  report(8, same,
         same ? "rerun of criteria 6-7 reproduced every success flag"
              : "rerun diverged from the first pass",
         now_seconds() - t0);
}

}  // namespace

int main(int argc, char** argv) {
  // optional arguments select a subset of criteria (e.g. "1 2 5");
  // criterion 8 always reruns 6 and 7 internally
  std::vector<bool> want(9, argc <= 1);
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id >= 1 && id <= 8) want[static_cast<size_t>(id)] = true;
  }
  if (want[1]) criterion1();
  if (want[2]) criterion2();
  if (want[3]) criterion3();
  if (want[4]) criterion4();
  if (want[5]) criterion5();
  PairedOutcome six;
  if (want[6]) criterion6(six);
  else if (want[8]) six = run_criterion6();
  Sweep7 seven;
  if (want[7]) criterion7(seven);
  else if (want[8]) seven = run_criterion7();
  if (want[8]) criterion8(six, seven);
  int total = 0;
  for (int id = 1; id <= 8; ++id) total += want[static_cast<size_t>(id)] ? 1 : 0;
  std::printf("%d/%d criteria passed\n", total - g_failures, total);
  return g_failures == 0 ? 0 : 1;
}
