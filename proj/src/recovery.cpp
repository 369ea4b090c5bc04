#include "lse/recovery.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace lse {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Complex eval_dual_poly_at(const DualCertificate& cert, const Frequency2D& f) {
  const int n = cert.n;
  Complex acc(0.0, 0.0);
  for (int k1 = 0; k1 < n; ++k1) {
    for (int k2 = 0; k2 < n; ++k2) {
      const double phase = -2.0 * kPi * (f.f1 * k1 + f.f2 * k2);
      acc += cert.q(flat_index(k1, k2, n)) * Complex(std::cos(phase), std::sin(phase));
    }
  }
  return acc / static_cast<double>(n);
}

DualPolynomialGrid eval_dual_poly(const DualCertificate& cert, int resolution) {
  const int n = cert.n;
  if (n <= 0 || cert.q.size() != static_cast<Eigen::Index>(n) * n)
    throw std::invalid_argument("eval_dual_poly: malformed certificate");
  if (resolution < 4 * n)
    throw std::invalid_argument("eval_dual_poly: resolution must be at least 4n");

  // Q(a/res, b/res) = (1/n) sum_k q_k e^{-j 2 pi (a k1 + b k2)/res} is a
  // forward DFT of the zero-padded coefficient array.
  const int res = resolution;
  std::vector<std::complex<double>> in(static_cast<size_t>(res) * res,
                                       Complex(0.0, 0.0));
  std::vector<std::complex<double>> out(static_cast<size_t>(res) * res);
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2)
      in[static_cast<size_t>(k1) * res + k2] = cert.q(flat_index(k1, k2, n)) /
                                               static_cast<double>(n);

  fftw_plan plan = fftw_plan_dft_2d(
      res, res, reinterpret_cast<fftw_complex*>(in.data()),
      reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  DualPolynomialGrid grid;
  grid.n = n;
  grid.resolution = res;
  grid.values.resize(res, res);
  for (int a = 0; a < res; ++a)
    for (int b = 0; b < res; ++b)
      grid.values(a, b) = out[static_cast<size_t>(a) * res + b];
  return grid;
}

namespace {

bool in_raw_band(const RawSubband& band, const Frequency2D& f) {
  return f.f1 >= band.lo1 && f.f1 <= band.hi1 && f.f2 >= band.lo2 &&
         f.f2 <= band.hi2;
}

// Best (largest) modulus-to-threshold ratio over the regions containing f;
// -inf when no region does.
double region_ratio(const std::vector<PeakRegion>& regions, const Frequency2D& f,
                    double modulus) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : regions)
    if (in_raw_band(r.region, f)) best = std::max(best, modulus / r.threshold);
  return best;
}

// Sub-cell offset of the parabola through three log-magnitude samples.
double quadratic_offset(double lm, double l0, double lp) {
  const double denom = lm - 2.0 * l0 + lp;
  if (!(std::abs(denom) > 1e-14)) return 0.0;
  return std::clamp(0.5 * (lm - lp) / denom, -0.5, 0.5);
}

}  // namespace

std::vector<Frequency2D> find_peaks(const DualPolynomialGrid& grid,
                                    const DualCertificate& cert,
                                    const std::vector<PeakRegion>& regions,
                                    double eps) {
  const int res = grid.resolution;
  if (res <= 0) throw std::invalid_argument("find_peaks: empty grid");

  Eigen::MatrixXd mag(res, res);
  Eigen::MatrixXd ratio(res, res);
  for (int a = 0; a < res; ++a) {
    for (int b = 0; b < res; ++b) {
      mag(a, b) = std::abs(grid.values(a, b));
      ratio(a, b) = region_ratio(regions, grid.grid_point(a, b), mag(a, b));
    }
  }

  struct Candidate {
    Frequency2D f;
    double modulus;
  };
  std::vector<Candidate> cands;

  for (int a = 0; a < res; ++a) {
    for (int b = 0; b < res; ++b) {
      if (!(ratio(a, b) >= 1.0 - eps)) continue;
      bool is_max = true;
      for (int da = -1; da <= 1 && is_max; ++da) {
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          const int aa = (a + da + res) % res;
          const int bb = (b + db + res) % res;
          if (mag(aa, bb) > mag(a, b)) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;

      // Separable quadratic refinement on log-magnitude.
      const double tiny = 1e-300;
      const double l0 = std::log(mag(a, b) + tiny);
      const double la_m = std::log(mag((a - 1 + res) % res, b) + tiny);
      const double la_p = std::log(mag((a + 1) % res, b) + tiny);
      const double lb_m = std::log(mag(a, (b - 1 + res) % res) + tiny);
      const double lb_p = std::log(mag(a, (b + 1) % res) + tiny);
      const double off_a = quadratic_offset(la_m, l0, la_p);
      const double off_b = quadratic_offset(lb_m, l0, lb_p);
      Frequency2D f((a + off_a) / res, (b + off_b) / res);
      cands.push_back({f, std::abs(eval_dual_poly_at(cert, f))});
    }
  }

  // Merge candidates closer than one grid cell, keeping the larger modulus.
  std::sort(cands.begin(), cands.end(),
            [](const Candidate& x, const Candidate& y) {
              return x.modulus > y.modulus;
            });
  const double cell = 1.0 / res;
  std::vector<Frequency2D> peaks;
  for (const auto& c : cands) {
    bool merged = false;
    for (const auto& p : peaks) {
      if (c.f.torus_dist(p) < cell) {
        merged = true;
        break;
      }
    }
    if (!merged) peaks.push_back(c.f);
  }
  std::sort(peaks.begin(), peaks.end(), [](const Frequency2D& x, const Frequency2D& y) {
    return x.f1 != y.f1 ? x.f1 < y.f1 : x.f2 < y.f2;
  });
  return peaks;
}

AmplitudeFit recover_amplitudes(const std::vector<Frequency2D>& freqs,
                                const Observations& obs) {
  const int m = obs.set.size();
  const int r = static_cast<int>(freqs.size());
  if (r == 0) throw std::invalid_argument("recover_amplitudes: no frequencies");
  if (r > m)
    throw std::invalid_argument(
        "recover_amplitudes: more frequencies than samples");

  Eigen::MatrixXcd A(m, r);
  for (int j = 0; j < r; ++j) {
    const Eigen::VectorXcd atom = atom2d(freqs[j], obs.set.n);
    for (int i = 0; i < m; ++i) A(i, j) = atom(obs.set.indices[i]);
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU |
                                                Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smin <= 1e-12 * std::max(1.0, smax))
    throw std::runtime_error("recover_amplitudes: atom matrix is rank deficient");

  AmplitudeFit fit;
  fit.amplitudes = svd.solve(obs.values);
  fit.residual = (A * fit.amplitudes - obs.values).norm();
  fit.condition_number = smax / smin;
  return fit;
}

RecoveryResult score(const SpectralSignal& truth, const SpectralSignal& estimated,
                     double radius) {
  RecoveryResult result;
  result.estimated = estimated;
  const int rt = truth.r();
  const int re = estimated.r();
  result.frequency_errors.assign(rt, std::numeric_limits<double>::infinity());
  result.matched.assign(rt, false);

  struct Pair {
    double dist;
    int ti, ei;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<size_t>(rt) * re);
  for (int ti = 0; ti < rt; ++ti)
    for (int ei = 0; ei < re; ++ei)
      pairs.push_back({truth.components[ti].first.torus_dist(
                           estimated.components[ei].first),
                       ti, ei});
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& x, const Pair& y) { return x.dist < y.dist; });

  std::vector<bool> est_used(re, false);
  for (const auto& p : pairs) {
    if (result.matched[p.ti] || est_used[p.ei]) continue;
    result.matched[p.ti] = true;
    est_used[p.ei] = true;
    result.frequency_errors[p.ti] = p.dist;
  }

  result.success = (rt == re);
  for (int ti = 0; ti < rt; ++ti)
    if (!result.matched[ti] || result.frequency_errors[ti] > radius)
      result.success = false;
  return result;
}

void grid_to_csv(const DualPolynomialGrid& grid, std::ostream& os) {
  os << "f1,f2,re,im,abs\n";
  for (int a = 0; a < grid.resolution; ++a) {
    for (int b = 0; b < grid.resolution; ++b) {
      const Frequency2D f = grid.grid_point(a, b);
      const Complex v = grid.values(a, b);
      os << f.f1 << ',' << f.f2 << ',' << v.real() << ',' << v.imag() << ','
         << std::abs(v) << '\n';
    }
  }
}

}  // namespace lse
