#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lse/certificate.hpp"
#include "lse/signal.hpp"
#include "lse/trig_ops.hpp"

namespace lse {

// Samples of the dual polynomial <q, c(f)> on a uniform grid over
// [0,1)^2; values(a,b) is the sample at f = (a/res, b/res).
struct DualPolynomialGrid {
  int n = 0;
  int resolution = 0;
  Eigen::MatrixXcd values;

  Frequency2D grid_point(int a, int b) const {
    return {static_cast<double>(a) / resolution, static_cast<double>(b) / resolution};
  }
};

// A frequency region with the modulus level the dual polynomial attains
// at true components inside it (w_i for subband priors, 1 unweighted).
struct PeakRegion {
  RawSubband region;
  double threshold = 1.0;
};

struct RecoveryResult {
  SpectralSignal estimated;
  std::vector<double> frequency_errors;  // per true component, torus distance
  std::vector<bool> matched;             // per true component
  bool success = false;
};

// Evaluates <q, c(f)> on a resolution x resolution grid via a 2-D FFT of
// the zero-padded coefficient array. Requires resolution >= 4n.
DualPolynomialGrid eval_dual_poly(const DualCertificate& cert, int resolution);

// Direct-summation evaluation at one frequency (the FFT's oracle, also
// used to re-check refined peak locations).
Complex eval_dual_poly_at(const DualCertificate& cert, const Frequency2D& f);

// Local maxima of |Q(f)|/threshold(f) above 1-eps inside the given
// regions, refined by separable quadratic interpolation and merged when
// closer than one grid cell.
std::vector<Frequency2D> find_peaks(const DualPolynomialGrid& grid,
                                    const DualCertificate& cert,
                                    const std::vector<PeakRegion>& regions,
                                    double eps = 1e-3);

struct AmplitudeFit {
  Eigen::VectorXcd amplitudes;
  double residual = 0.0;          // l2 norm of the misfit on T
  double condition_number = 0.0;  // of the restricted atom matrix
};

// Least-squares fit of the observed samples to atoms at the estimated
// frequencies. Throws if there are more frequencies than samples.
AmplitudeFit recover_amplitudes(const std::vector<Frequency2D>& freqs,
                                const Observations& obs);

// Greedy one-to-one matching by increasing torus distance.
RecoveryResult score(const SpectralSignal& truth, const SpectralSignal& estimated,
                     double radius = 1e-2);

// Grid dump as CSV: header "f1,f2,re,im,abs", one row per grid point.
void grid_to_csv(const DualPolynomialGrid& grid, std::ostream& os);

}  // namespace lse
