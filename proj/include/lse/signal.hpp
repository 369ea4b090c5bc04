#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace lse {

using Complex = std::complex<double>;

// A point on the 2-D frequency torus [0,1) x [0,1). Values are reduced
// modulo 1 on construction; distances are wrap-around.
struct Frequency2D {
  double f1 = 0.0;
  double f2 = 0.0;

  Frequency2D() = default;
  Frequency2D(double a, double b);

  static double wrap(double f);
  static double axis_dist(double a, double b);
  double torus_dist(const Frequency2D& other) const;
};

// A mixture of r complex exponentials on an n x n index grid.
struct SpectralSignal {
  int n = 0;
  std::vector<std::pair<Frequency2D, Complex>> components;

  int r() const { return static_cast<int>(components.size()); }
  void validate() const;  // throws std::invalid_argument
};

// Observed flat indices (k1*n + k2) inside J = {0..n-1}^2.
// Indices are kept sorted and unique.
struct SampleSet {
  int n = 0;
  std::vector<int> indices;

  static SampleSet full(int n);
  static SampleSet from_flat(int n, std::vector<int> flat);

  int size() const { return static_cast<int>(indices.size()); }
  bool contains(int flat) const;
  void validate() const;
};

// Values of a vector restricted to a sample set; entries outside the set
// are unobserved. values[i] corresponds to set.indices[i].
struct Observations {
  SampleSet set;
  Eigen::VectorXcd values;
};

inline int flat_index(int k1, int k2, int n) { return k1 * n + k2; }

// a(f) = (1/sqrt(n)) [1, y, ..., y^{n-1}], y = exp(j 2 pi f)
Eigen::VectorXcd atom1d(double f, int n);

// c(f) = a(f1) (x) a(f2), unit norm, entry at k1*n+k2 equal to
// exp(j 2 pi (f1 k1 + f2 k2)) / n
Eigen::VectorXcd atom2d(const Frequency2D& f, int n);

// x = sum_i d_i c(f_i), length n^2
Eigen::VectorXcd synthesize(const SpectralSignal& signal);

// X = Y D Z^T with vec(X^T) == synthesize(signal)
Eigen::MatrixXcd synthesize_matrix(const SpectralSignal& signal);

// Restriction of x to the sample set. Throws on dimension mismatch.
Observations sample(const Eigen::VectorXcd& x, const SampleSet& set);

// Zero-filled length-n^2 vector carrying the observed values on T.
Eigen::VectorXcd scatter(const Observations& obs);

// JSON wire format:
// { "n": int, "components": [ { "f1":, "f2":, "re":, "im": } ] }
std::string signal_to_json(const SpectralSignal& signal);
SpectralSignal signal_from_json(const std::string& text);

}  // namespace lse
