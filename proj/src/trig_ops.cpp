#include "lse/trig_ops.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace lse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Sum of G along the 2-D shifted diagonal:
//   sum_{a,b} G[(a+s1)*m + (b+s2), a*m + b]
// over indices where both endpoints are in range. Equals
// tr[Theta_{(k1=s2,k2=s1)} G] for an m-per-axis flattening; zero when a
// shift exceeds the factor size (the out-of-range Toeplitz factor is the
// zero matrix).
Complex shifted_trace(const Eigen::MatrixXcd& G, int s1, int s2, int m) {
  if (std::abs(s1) >= m || std::abs(s2) >= m) return {0.0, 0.0};
  Complex acc(0.0, 0.0);
  const int a_lo = std::max(0, -s1), a_hi = std::min(m, m - s1);
  const int b_lo = std::max(0, -s2), b_hi = std::min(m, m - s2);
  for (int a = a_lo; a < a_hi; ++a)
    for (int b = b_lo; b < b_hi; ++b)
      acc += G((a + s1) * m + (b + s2), a * m + b);
  return acc;
}

int axis_size(const Eigen::MatrixXcd& G) {
  if (G.rows() != G.cols())
    throw std::invalid_argument("trig_ops: matrix must be square");
  int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(G.rows()))));
  if (static_cast<Eigen::Index>(m) * m != G.rows())
    throw std::invalid_argument("trig_ops: matrix side must be a perfect square");
  return m;
}

struct Interval {
  double lo, hi;
};

Interval fold_axis(double lo, double hi, bool covering) {
  if (hi <= 0.5) return {lo, hi};
  if (lo > 0.5) return {1.0 - hi, 1.0 - lo};
  // straddling case: the folded image keeps [1-hi, 0.5] only
  std::cerr << "fold_subband: interval [" << lo << ", " << hi
            << "] straddles 0.5; the folded band may not cover the raw "
               "band's cosine image\n";
  return {covering ? std::min(lo, 1.0 - hi) : 1.0 - hi, 0.5};
}

}  // namespace

void RawSubband::validate() const {
  auto check = [](double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("RawSubband: inverted bounds");
    if (lo < 0.0 || hi > 1.0)
      throw std::invalid_argument("RawSubband: bounds outside [0,1]");
  };
  check(lo1, hi1);
  check(lo2, hi2);
}

void FoldedSubband::validate() const {
  auto check = [](double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("FoldedSubband: inverted bounds");
    if (lo < 0.0 || hi > 0.5)
      throw std::invalid_argument("FoldedSubband: bounds outside [0,0.5]");
  };
  check(lo1, hi1);
  check(lo2, hi2);
}

double FoldedSubband::cos_lo1() const { return std::cos(kTwoPi * lo1); }
double FoldedSubband::cos_hi1() const { return std::cos(kTwoPi * hi1); }
double FoldedSubband::cos_lo2() const { return std::cos(kTwoPi * lo2); }
double FoldedSubband::cos_hi2() const { return std::cos(kTwoPi * hi2); }

bool FoldedSubband::contains_folded(const Frequency2D& f) const {
  auto fold = [](double x) { return x <= 0.5 ? x : 1.0 - x; };
  double g1 = fold(f.f1), g2 = fold(f.f2);
  const double eps = 1e-12;
  return g1 >= lo1 - eps && g1 <= hi1 + eps && g2 >= lo2 - eps && g2 <= hi2 + eps;
}

Eigen::MatrixXd theta1d(int k, int n) {
  if (n < 1) throw std::invalid_argument("theta1d: n must be positive");
  if (std::abs(k) >= n) throw std::invalid_argument("theta1d: |k| >= n");
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    int j = i + k;
    if (j >= 0 && j < n) t(i, j) = 1.0;
  }
  return t;
}

Eigen::MatrixXd theta2d(const LatticeIndex& k, int n) {
  Eigen::MatrixXd t1 = theta1d(k.k1, n);
  Eigen::MatrixXd t2 = theta1d(k.k2, n);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * n, n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (t2(a, b) != 0.0) out.block(a * n, b * n, n, n) = t1;
  return out;
}

std::vector<LatticeIndex> halfspace(int n) {
  if (n < 1) throw std::invalid_argument("halfspace: n must be positive");
  std::vector<LatticeIndex> h;
  h.reserve(((2 * n - 1) * (2 * n - 1) + 1) / 2);
  for (int k1 = 0; k1 <= n - 1; ++k1) h.push_back({k1, 0});
  for (int k2 = 1; k2 <= n - 1; ++k2)
    for (int k1 = 1 - n; k1 <= n - 1; ++k1) h.push_back({k1, k2});
  return h;
}

FoldedSubband fold_subband(const RawSubband& raw, bool covering_straddle) {
  raw.validate();
  Interval a = fold_axis(raw.lo1, raw.hi1, covering_straddle);
  Interval b = fold_axis(raw.lo2, raw.hi2, covering_straddle);
  FoldedSubband out{a.lo, a.hi, b.lo, b.hi};
  out.validate();
  return out;
}

Complex op_T(const LatticeIndex& k, double d0, double d1,
             const Eigen::MatrixXcd& G) {
  const int m = axis_size(G);
  return d1 * shifted_trace(G, k.k2, k.k1 - 1, m) +
         d0 * shifted_trace(G, k.k2, k.k1, m) +
         d1 * shifted_trace(G, k.k2, k.k1 + 1, m);
}

Complex op_L(const LatticeIndex& k, double r0, double r1,
             const Eigen::MatrixXcd& G) {
  const int m = axis_size(G);
  return r1 * shifted_trace(G, k.k2 - 1, k.k1, m) +
         r0 * shifted_trace(G, k.k2, k.k1, m) +
         r1 * shifted_trace(G, k.k2 + 1, k.k1, m);
}

Complex gram_constraint(const LatticeIndex& k, const FoldedSubband& band,
                        const Eigen::MatrixXcd& G0, const Eigen::MatrixXcd& G1,
                        const Eigen::MatrixXcd& G2, const Eigen::MatrixXcd& G3,
                        const Eigen::MatrixXcd& G4) {
  band.validate();
  const int n = axis_size(G0);
  const int m = n - 1;
  if (G1.rows() != m * m || G2.rows() != m * m || G3.rows() != m * m ||
      G4.rows() != m * m)
    throw std::invalid_argument("gram_constraint: G1..G4 must be (n-1)^2 sized");
  Complex acc = shifted_trace(G0, k.k2, k.k1, n);
  acc += op_L(k, -band.cos_hi1(), 0.5, G1);
  acc += op_L(k, band.cos_lo1(), -0.5, G2);
  acc += op_T(k, -band.cos_hi2(), 0.5, G3);
  acc += op_T(k, band.cos_lo2(), -0.5, G4);
  return acc;
}

}  // namespace lse
