#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "lse/signal.hpp"

namespace lse {

// Index on the difference lattice {1-n,...,n-1}^2.
struct LatticeIndex {
  int k1 = 0;
  int k2 = 0;
  bool operator==(const LatticeIndex&) const = default;
};

// A frequency rectangle in [0,1]^2 as given by the user.
struct RawSubband {
  double lo1 = 0.0, hi1 = 0.0;
  double lo2 = 0.0, hi2 = 0.0;
  void validate() const;  // throws on inverted or out-of-range bounds
};

// A rectangle folded into [0,0.5]^2; defines the cosine box
// cos(2 pi f_i) in [cos wH_i, cos wL_i] per axis.
struct FoldedSubband {
  double lo1 = 0.0, hi1 = 0.0;
  double lo2 = 0.0, hi2 = 0.0;

  double cos_lo1() const;  // cos(2 pi lo1), the upper cosine bound on axis 1
  double cos_hi1() const;
  double cos_lo2() const;
  double cos_hi2() const;
  bool contains_folded(const Frequency2D& f) const;
  void validate() const;
};

// Elementary Toeplitz selector: ones on the k-th diagonal, entry (i,j)=1
// iff j - i = k. Throws for |k| >= n.
Eigen::MatrixXd theta1d(int k, int n);

// Theta_k = Theta_{k2} (x) Theta_{k1}, size n^2 x n^2.
Eigen::MatrixXd theta2d(const LatticeIndex& k, int n);

// One representative of each conjugate pair {k,-k} of the difference
// lattice: { (k1,k2) : k2 > 0 } union { (k1,0) : k1 >= 0 }.
// Order: k2 = 0 with k1 = 0..n-1 first, then k2 = 1..n-1 with
// k1 = 1-n..n-1.
std::vector<LatticeIndex> halfspace(int n);

// Per-axis folding of a raw interval into [0, 0.5]:
//   (a) inside [0,0.5]           -> unchanged
//   (b) inside (0.5,1)           -> [1-hi, 1-lo]
//   (c) straddles 0.5            -> [1-hi, 0.5]
// The straddling case drops the sub-0.5 part of the raw interval from
// the cosine image; with covering_straddle the lower bound becomes
// min(lo, 1-hi) so the folded band covers the raw one.
FoldedSubband fold_subband(const RawSubband& raw, bool covering_straddle = false);

// T_{k,d0,d1}(G) = tr[(d1 Th_{k2} (x) Th_{k1-1} + d0 Th_{k2} (x) Th_{k1}
//                      + d1 Th_{k2} (x) Th_{k1+1}) G]
// with (n-1)-sized Toeplitz factors inferred from G; out-of-range shifts
// contribute the zero matrix.
Complex op_T(const LatticeIndex& k, double d0, double d1,
             const Eigen::MatrixXcd& G);

// Same structure with the +-1 shifts applied to the Th_{k2} factor.
Complex op_L(const LatticeIndex& k, double r0, double r1,
             const Eigen::MatrixXcd& G);

// Gram-parameterization functional of the positive-trigonometric-
// polynomial certificate for the folded band:
//
//   tr[Theta_k G0]
//     + L_{k,-cos wH1, 0.5}(G1) + L_{k, cos wL1,-0.5}(G2)   (axis-1 box)
//     + T_{k,-cos wH2, 0.5}(G3) + T_{k, cos wL2,-0.5}(G4)   (axis-2 box)
//
// Imposing gram_constraint = delta_k over the halfspace together with
// G1..G4 >= 0 and [[G0, q/g],[q*/g, 1]] >= 0 certifies
// |<q, c(f)>| <= g on the band. In the Kronecker convention above the
// outer (k2) factor acts on the f1 axis of the data flattening
// k1*n + k2 reversed through the trace pairing, so the axis-1 cosine
// bounds ride on the k2 shifts and vice versa; the center coefficient
// is the constant multiplier term and the shift coefficient 0.5 carries
// the cosine.
Complex gram_constraint(const LatticeIndex& k, const FoldedSubband& band,
                        const Eigen::MatrixXcd& G0, const Eigen::MatrixXcd& G1,
                        const Eigen::MatrixXcd& G2, const Eigen::MatrixXcd& G3,
                        const Eigen::MatrixXcd& G4);

}  // namespace lse
