// Shared test scaffolding: construction of random SDPs with an
// analytically known optimum via a primal-dual certificate pair.
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "lse/rng.hpp"
#include "lse/sdp.hpp"

namespace lse_test {

struct PinnedSdp {
  lse::SdpProblem problem;
  double optimum = 0.0;
  std::vector<Eigen::MatrixXcd> primal;  // an optimal primal point
};

// Appends the terms of the real-linear functional X -> Re tr(M^H X) for a
// Hermitian M (equals tr(MX), real-valued on Hermitian X).
inline void append_inner_product_terms(lse::SdpFunctional& f, int block,
                                       const Eigen::MatrixXcd& M,
                                       double scale = 1.0) {
  const int s = static_cast<int>(M.rows());
  for (int i = 0; i < s; ++i) {
    if (std::abs(M(i, i).real()) > 0.0)
      f.terms.push_back({block, i, i, scale * M(i, i).real(), 0.0});
    for (int j = i + 1; j < s; ++j) {
      const std::complex<double> v = M(i, j);
      if (std::abs(v) > 0.0)
        f.terms.push_back({block, i, j, scale * 2.0 * v.real(), scale * 2.0 * v.imag()});
    }
  }
}

inline Eigen::MatrixXcd random_hermitian_psd(int side, int rank,
                                             lse::SplitMix64& g) {
  Eigen::MatrixXcd V(side, rank);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < rank; ++j)
      V(i, j) = std::complex<double>(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0));
  return V * V.adjoint();
}

// Builds min <C,X> with C = S* + sum_i y_i A_i where (X*, y, S*) is a
// strictly complementary KKT triple by construction, so the optimum is
// <C, X*> = y·b exactly.
inline PinnedSdp make_pinned_sdp(std::uint64_t seed) {
  lse::SplitMix64 g(seed);
  PinnedSdp out;
  const int nb = 1 + static_cast<int>(g.next() % 3);

  std::vector<Eigen::MatrixXcd> slack(nb);
  for (int b = 0; b < nb; ++b) {
    const int side = 2 + static_cast<int>(g.next() % 5);  // 2..6
    const int rank = 1 + static_cast<int>(g.next() % (side - 1));
    out.problem.blocks.push_back({"B" + std::to_string(b), side});

    // X* of rank `rank`, S* supported on the orthogonal complement.
    Eigen::MatrixXcd V(side, rank);
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < rank; ++j)
        V(i, j) = std::complex<double>(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(V);
    const Eigen::MatrixXcd Q =
        qr.householderQ() * Eigen::MatrixXcd::Identity(side, side);
    const Eigen::MatrixXcd W = Q.rightCols(side - rank);
    out.primal.push_back(V * V.adjoint());
    Eigen::VectorXd d(side - rank);
    for (int i = 0; i < side - rank; ++i) d(i) = g.uniform(0.5, 2.0);
    slack[b] = W * d.asDiagonal() * W.adjoint();
  }

  // Random sparse equalities with rhs evaluated at X*.
  const int m_eq = 2 * nb + static_cast<int>(g.next() % 5);
  std::vector<lse::SdpFunctional> rows(m_eq);
  for (int i = 0; i < m_eq; ++i) {
    const int nterms = 1 + static_cast<int>(g.next() % 4);
    for (int t = 0; t < nterms; ++t) {
      const int b = static_cast<int>(g.next() % nb);
      const int side = out.problem.blocks[b].side;
      const int r = static_cast<int>(g.next() % side);
      const int c = r + static_cast<int>(g.next() % (side - r));
      rows[i].terms.push_back({b, r, c, g.uniform(-1.0, 1.0),
                               r == c ? 0.0 : g.uniform(-1.0, 1.0)});
    }
    out.problem.equalities.push_back(
        {rows[i], lse::evaluate(rows[i], out.primal)});
  }

  // Objective C = S* + sum y_i A_i, minimized.
  out.problem.maximize = false;
  for (int b = 0; b < nb; ++b)
    append_inner_product_terms(out.problem.objective, b, slack[b]);
  for (int i = 0; i < m_eq; ++i) {
    const double yi = g.uniform(-1.0, 1.0);
    for (lse::SdpTerm t : rows[i].terms) {
      t.re_coeff *= yi;
      t.im_coeff *= yi;
      out.problem.objective.terms.push_back(t);
    }
  }
  out.optimum = lse::evaluate(out.problem.objective, out.primal);
  return out;
}

}  // namespace lse_test
