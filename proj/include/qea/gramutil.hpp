// Rank detection and orthonormalization in a Hermitian metric, shared by the
// spectral basis pipelines.
#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qea/errors.hpp"
#include "qea/qarith.hpp"

namespace qea {

// Rank of a Hermitian PSD Gram matrix with a guard against
// tolerance-straddling eigenvalues.  ref is the natural scale of the ambient
// metric: when the metric is degenerate (matrix fibres) an absent spin
// produces a Gram made purely of projection dust, which a scale taken from
// the Gram itself would promote to spurious rank.
template <class Derived>
int gram_rank(const Eigen::MatrixBase<Derived>& G0,
              typename Eigen::NumTraits<typename Derived::Scalar>::Real ref,
              const std::string& what) {
  using Scalar = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  using MatX =
      Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
  const MatX G = (G0 + G0.adjoint()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatX> es(G);
  double scale = std::max(1e-30, double(ref));
  if (G.rows() > 0)
    scale = std::max(scale, double(es.eigenvalues().cwiseAbs().maxCoeff()));
  int r = 0;
  for (int i = 0; i < G.rows(); ++i) {
    const double lam = double(es.eigenvalues()[i]) / scale;
    if (lam > tol::gram) ++r;
    if (lam > tol::gram * 1e-3 && lam < tol::gram * 1e3)
      throw PrecisionError(what + ": multiplicity rank is tolerance-sensitive");
  }
  return r;
}

// Deterministic pivoted modified Gram-Schmidt in the metric K, with one
// reorthogonalization pass per pivot to hold the output Gram at roundoff
// rather than roundoff times the metric's condition number.  Phase
// convention: the largest coefficient of each output vector becomes positive
// real, ties broken by coordinate order.
template <class Scalar>
std::vector<Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>>
metric_orthonormalize(
    const Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>&
        cand0,
    const Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>&
        K,
    int r, Scalar kref, const std::string& what) {
  using VecX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
  std::vector<VecX> cand;
  for (int j = 0; j < cand0.cols(); ++j) cand.push_back(cand0.col(j));
  std::vector<VecX> out;
  for (int step = 0; step < r; ++step) {
    int best = -1;
    Scalar bestn = -1;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const Scalar nn = std::real(cand[i].dot(K * cand[i]));
      if (nn > bestn + Scalar(1e-15)) {
        bestn = nn;
        best = int(i);
      }
    }
    if (best < 0 || bestn <= Scalar(tol::gram) * kref)
      throw PrecisionError(what + ": orthonormalization ran out of vectors");
    VecX v = cand[std::size_t(best)];
    for (const auto& f : out) v -= f * (K * f).dot(v);
    const Scalar nn = std::real(v.dot(K * v));
    if (!(nn > 0))
      throw PrecisionError(what + ": orthonormalization lost a pivot");
    VecX e = v / std::sqrt(nn);
    int argmax = 0;
    Scalar amax = -1;
    for (int i = 0; i < e.size(); ++i)
      if (std::abs(e[i]) > amax * (1 + Scalar(1e-12))) {
        amax = std::abs(e[i]);
        argmax = i;
      }
    e *= std::conj(e[argmax]) / std::abs(e[argmax]);
    out.push_back(e);
    const VecX Ke = K * e;
    std::vector<VecX> next;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (int(i) == best) continue;
      next.push_back(cand[i] - e * Ke.dot(cand[i]));
    }
    cand = std::move(next);
  }
  return out;
}

}  // namespace qea
