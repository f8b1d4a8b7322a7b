#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qea/errors.hpp"
#include "qea/qarith.hpp"

// q-deformed Clebsch-Gordan coupling matrices, built from the U_q(su2)
// representation theory rather than a closed formula:
//   E|j,m> = sqrt([j-m][j+m+1]) |j,m+1>,   F = E^dagger,   K|j,m> = q^m |j,m>,
// with the coproduct  Delta(X) = X (x) K^{-1} + K (x) X  for X in {E, F} and
// Delta(K) = K (x) K.  On V_{j1} (x) V_{j2} the top vector of the spin-j
// component spans ker(Delta(E)) inside the weight-j subspace; lower vectors
// follow by normalized application of Delta(F).  Phases: within each weight
// space, basis pairs (m1, m2) are ordered m1 descending outer and m2
// descending inner, and the first nonvanishing coordinate of each top vector
// is taken positive.  At q -> 1 this reproduces the Condon-Shortley matrices.

namespace qea {

// Raising operator E of U_q(su2) at spin two_j/2, slot n <-> m = j - n.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> uq_raise(
    int two_j, const QParam<Scalar>& qp) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat E = Mat::Zero(two_j + 1, two_j + 1);
  for (int i = 1; i <= two_j; ++i)
    E(i - 1, i) = std::sqrt(q_int(i, qp) * q_int(two_j - i + 1, qp));
  return E;
}

// Diagonal of K^power, K|j,m> = q^m |j,m>.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> uq_kdiag(int two_j,
                                                  const QParam<Scalar>& qp,
                                                  int power) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d(two_j + 1);
  for (int i = 0; i <= two_j; ++i)
    d[i] = std::pow(qp.q, Scalar(power) * Scalar(two_j - 2 * i) / Scalar(2));
  return d;
}

template <class Scalar = double>
class QcgCache {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit QcgCache(const QParam<Scalar>& qp) : qp_(qp) {}

  const QParam<Scalar>& qparam() const { return qp_; }

  // All spin blocks of V_{j1} (x) V_{j2} = (+)_j V_j, keyed by two_j.  Each
  // block is the coupling isometry V_j -> V_{j1} (x) V_{j2} with rows indexed
  // by (m1, m2) pairs and columns by m descending.
  const std::map<int, Mat>& decomposition(int two_j1, int two_j2) {
    const std::pair<int, int> key{two_j1, two_j2};
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(key, build(qp_, two_j1, two_j2)).first;
    return it->second;
  }

  const Mat& coupling(int two_j1, int two_j2, int two_j) {
    const auto& dec = decomposition(two_j1, two_j2);
    auto it = dec.find(two_j);
    if (it == dec.end())
      throw DomainError("QcgCache: spin outside the coupling range");
    return it->second;
  }

  static std::map<int, Mat> build(const QParam<Scalar>& qp, int two_j1,
                                  int two_j2) {
    if (two_j1 < 0 || two_j2 < 0)
      throw DomainError("QcgCache: negative spin");
    const int d1 = two_j1 + 1, d2 = two_j2 + 1, D = d1 * d2;

    const Mat E1 = uq_raise(two_j1, qp), E2 = uq_raise(two_j2, qp);
    const auto k1 = uq_kdiag(two_j1, qp, 1);
    const auto k2inv = uq_kdiag(two_j2, qp, -1);

    Mat dE = Mat::Zero(D, D), dF = Mat::Zero(D, D);
    for (int i = 0; i < d1; ++i)
      for (int k = 0; k < d2; ++k) {
        const int r = i * d2 + k;
        if (i >= 1)  // E (x) K^{-1}
          dE((i - 1) * d2 + k, r) += E1(i - 1, i) * k2inv[k];
        if (k >= 1)  // K (x) E
          dE(i * d2 + (k - 1), r) += k1[i] * E2(k - 1, k);
        if (i + 1 < d1)  // F (x) K^{-1}, F = E^T
          dF((i + 1) * d2 + k, r) += E1(i, i + 1) * k2inv[k];
        if (k + 1 < d2)  // K (x) F
          dF(i * d2 + (k + 1), r) += k1[i] * E2(k, k + 1);
      }

    auto weight_slots = [&](int two_m) {
      std::vector<int> slots;
      for (int i = 0; i < d1; ++i)
        for (int k = 0; k < d2; ++k)
          if ((two_j1 - 2 * i) + (two_j2 - 2 * k) == two_m)
            slots.push_back(i * d2 + k);
      return slots;
    };

    std::map<int, Mat> out;
    const Scalar dE_scale = std::max(Scalar(1), dE.cwiseAbs().maxCoeff());
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    for (int two_j = two_j1 + two_j2; two_j >= std::abs(two_j1 - two_j2);
         two_j -= 2) {
      const auto slots = weight_slots(two_j);
      const int w = int(slots.size());
      Vec top(w);
      if (two_j == two_j1 + two_j2) {
        if (w != 1)
          throw PrecisionError("QcgCache: malformed top weight space");
        top[0] = Scalar(1);
      } else {
        // The weight-j slice of every higher-spin block is an orthonormal
        // family; the new top vector spans its orthocomplement, which is
        // exactly the kernel of Delta(E) on this weight space.
        Mat V(w, w - 1);
        int c = 0;
        for (const auto& [two_jp, Cp] : out) {
          const int n = (two_jp - two_j) / 2;
          for (int r = 0; r < w; ++r) V(r, c) = Cp(slots[std::size_t(r)], n);
          ++c;
        }
        if (c != w - 1)
          throw PrecisionError("QcgCache: weight space miscount");
        Eigen::HouseholderQR<Mat> qr(V);
        top = Mat(qr.householderQ()).col(w - 1);
      }
      int first = -1;
      for (int c = 0; c < w; ++c)
        if (std::abs(top[c]) > Scalar(1e-6)) {
          first = c;
          break;
        }
      if (first < 0)
        throw PrecisionError("QcgCache: top vector has no leading coordinate");
      if (top[first] < Scalar(0)) top = -top;

      const int dj = two_j + 1;
      Mat C = Mat::Zero(D, dj);
      for (int c = 0; c < w; ++c) C(slots[std::size_t(c)], 0) = top[c];
      if ((dE * C.col(0)).template lpNorm<Eigen::Infinity>() >
          Scalar(1e-10) * dE_scale)
        throw PrecisionError("QcgCache: top vector fails the kernel residual");
      for (int n = 1; n < dj; ++n) {
        // |j, m-1> = Delta(F)|j, m> / sqrt([j+m][j-m+1]), m = j - (n-1)
        const Scalar norm =
            std::sqrt(q_int(two_j - n + 1, qp) * q_int(n, qp));
        C.col(n) = dF * C.col(n - 1) / norm;
      }
      out.emplace(two_j, std::move(C));
    }

    // Assembled blocks must form a unitary change of basis.
    Mat U(D, D);
    int col = 0;
    for (const auto& [two_j, C] : out) {
      U.middleCols(col, C.cols()) = C;
      col += int(C.cols());
    }
    if (col != D) throw PrecisionError("QcgCache: dimension count mismatch");
    const Scalar unit_dev =
        (U.transpose() * U - Mat::Identity(D, D)).cwiseAbs().maxCoeff();
    if (unit_dev > Scalar(tol::cg_unitarity))
      throw PrecisionError("QcgCache: coupling matrix is not unitary");
    return out;
  }

 private:
  QParam<Scalar> qp_;
  std::map<std::pair<int, int>, std::map<int, Mat>> cache_;
};

}  // namespace qea
