#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qea/errors.hpp"

// q-arithmetic for SU_q(2): deformation parameter, symmetric q-integers,
// per-irrep constants (dimension, quantum dimension M, the diagonal F-matrix,
// the slot bound N), and the deformation-parameter point set T_q used by the
// Podles sphere sweep.
//
// Spins are handled as integers two_j = 2j throughout to keep half-integers
// exact.

namespace qea {

// Numerical tolerances pinned project-wide.  Values chosen for double
// precision: plain algebraic identities evaluate to ~1e-12 noise, chains of
// Gram-Schmidt / eigen-decompositions to ~1e-7.
namespace tol {
inline constexpr double trace = 1e-12;        // exact closed-form identities
inline constexpr double algebraic = 1e-9;     // polynomial identity residuals
inline constexpr double cg_unitarity = 1e-10; // CG matrix unitarity
inline constexpr double haar_check = 1e-10;   // closed form vs invariance solve
inline constexpr double gram = 1e-6;          // Gram-Schmidt derived quantities
inline constexpr double rank = 1e-8;          // Gram rank cut (relative)
inline constexpr double certify = 1e-8;       // structure constant residuals
inline constexpr double gauge = 1e-9;         // gauge covariance residuals
inline constexpr double scalar_rec = 1e-8;    // scalar recognition (relative)
inline constexpr double t_dispatch = 1e-12;   // |t - c(n)| regime dispatch
inline constexpr double bound_slack = 0.10;   // file-load norm-bound slack
inline constexpr double unitary = 1e-10;      // gauge block unitarity
inline constexpr double sparse_drop = 1e-14;  // structure constant storage cut
}  // namespace tol

template <class Scalar = double>
struct QParam {
  Scalar q;

  explicit QParam(Scalar q_) : q(q_) {
    const Scalar a = q < Scalar(0) ? -q : q;
    if (!(a > Scalar(0)) || !(a < Scalar(1)))
      throw DomainError("QParam: need 0 < |q| < 1");
  }
};

// Symmetric q-integer [n]_q = (q^{-n} - q^n)/(q^{-1} - q).  [0] = 0, [1] = 1.
template <class Scalar>
Scalar q_int(int n, const QParam<Scalar>& qp) {
  const Scalar q = qp.q;
  return (std::pow(q, Scalar(-n)) - std::pow(q, Scalar(n))) /
         (Scalar(1) / q - q);
}

inline int spin_dim(int two_j) { return two_j + 1; }

// Constants attached to the spin-j irreducible: d = 2j+1, quantum dimension
// M = [2j+1]_q, F = diag(q^{2j}, q^{2j-2}, ..., q^{-2j}) (so Tr F = Tr F^{-1}
// = M), slot bound N = floor(M^2/d), and the norm bound sqrt(||F|| M).
template <class Scalar = double>
struct IrrepConstants {
  int two_j = 0;
  int d = 1;
  Scalar M = Scalar(1);
  Eigen::Vector<Scalar, Eigen::Dynamic> F;  // diagonal entries
  long N = 1;
  Scalar norm_bound = Scalar(1);

  IrrepConstants() : F(Eigen::Vector<Scalar, Eigen::Dynamic>::Ones(1)) {}

  IrrepConstants(int two_j_, const QParam<Scalar>& qp) : two_j(two_j_) {
    if (two_j < 0) throw DomainError("IrrepConstants: two_j < 0");
    d = spin_dim(two_j);
    M = q_int(two_j + 1, qp);
    F.resize(d);
    for (int n = 0; n < d; ++n)
      F[n] = std::pow(qp.q, Scalar(two_j - 2 * n));
    N = static_cast<long>(std::floor(double(M) * double(M) / double(d)));
    const Scalar f_norm = std::pow(qp.q, Scalar(-two_j));
    norm_bound = std::sqrt(f_norm * M);
  }
};

// Exceptional deformation points c(n) = -q^{2n}/(1+q^{2n})^2, n >= 1.
template <class Scalar>
Scalar podles_c(int n, const QParam<Scalar>& qp) {
  if (n < 1) throw DomainError("podles_c: n must be >= 1");
  const Scalar p = std::pow(qp.q, Scalar(2 * n));
  return -p / ((Scalar(1) + p) * (Scalar(1) + p));
}

// T_q sample: {c(1), ..., c(n_max)} followed by a uniform grid on [0,1]
// (inclusive endpoints when grid_count >= 2).  The returned list is ascending.
template <class Scalar>
std::vector<Scalar> tq_points(const QParam<Scalar>& qp, int n_max,
                              int grid_count) {
  if (n_max < 0 || grid_count < 0) throw DomainError("tq_points: negative size");
  std::vector<Scalar> out;
  for (int n = 1; n <= n_max; ++n) out.push_back(podles_c(n, qp));  // ascending
  if (grid_count == 1) {
    out.push_back(Scalar(0));
  } else if (grid_count > 1) {
    for (int i = 0; i < grid_count; ++i)
      out.push_back(Scalar(i) / Scalar(grid_count - 1));
  }
  return out;
}

}  // namespace qea
