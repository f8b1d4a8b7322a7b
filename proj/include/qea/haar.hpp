#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "qea/genpoly.hpp"
#include "qea/qarith.hpp"

// Haar state h on O(SU_q(2)).  Closed form on the PBW basis:
//   h(alpha^k b^l b*^m) = 0 unless k = 0 and l = m,
//   h((b* b)^l) = (1 - q^2) / (1 - q^{2l+2}),
// and zero on the whole starred branch.  The closed form is not taken on
// trust: at construction it is checked against the bi-invariance linear
// system (h (x) id)Phi = (id (x) h)Phi = h(.)1 solved on a degree window,
// and construction fails if the two paths disagree.

namespace qea {

template <class Scalar = double>
std::vector<std::uint64_t> pbw_monomials_up_to(int degree) {
  std::vector<std::uint64_t> keys;
  for (int star = 0; star <= 1; ++star)
    for (int k = (star ? 1 : 0); k <= degree; ++k)
      for (int l = 0; k + l <= degree; ++l)
        for (int m = 0; k + l + m <= degree; ++m)
          keys.push_back(GenMono{star != 0, k, l, m}.key());
  return keys;
}

template <class Scalar = double>
class HaarState {
 public:
  using C = std::complex<Scalar>;

  explicit HaarState(const QParam<Scalar>& qp, int validate_degree = 6,
                     Scalar check_tol = Scalar(tol::haar_check))
      : qp_(qp) {
    if (validate_degree >= 0) {
      auto solved = solve_invariance(qp_, validate_degree);
      Scalar dev(0);
      for (const auto& [key, v] : solved)
        dev = std::max(dev, std::abs(v - mono(GenMono::from_key(key))));
      validation_residual_ = dev;
      if (dev > check_tol)
        throw PrecisionError(
            "HaarState: closed form disagrees with invariance solve");
    }
  }

  C mono(const GenMono& g) const {
    if (g.star || g.k != 0 || g.l != g.m) return C(0);
    const Scalar q2 = qp_.q * qp_.q;
    return C((Scalar(1) - q2) / (Scalar(1) - std::pow(q2, Scalar(g.l + 1))));
  }

  C operator()(const GenMono& g) const { return mono(g); }

  C operator()(const GenPoly<Scalar>& x) const {
    C v(0);
    for (const auto& [key, c] : x.terms()) v += c * mono(GenMono::from_key(key));
    return v;
  }

  Scalar validation_residual() const { return validation_residual_; }
  const QParam<Scalar>& qparam() const { return qp_; }

  // Independent path: solve the bi-invariance system on the monomials of
  // degree <= `degree` and return the solved values.  The system splits into
  // independent subsystems by torus bi-weight of the unknowns (each equation
  // only references values of one bi-weight, since the comultiplication and
  // the normal-form relations are weight-homogeneous).  Every block is solved
  // by rank-revealing least squares on max-equilibrated rows; the block
  // containing the unit carries the normalization h(1) = 1, all other blocks
  // are homogeneous and must have full column rank for the solution to be
  // certified unique.  Exposed so tests can rerun it on other windows.
  static std::map<std::uint64_t, C> solve_invariance(const QParam<Scalar>& qp,
                                                     int degree) {
    using Mat = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<C, Eigen::Dynamic, 1>;
    const Scalar q = qp.q;
    const auto keys = pbw_monomials_up_to<Scalar>(degree);

    // Phi on all window monomials, built incrementally along the PBW word.
    std::map<std::uint64_t, GenTensor<Scalar>> phi;
    phi[GenMono::kUnitKey] = GenTensor<Scalar>::unit();
    auto phi_of = [&](std::uint64_t key, auto&& self) -> const GenTensor<Scalar>& {
      auto it = phi.find(key);
      if (it != phi.end()) return it->second;
      GenMono g = GenMono::from_key(key);
      GenMono parent = g;
      Gen last;
      if (g.m > 0) {
        --parent.m;
        last = Gen::BetaStar;
      } else if (g.l > 0) {
        --parent.l;
        last = Gen::Beta;
      } else {
        --parent.k;
        if (parent.k == 0) parent.star = false;
        last = g.star ? Gen::AlphaStar : Gen::Alpha;
      }
      GenTensor<Scalar> t =
          self(parent.key(), self).mul(comultiply_gen<Scalar>(last, q), q);
      return phi.emplace(key, std::move(t)).first->second;
    };

    using RowCols = std::vector<std::pair<std::uint64_t, C>>;
    std::map<std::pair<int, int>, std::vector<RowCols>> blocks;
    auto push_row = [&](RowCols row) {
      Scalar mx(0);
      for (const auto& [key, c] : row) mx = std::max(mx, std::abs(c));
      if (mx == Scalar(0)) return;
      const std::pair<int, int> bw{gen_key_wl(row.front().first),
                                   gen_key_wr(row.front().first)};
      for (auto& [key, c] : row) {
        if (gen_key_wl(key) != bw.first || gen_key_wr(key) != bw.second)
          throw std::logic_error("solve_invariance: weight grading violated");
        c /= mx;
      }
      blocks[bw].push_back(std::move(row));
    };

    for (const auto& mu_key : keys) {
      const GenTensor<Scalar>& t = phi_of(mu_key, phi_of);
      for (int leg = 0; leg < 2; ++leg) {
        // group by the kept leg; the functional is applied to the other one
        std::map<std::uint64_t, RowCols> groups;
        for (const auto& [key, c] : t.terms()) {
          const std::uint64_t kept = leg == 0 ? key.second : key.first;
          const std::uint64_t applied = leg == 0 ? key.first : key.second;
          groups[kept].emplace_back(applied, c);
        }
        for (auto& [kept, row] : groups) {
          if (kept == GenMono::kUnitKey) row.emplace_back(mu_key, C(-1));
          push_row(std::move(row));
        }
      }
    }

    std::map<std::uint64_t, C> out;
    for (auto& [bw, rows] : blocks) {
      std::map<std::uint64_t, int> bidx;
      for (const auto& row : rows)
        for (const auto& [key, c] : row)
          bidx.emplace(key, int(bidx.size()));
      const bool unit_block = bw.first == 0 && bw.second == 0;
      if (unit_block) bidx.emplace(GenMono::kUnitKey, int(bidx.size()));
      const int ncols = int(bidx.size());
      const int nrows = int(rows.size()) + (unit_block ? 1 : 0);
      Mat A = Mat::Zero(nrows, ncols);
      Vec b = Vec::Zero(nrows);
      for (int r = 0; r < int(rows.size()); ++r)
        for (const auto& [key, c] : rows[std::size_t(r)])
          A(r, bidx.at(key)) += c;
      if (unit_block) {
        A(nrows - 1, bidx.at(GenMono::kUnitKey)) = C(1);
        b[nrows - 1] = C(1);
      }
      Eigen::ColPivHouseholderQR<Mat> qr(A);
      if (qr.rank() < ncols)
        throw PrecisionError(
            "solve_invariance: weight block is rank-deficient");
      Vec x = qr.solve(b);
      for (const auto& [key, i] : bidx) out[key] = x[i];
    }
    for (const auto& key : keys)
      if (!out.count(key))
        throw PrecisionError("solve_invariance: unconstrained monomial");
    return out;
  }

 private:
  QParam<Scalar> qp_;
  Scalar validation_residual_ = Scalar(0);
};

}  // namespace qea
