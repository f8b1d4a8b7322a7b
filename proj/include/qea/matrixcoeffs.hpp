#pragma once

#include <complex>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qea/errors.hpp"
#include "qea/genpoly.hpp"
#include "qea/haar.hpp"
#include "qea/qarith.hpp"

// Irreducible unitary corepresentation matrices u^j of O(SU_q(2)), built
// recursively: u^0 = (1), u^{1/2} is the defining matrix, and u^j is cut out
// of w = u^{j-1/2} (x) u^{1/2} as the orthocomplement of the embedded copy of
// u^{j-1}.  The embedding T in Mor(u^{j-1}, w) is recovered as the nullspace
// of the intertwiner equations over scalar coefficients (1-dimensional by
// Schur's lemma), so no Clebsch-Gordan input enters the construction.  Basis
// vectors of the u^j block are extracted per torus weight (weight spaces of w
// meet the block in lines) with the first product-basis coordinate of each
// vector fixed positive.  Under this convention u^j_{00} = alpha^{2j}
// exactly.
//
// Entry indices are 0-based; row n of u^j carries left weight 2j - 2n and
// column m carries right weight 2j - 2m.

namespace qea {

template <class Scalar = double>
struct Corep {
  int two_j = 0;
  int d = 1;
  std::vector<GenPoly<Scalar>> e;  // row-major d x d

  const GenPoly<Scalar>& operator()(int n, int m) const {
    return e[std::size_t(n * d + m)];
  }
  GenPoly<Scalar>& operator()(int n, int m) {
    return e[std::size_t(n * d + m)];
  }
};

template <class Scalar = double>
class CorepCache {
 public:
  using C = std::complex<Scalar>;
  using Poly = GenPoly<Scalar>;
  using CMat = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;
  using CVec = Eigen::Matrix<C, Eigen::Dynamic, 1>;

  explicit CorepCache(const QParam<Scalar>& qp) : qp_(qp), haar_(qp) {}

  const QParam<Scalar>& qparam() const { return qp_; }
  const HaarState<Scalar>& haar() const { return haar_; }
  IrrepConstants<Scalar> constants(int two_j) const {
    return IrrepConstants<Scalar>(two_j, qp_);
  }

  const Corep<Scalar>& corep(int two_j) {
    if (two_j < 0) throw DomainError("CorepCache: negative spin");
    auto it = coreps_.find(two_j);
    if (it != coreps_.end()) return it->second;
    Corep<Scalar> u = build(two_j);
    return coreps_.emplace(two_j, std::move(u)).first->second;
  }

  // Product corepresentation (a (x) b)_{(i,k),(i',k')} = a_{ii'} b_{kk'} with
  // the pair index (i, k) flattened as i * b.d + k.
  static Corep<Scalar> boxtimes(const Corep<Scalar>& a, const Corep<Scalar>& b,
                                Scalar q) {
    Corep<Scalar> w;
    w.two_j = -1;  // reducible; field unused
    w.d = a.d * b.d;
    w.e.resize(std::size_t(w.d) * std::size_t(w.d));
    for (int i = 0; i < a.d; ++i)
      for (int k = 0; k < b.d; ++k)
        for (int ip = 0; ip < a.d; ++ip)
          for (int kp = 0; kp < b.d; ++kp)
            w(i * b.d + k, ip * b.d + kp) = multiply(a(i, ip), b(k, kp), q);
    return w;
  }

  // Element a with rho^j_{ij} = h(. a), normalized against the Haar-Gram
  // diagonal of the spin block; every PBW term of the result shares one torus
  // bi-weight (checked), which downstream contractions rely on for exact
  // pruning.
  const Poly& rho_element(int two_j, int i, int j) {
    const auto& block = rho_block(two_j);
    return block[std::size_t(i * (two_j + 1) + j)];
  }

  // Expansion matrix K of the conjugate entries over the spin block:
  // (u^j_{ji})^* = sum_{mn} K((m,n),(j,i)) u^j_{mn}, pair (a, b) flattened as
  // a * d + b.  Recovered by coefficient matching in the PBW basis; the
  // residual certifies that conjugates stay inside the block.
  const CMat& conj_expansion(int two_j) {
    auto it = conj_.find(two_j);
    if (it != conj_.end()) return it->second;
    return conj_.emplace(two_j, build_conj(two_j)).first->second;
  }

 private:
  Corep<Scalar> build(int two_j) {
    const Scalar q = qp_.q;
    if (two_j == 0) {
      Corep<Scalar> u;
      u.two_j = 0;
      u.d = 1;
      u.e = {Poly::unit()};
      return u;
    }
    if (two_j == 1) {
      Corep<Scalar> u;
      u.two_j = 1;
      u.d = 2;
      u.e = {Poly::generator(Gen::Alpha),
             Poly::generator(Gen::BetaStar) * C(-q),
             Poly::generator(Gen::Beta), Poly::generator(Gen::AlphaStar)};
      return u;
    }

    const Corep<Scalar>& a = corep(two_j - 1);
    const Corep<Scalar>& b = corep(1);
    const Corep<Scalar>& c = corep(two_j - 2);
    Corep<Scalar> w = boxtimes(a, b, q);
    const int D = w.d, dc = c.d, dj = two_j + 1;

    Scalar wscale(0);
    for (const auto& p : w.e) wscale = std::max(wscale, p.linf());

    // T in Mor(c, w): for all r, s
    //   sum_{r'} w_{r r'} T_{r' s} - sum_{s'} T_{r s'} c_{s' s} = 0,
    // one scalar equation per PBW monomial of each polynomial identity.
    const int nunk = D * dc;
    std::vector<std::map<int, C>> rows;
    for (int r = 0; r < D; ++r)
      for (int s = 0; s < dc; ++s) {
        std::map<std::uint64_t, std::map<int, C>> eq;
        for (int rp = 0; rp < D; ++rp)
          for (const auto& [key, cf] : w(r, rp).terms())
            eq[key][rp * dc + s] += cf;
        for (int sp = 0; sp < dc; ++sp)
          for (const auto& [key, cf] : c(sp, s).terms())
            eq[key][r * dc + sp] -= cf;
        for (auto& [key, row] : eq) {
          Scalar mx(0);
          for (const auto& [col, cf] : row) mx = std::max(mx, std::abs(cf));
          // Rows whose every coefficient is cancellation residue carry no
          // constraint; equilibrating them would promote noise to O(1).
          if (mx <= Scalar(1e-12) * std::max(Scalar(1), wscale)) continue;
          for (auto& [col, cf] : row) cf /= mx;
          rows.push_back(std::move(row));
        }
      }
    CMat A = CMat::Zero(int(rows.size()), nunk);
    for (int r = 0; r < int(rows.size()); ++r)
      for (const auto& [col, cf] : rows[std::size_t(r)]) A(r, col) = cf;
    Eigen::BDCSVD<CMat> svd(A, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv[nunk - 1] > Scalar(1e-8) * sv[0])
      throw PrecisionError("CorepCache: intertwiner nullspace not found");
    CVec tvec = svd.matrixV().col(nunk - 1);

    CMat T(D, dc);
    for (int r = 0; r < D; ++r)
      for (int s = 0; s < dc; ++s) T(r, s) = tvec[r * dc + s];

    // residual of the intertwiner equations at the found T
    Scalar resid(0);
    for (int r = 0; r < D; ++r)
      for (int s = 0; s < dc; ++s) {
        Poly lhs;
        for (int rp = 0; rp < D; ++rp) lhs += w(r, rp) * T(rp, s);
        for (int sp = 0; sp < dc; ++sp) lhs -= c(sp, s) * T(r, sp);
        resid = std::max(resid, lhs.linf());
      }
    if (resid > Scalar(1e-8) * std::max(Scalar(1), wscale))
      throw PrecisionError("CorepCache: intertwiner residual too large");

    // Schur: T^dagger T is scalar; normalize T to an isometry.
    CMat TtT = T.adjoint() * T;
    const Scalar cscale = TtT.real().trace() / Scalar(dc);
    if ((TtT - C(cscale) * CMat::Identity(dc, dc)).cwiseAbs().maxCoeff() >
        Scalar(1e-8) * cscale)
      throw PrecisionError("CorepCache: embedding is not a scaled isometry");
    T /= std::sqrt(cscale);

    CMat P = CMat::Identity(D, D) - T * T.adjoint();

    // one basis vector of the u^j block per weight 2j - 2n
    CMat S = CMat::Zero(D, dj);
    for (int n = 0; n < dj; ++n) {
      std::vector<int> slots;
      for (int i = 0; i < a.d; ++i)
        for (int k = 0; k < 2; ++k)
          if (i + k == n) slots.push_back(i * 2 + k);
      CVec v;
      if (slots.size() == 1) {
        if (std::abs(P(slots[0], slots[0]) - C(1)) > Scalar(1e-8))
          throw PrecisionError("CorepCache: extremal weight slot not fixed");
        v = CVec::Ones(1);
      } else if (slots.size() == 2) {
        Eigen::Matrix<C, 2, 2> block;
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y)
            block(x, y) = P(slots[std::size_t(x)], slots[std::size_t(y)]);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<C, 2, 2>> es(block);
        if (std::abs(es.eigenvalues()[1] - Scalar(1)) > Scalar(1e-8) ||
            std::abs(es.eigenvalues()[0]) > Scalar(1e-8))
          throw PrecisionError("CorepCache: weight block is not a line");
        v = es.eigenvectors().col(1);
      } else {
        throw PrecisionError("CorepCache: malformed weight space");
      }
      int first = -1;
      for (int x = 0; x < int(v.size()); ++x)
        if (std::abs(v[x]) > Scalar(1e-6)) {
          first = x;
          break;
        }
      if (first < 0)
        throw PrecisionError("CorepCache: weight vector has no leading entry");
      v *= std::conj(v[first]) / std::abs(v[first]);
      for (int x = 0; x < int(slots.size()); ++x)
        S(slots[std::size_t(x)], n) = v[x];
    }

    Corep<Scalar> u;
    u.two_j = two_j;
    u.d = dj;
    u.e.resize(std::size_t(dj) * std::size_t(dj));
    for (int n = 0; n < dj; ++n)
      for (int m = 0; m < dj; ++m) {
        Poly acc;
        for (int r = 0; r < D; ++r) {
          if (std::abs(S(r, n)) == Scalar(0)) continue;
          for (int rp = 0; rp < D; ++rp) {
            if (std::abs(S(rp, m)) == Scalar(0)) continue;
            acc += w(r, rp) * (std::conj(S(r, n)) * S(rp, m));
          }
        }
        u(n, m) = std::move(acc);
      }
    return u;
  }

  const std::vector<Poly>& rho_block(int two_j) {
    auto it = rho_.find(two_j);
    if (it != rho_.end()) return it->second;
    const Corep<Scalar>& u = corep(two_j);
    const int d = u.d;
    std::vector<Poly> block(std::size_t(d) * std::size_t(d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Poly conj_ij = u(i, j).star(qp_.q);
        const C gram = haar_(multiply(u(i, j), conj_ij, qp_.q));
        if (std::abs(gram) < Scalar(1e-14))
          throw PrecisionError("CorepCache: vanishing Haar-Gram diagonal");
        Poly a = conj_ij * (C(1) / gram);
        // exact-pruning contract: single bi-weight support
        int wl = 0, wr = 0;
        bool seen = false;
        for (const auto& [key, cf] : a.terms()) {
          if (!seen) {
            wl = gen_key_wl(key);
            wr = gen_key_wr(key);
            seen = true;
          } else if (gen_key_wl(key) != wl || gen_key_wr(key) != wr) {
            throw PrecisionError("CorepCache: rho element mixes bi-weights");
          }
        }
        block[std::size_t(i * d + j)] = std::move(a);
      }
    return rho_.emplace(two_j, std::move(block)).first->second;
  }

  CMat build_conj(int two_j) {
    const Corep<Scalar>& u = corep(two_j);
    const int d = u.d;
    // stack PBW coefficients of the block entries
    std::map<std::uint64_t, int> monos;
    for (const auto& p : u.e)
      for (const auto& [key, cf] : p.terms()) monos.emplace(key, 0);
    {
      int r = 0;
      for (auto& [key, idx] : monos) idx = r++;
    }
    CMat B = CMat::Zero(int(monos.size()), d * d);
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n)
        for (const auto& [key, cf] : u(m, n).terms())
          B(monos.at(key), m * d + n) = cf;
    Eigen::ColPivHouseholderQR<CMat> qr(B);
    CMat K(d * d, d * d);
    Scalar scale(0);
    for (const auto& p : u.e) scale = std::max(scale, p.linf());
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) {
        Poly target = u(j, i).star(qp_.q);
        CVec t = CVec::Zero(int(monos.size()));
        for (const auto& [key, cf] : target.terms()) {
          auto it = monos.find(key);
          if (it == monos.end())
            throw PrecisionError(
                "CorepCache: conjugate leaves the spin block");
          t[it->second] = cf;
        }
        CVec k = qr.solve(t);
        if ((B * k - t).template lpNorm<Eigen::Infinity>() >
            Scalar(1e-9) * std::max(Scalar(1), scale))
          throw PrecisionError("CorepCache: conjugate expansion residual");
        K.col(j * d + i) = k;
      }
    return K;
  }

  QParam<Scalar> qp_;
  HaarState<Scalar> haar_;
  std::map<int, Corep<Scalar>> coreps_;
  std::map<int, std::vector<Poly>> rho_;
  std::map<int, CMat> conj_;
};

}  // namespace qea
