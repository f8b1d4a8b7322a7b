// Uniform presentation of an ergodic action for the structure-constant
// extractor: a spin window, an orthonormal standard basis e_{gamma,k,i} with
//   sigma(e_{gamma,k,i}) = sum_j e_{gamma,k,j} (x) u^gamma_{ji},
//   omega(e_{gamma,s,j}^* e_{gamma',k,i}) = delta delta delta,
//   e_{0,1,1} = 1,
// the invariant state omega, and the algebra operations.  Three realizations
// share the same member names so the extractor is generic:
//   PodlesActionModel  - the sphere at polynomial level, any t in T_q
//   MatrixActionModel  - the matrix fibre at t = c(n), acting by Ad of the
//                        spin (n-1)/2 corepresentation
//   CqgActionModel     - the function algebra itself under comultiplication
#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qea/errors.hpp"
#include "qea/genpoly.hpp"
#include "qea/gramutil.hpp"
#include "qea/matrixcoeffs.hpp"
#include "qea/podles.hpp"

namespace qea {

template <class Scalar = double>
class PodlesActionModel {
 public:
  using Element = PodlesPoly<Scalar>;
  using C = std::complex<Scalar>;

  PodlesActionModel(const PodlesParam<Scalar>& par, CorepCache<Scalar>& cqg,
                    int two_j_max, int deg = -1)
      : par_(par), cqg_(cqg), eng_(par, cqg) {
    basis_ = eng_.standard_basis(two_j_max, deg);
  }

  std::string kind() const { return "podles"; }
  const QParam<Scalar>& qparam() const { return par_.qp; }
  const PodlesParam<Scalar>& param() const { return par_; }
  int two_j_max() const { return basis_.two_j_max; }
  IrrepConstants<Scalar> constants(int two_j) const {
    return cqg_.constants(two_j);
  }
  int mult(int two_j) const {
    auto it = basis_.mult.find(two_j);
    return it == basis_.mult.end() ? 0 : it->second;
  }
  const Element& e(int two_j, int k, int i) const {
    return basis_.rows.at(two_j)[std::size_t(k)][std::size_t(i)];
  }
  Element unit() const { return Element::unit(); }
  Element mul(const Element& x, const Element& y) const {
    return multiply(x, y, par_);
  }
  Element star(const Element& x) const { return x.star(par_.qp.q); }
  C omega(const Element& x) { return eng_.invariant_state(x); }

  PodlesEngine<Scalar>& engine() { return eng_; }

 private:
  PodlesParam<Scalar> par_;
  CorepCache<Scalar>& cqg_;
  PodlesEngine<Scalar> eng_;
  SpectralBasis<Scalar> basis_;
};

template <class Scalar = double>
class MatrixActionModel {
 public:
  using Element =
      Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
  using C = std::complex<Scalar>;

  MatrixActionModel(int n, CorepCache<Scalar>& cqg, int two_j_max)
      : cqg_(cqg), mm_(matrix_model(n, cqg)), two_j_max_(two_j_max) {
    build();
  }

  std::string kind() const { return "matrix"; }
  const QParam<Scalar>& qparam() const { return cqg_.qparam(); }
  const PodlesParam<Scalar>& param() const { return mm_.par; }
  const PodlesMatrixModel<Scalar>& model() const { return mm_; }
  int two_j_max() const { return two_j_max_; }
  IrrepConstants<Scalar> constants(int two_j) const {
    return cqg_.constants(two_j);
  }
  int mult(int two_j) const {
    auto it = mult_.find(two_j);
    return it == mult_.end() ? 0 : it->second;
  }
  const Element& e(int two_j, int k, int i) const {
    return rows_.at(two_j)[std::size_t(k)][std::size_t(i)];
  }
  Element unit() const { return Element::Identity(mm_.n, mm_.n); }
  Element mul(const Element& x, const Element& y) const { return x * y; }
  Element star(const Element& x) const { return x.adjoint(); }
  C omega(const Element& x) const { return mm_.omega(x); }

 private:
  // (id (x) rho^gamma_{ij}) Ad_u, evaluated entrywise through the Haar state.
  Element project(int two_j, int i, int j, const Element& x) const {
    const int n = mm_.n;
    if (two_j == 0) {
      Element out = Element::Identity(n, n);
      out *= (i == 0 && j == 0) ? mm_.omega(x) : C(0);
      return out;
    }
    const GenPoly<Scalar> rho = cqg_.rho_element(two_j, i, j);
    const auto sx = mm_.sigma(x);
    const auto& h = cqg_.haar();
    Element out(n, n);
    for (int s = 0; s < n; ++s)
      for (int t = 0; t < n; ++t)
        out(s, t) = h(multiply(sx(s, t), rho, cqg_.qparam().q));
    return out;
  }

  void build() {
    using MatX =
        Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
    using VecX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
    const int n = mm_.n;
    const int nm = n * n;
    auto vec = [n](const Element& x) {
      VecX v(n * n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v[i * n + j] = x(i, j);
      return v;
    };
    auto unvec = [n](const VecX& v) {
      Element x(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = C(v[i * n + j]);
      return x;
    };

    MatX K(nm, nm);
    std::vector<Element> units;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Element u = Element::Zero(n, n);
        u(i, j) = C(1);
        units.push_back(u);
      }
    for (int p = 0; p < nm; ++p)
      for (int r = 0; r < nm; ++r)
        K(p, r) =
            mm_.omega(units[std::size_t(p)].adjoint() * units[std::size_t(r)]);
    K = ((K + K.adjoint()) / Scalar(2)).eval();
    const Scalar kref = K.diagonal().real().maxCoeff();

    for (int two_j = 0; two_j <= two_j_max_; ++two_j) {
      MatX cand(nm, nm);
      for (int p = 0; p < nm; ++p)
        cand.col(p) = vec(project(two_j, 0, 0, units[std::size_t(p)]));
      const int r =
          gram_rank(cand.adjoint() * K * cand, kref, "matrix spectral basis");
      mult_[two_j] = r;
      if (r == 0) {
        rows_[two_j] = {};
        continue;
      }
      std::vector<Element> heads;
      for (const auto& v :
           metric_orthonormalize(cand, K, r, kref, "matrix spectral basis"))
        heads.push_back(unvec(v));
      if (two_j == 0) {
        if (r != 1)
          throw PrecisionError(
              "matrix spectral basis: trivial spin multiplicity != 1");
        if ((heads[0] - unit()).template lpNorm<Eigen::Infinity>() >
            Scalar(1e-8))
          throw PrecisionError(
              "matrix spectral basis: trivial head is not the unit");
        heads[0] = unit();
      }
      const int d = two_j + 1;
      std::vector<std::vector<Element>> rows;
      for (int k = 0; k < r; ++k) {
        std::vector<Element> row(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
          row[std::size_t(i)] = i == 0 ? heads[std::size_t(k)]
                                       : project(two_j, i, 0, heads[std::size_t(k)]);
        rows.push_back(std::move(row));
      }
      certify_rows(two_j, rows);
      rows_[two_j] = std::move(rows);
    }
  }

  // sigma(e_{ki}) must equal sum_j e_{kj} (x) u_{ji}.
  void certify_rows(int two_j, const std::vector<std::vector<Element>>& rows) const {
    const auto& co = cqg_.corep(two_j);
    const int d = co.d;
    const int n = mm_.n;
    for (const auto& row : rows)
      for (int i = 0; i < d; ++i) {
        const auto lhs = mm_.sigma(row[std::size_t(i)]);
        Scalar dev(0);
        for (int s = 0; s < n; ++s)
          for (int t = 0; t < n; ++t) {
            GenPoly<Scalar> rhs;
            for (int j = 0; j < d; ++j) {
              auto term = co(j, i);
              term *= C(row[std::size_t(j)](s, t));
              rhs += term;
            }
            dev = std::max(dev, max_coeff_diff(lhs(s, t), rhs));
          }
        if (dev > Scalar(tol::certify))
          throw PrecisionError("matrix spectral basis: row coaction residual");
      }
  }

  CorepCache<Scalar>& cqg_;
  PodlesMatrixModel<Scalar> mm_;
  int two_j_max_ = 0;
  std::map<int, int> mult_;
  std::map<int, std::vector<std::vector<Element>>> rows_;
};

template <class Scalar = double>
class CqgActionModel {
 public:
  using Element = GenPoly<Scalar>;
  using C = std::complex<Scalar>;

  CqgActionModel(CorepCache<Scalar>& cqg, int two_j_max)
      : cqg_(cqg), two_j_max_(two_j_max) {
    for (int two_j = 0; two_j <= two_j_max_; ++two_j) {
      const auto& co = cqg_.corep(two_j);
      const auto cst = cqg_.constants(two_j);
      std::vector<std::vector<Element>> rows;
      for (int k = 0; k < co.d; ++k) {
        const Scalar scale = std::sqrt(cst.M / cst.F[k]);
        std::vector<Element> row;
        for (int i = 0; i < co.d; ++i) {
          Element x = co(k, i);
          x *= C(scale);
          row.push_back(std::move(x));
        }
        rows.push_back(std::move(row));
      }
      rows_[two_j] = std::move(rows);
    }
  }

  std::string kind() const { return "cqg"; }
  const QParam<Scalar>& qparam() const { return cqg_.qparam(); }
  int two_j_max() const { return two_j_max_; }
  IrrepConstants<Scalar> constants(int two_j) const {
    return cqg_.constants(two_j);
  }
  // Every spin appears in the regular action with multiplicity equal to its
  // dimension.
  int mult(int two_j) const {
    return two_j <= two_j_max_ ? spin_dim(two_j) : 0;
  }
  const Element& e(int two_j, int k, int i) const {
    return rows_.at(two_j)[std::size_t(k)][std::size_t(i)];
  }
  Element unit() const { return Element::unit(); }
  Element mul(const Element& x, const Element& y) const {
    return multiply(x, y, cqg_.qparam().q);
  }
  Element star(const Element& x) const { return x.star(cqg_.qparam().q); }
  C omega(const Element& x) const { return cqg_.haar()(x); }

 private:
  CorepCache<Scalar>& cqg_;
  int two_j_max_ = 0;
  std::map<int, std::vector<std::vector<Element>>> rows_;
};

}  // namespace qea
