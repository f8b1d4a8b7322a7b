#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <complex>
#include <map>
#include <vector>

#include "doctest.h"
#include "qea/podles.hpp"
#include "qea/rng.hpp"

using namespace qea;
using Cx = std::complex<double>;
using P = PodlesPoly<double>;
using Param = PodlesParam<double>;

namespace {

P random_poly(Rng& rng, int deg) {
  P x;
  for (int k = 0; k <= deg; ++k)
    for (int l = 0; k + l <= deg; ++l) {
      x.add_term(PodMono{false, k, l}.key(), rng.cgaussian());
      if (l >= 1) x.add_term(PodMono{true, k, l}.key(), rng.cgaussian());
    }
  return x;
}

double rel_diff(const P& x, const P& y) {
  return max_coeff_diff(x, y) / std::max(1.0, std::max(x.linf(), y.linf()));
}

std::string random_word(Rng& rng, int len) {
  static const char* alphabet[3] = {"a", "b", "b*"};
  std::string w;
  for (int i = 0; i < len; ++i)
    w += alphabet[rng.next_u64() % 3];
  return w;
}

}  // namespace

TEST_CASE("parameter dispatch locates T_q") {
  QParam<double> qp(0.5);
  CHECK(Param(qp, 0.3).regime == PodRegime::Continuous);
  CHECK(Param(qp, 0.0).regime == PodRegime::Continuous);
  CHECK(Param(qp, 1.0).regime == PodRegime::Continuous);
  for (int n = 1; n <= 4; ++n) {
    const Param par(qp, podles_c(n, qp));
    CHECK(par.regime == PodRegime::Discrete);
    CHECK(par.n == n);
  }
  const Param snapped(qp, podles_c(3, qp) + 1e-13);
  CHECK(snapped.regime == PodRegime::Discrete);
  CHECK(snapped.t == podles_c(3, qp));
  CHECK_THROWS_AS(Param(qp, -0.5), DomainError);
  CHECK_THROWS_AS(Param(qp, 1.2), DomainError);
}

TEST_CASE("normalization matches the defining relations") {
  QParam<double> qp(0.5);
  const double q = qp.q, q2 = q * q;

  const Param disc(qp, podles_c(2, qp));
  const double t = disc.t;
  CHECK(rel_diff(normalize("ba", disc),
                 normalize("ab", disc) * Cx(q2)) < 1e-14);
  P bsb_expect;
  bsb_expect.add_term(PodMono{}.key(), Cx(t));
  bsb_expect.add_term(PodMono{false, 1, 0}.key(), Cx(1));
  bsb_expect.add_term(PodMono{false, 2, 0}.key(), Cx(-1));
  CHECK(rel_diff(normalize("b*b", disc), bsb_expect) < 1e-14);
  P bbs_expect;
  bbs_expect.add_term(PodMono{}.key(), Cx(t));
  bbs_expect.add_term(PodMono{false, 1, 0}.key(), Cx(q2));
  bbs_expect.add_term(PodMono{false, 2, 0}.key(), Cx(-q2 * q2));
  CHECK(rel_diff(normalize("bb*", disc), bbs_expect) < 1e-14);

  const double tc = 0.3;
  const Param cont(qp, tc);
  P bsb_cont;
  bsb_cont.add_term(PodMono{}.key(), Cx(tc * tc));
  bsb_cont.add_term(PodMono{false, 1, 0}.key(), Cx(1 - tc * tc));
  bsb_cont.add_term(PodMono{false, 2, 0}.key(), Cx(-1));
  CHECK(rel_diff(normalize("b*b", cont), bsb_cont) < 1e-14);
  P bbs_cont;
  bbs_cont.add_term(PodMono{}.key(), Cx(tc * tc));
  bbs_cont.add_term(PodMono{false, 1, 0}.key(), Cx((1 - tc * tc) * q2));
  bbs_cont.add_term(PodMono{false, 2, 0}.key(), Cx(-q2 * q2));
  CHECK(rel_diff(normalize("bb*", cont), bbs_cont) < 1e-14);
}

TEST_CASE("rewriting is confluent on random words") {
  QParam<double> qp(0.4);
  Rng rng(20240815);
  for (const double t : {0.6, podles_c(2, qp)}) {
    const Param par(qp, t);
    for (int rep = 0; rep < 40; ++rep) {
      const int len = 2 + int(rng.next_u64() % 7);
      const std::string w = random_word(rng, len);
      const P whole = normalize(w, par);
      // split at a random token boundary and multiply the halves
      std::vector<std::size_t> cuts;
      for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i] != '*') cuts.push_back(i);
      if (cuts.empty()) continue;
      const std::size_t cut = cuts[rng.next_u64() % cuts.size()];
      const P split = multiply(normalize(w.substr(0, cut), par),
                               normalize(w.substr(cut), par), par);
      CHECK(rel_diff(whole, split) < 1e-10);
    }
  }
}

TEST_CASE("multiplication is associative") {
  QParam<double> qp(0.5);
  const Param par(qp, 0.3);
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const P x = random_poly(rng, 2), y = random_poly(rng, 2),
            z = random_poly(rng, 2);
    CHECK(rel_diff(multiply(multiply(x, y, par), z, par),
                   multiply(x, multiply(y, z, par), par)) < 1e-11);
  }
}

TEST_CASE("star is an involution and antihomomorphism") {
  QParam<double> qp(0.5);
  const double q = qp.q;
  for (const double t : {0.3, podles_c(1, qp)}) {
    const Param par(qp, t);
    Rng rng(11);
    for (int rep = 0; rep < 5; ++rep) {
      const P x = random_poly(rng, 3), y = random_poly(rng, 3);
      CHECK(rel_diff(x.star(q).star(q), x) < 1e-12);
      CHECK(rel_diff(multiply(x, y, par).star(q),
                     multiply(y.star(q), x.star(q), par)) < 1e-11);
    }
    // the relations are *-consistent: (b*b)* = b*b and (bb*)* = bb*
    CHECK(rel_diff(normalize("b*b", par).star(q), normalize("b*b", par)) <
          1e-14);
    CHECK(rel_diff(normalize("bb*", par).star(q), normalize("bb*", par)) <
          1e-14);
  }
}

TEST_CASE("coaction of the generators has the displayed form") {
  QParam<double> qp(0.5);
  const double q = qp.q;
  const Param par(qp, 0.3);
  const double s = par.ct_scalar;

  const auto ta = coact_gen(PodGen::A, par);
  CHECK(ta.legs().size() == 4);
  const std::uint64_t kU = PodMono::kUnitKey;
  const std::uint64_t kA = PodMono{false, 1, 0}.key();
  const std::uint64_t kB = PodMono{false, 0, 1}.key();
  const std::uint64_t kBS = PodMono{true, 0, 1}.key();
  // sigma(a) = a(x)1 + c_t(x)b*b + b*(x)a*b + b(x)b*a
  {
    GenPoly<double> legU, legA, legB, legBS;
    legU.add_term(GenMono{false, 0, 1, 1}.key(), Cx(s));
    legA.add_term(GenMono{}.key(), Cx(1));
    legA.add_term(GenMono{false, 0, 1, 1}.key(), Cx(-(1 + q * q)));
    legBS.add_term(GenMono{true, 1, 1, 0}.key(), Cx(1));
    legB.add_term(GenMono{false, 1, 0, 1}.key(), Cx(1 / q));
    CHECK(max_coeff_diff(ta.legs().at(kU), legU) < 1e-15);
    CHECK(max_coeff_diff(ta.legs().at(kA), legA) < 1e-15);
    CHECK(max_coeff_diff(ta.legs().at(kB), legB) < 1e-15);
    CHECK(max_coeff_diff(ta.legs().at(kBS), legBS) < 1e-15);
  }
  // sigma(b) = -q b*(x)b^2 + c_t(x)ab + b(x)a^2
  {
    const auto tb = coact_gen(PodGen::B, par);
    GenPoly<double> legU, legA, legB, legBS;
    legU.add_term(GenMono{false, 1, 1, 0}.key(), Cx(s));
    legA.add_term(GenMono{false, 1, 1, 0}.key(), Cx(-(1 + q * q)));
    legBS.add_term(GenMono{false, 0, 2, 0}.key(), Cx(-q));
    legB.add_term(GenMono{false, 2, 0, 0}.key(), Cx(1));
    CHECK(max_coeff_diff(tb.legs().at(kU), legU) < 1e-15);
    CHECK(max_coeff_diff(tb.legs().at(kA), legA) < 1e-15);
    CHECK(max_coeff_diff(tb.legs().at(kB), legB) < 1e-15);
    CHECK(max_coeff_diff(tb.legs().at(kBS), legBS) < 1e-15);
  }
  // sigma(b*) = sigma(b)^{* (x) *}
  CHECK(max_coeff_diff(coact_gen(PodGen::BStar, par),
                       coact_gen(PodGen::B, par).star(par)) < 1e-15);
}

TEST_CASE("coaction is a unital *-homomorphism with counit identity") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  for (const double t : {0.3, podles_c(2, qp)}) {
    const Param par(qp, t);
    PodlesEngine<double> eng(par, cache);
    Rng rng(23);
    for (int rep = 0; rep < 3; ++rep) {
      const P x = random_poly(rng, 2), y = random_poly(rng, 2);
      const auto sx = eng.coact(x), sy = eng.coact(y);
      const auto lhs = eng.coact(multiply(x, y, par));
      const auto rhs = sx.mul(sy, par);
      CHECK(max_coeff_diff(lhs, rhs) /
                std::max(1.0, std::max(lhs.linf(), rhs.linf())) <
            1e-11);
      CHECK(max_coeff_diff(eng.coact(x.star(qp.q)), sx.star(par)) /
                std::max(1.0, sx.linf()) <
            1e-12);
      // (id (x) e) sigma = id
      const P back = slice_pod(sx, [](const GenPoly<double>& leg) {
        return leg.counit();
      });
      CHECK(rel_diff(back, x) < 1e-12);
    }
    CHECK(max_coeff_diff(eng.coact(P::unit()), PodTensor<double>::unit()) ==
          0.0);
  }
}

TEST_CASE("coaction is coassociative on the generators") {
  QParam<double> qp(0.5);
  const double q = qp.q;
  CorepCache<double> cache(qp);
  const Param par(qp, podles_c(2, qp));
  PodlesEngine<double> eng(par, cache);
  for (const PodGen g : {PodGen::A, PodGen::B, PodGen::BStar}) {
    const auto t = coact_gen(g, par);
    std::map<std::array<std::uint64_t, 3>, Cx> lhs, rhs;
    for (const auto& [pk, leg] : t.legs())
      for (const auto& [gk, c] : leg.terms()) {
        const auto phi = comultiply(GenPoly<double>::mono(GenMono::from_key(gk)), q);
        for (const auto& [pair, c2] : phi.terms())
          lhs[{pk, pair.first, pair.second}] += c * c2;
      }
    for (const auto& [pk, leg] : t.legs()) {
      const auto& spk = eng.coact_mono(pk);
      for (const auto& [pk2, leg2] : spk.legs())
        for (const auto& [gk2, c2] : leg2.terms())
          for (const auto& [gk, c] : leg.terms())
            rhs[{pk2, gk2, gk}] += c2 * c;
    }
    double dev = 0;
    for (const auto& [key, c] : lhs) {
      auto it = rhs.find(key);
      dev = std::max(dev, std::abs(it == rhs.end() ? c : c - it->second));
    }
    for (const auto& [key, c] : rhs)
      if (lhs.find(key) == lhs.end()) dev = std::max(dev, std::abs(c));
    CHECK(dev < 1e-13);
  }
}

TEST_CASE("invariant state closed forms, exact zeros, and invariance") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  const double q2 = qp.q * qp.q;

  {
    const Param par(qp, podles_c(1, qp));
    PodlesEngine<double> eng(par, cache);
    CHECK(std::abs(eng.invariant_state(P::unit()) - 1.0) < 1e-15);
    CHECK(std::abs(eng.invariant_state(P::generator(PodGen::A)) -
                   1.0 / (1.0 + q2)) < 1e-12);
    CHECK(std::abs(eng.invariant_state(P::generator(PodGen::A)) - 0.8) <
          1e-12);
  }
  {
    const Param par(qp, 0.5);
    PodlesEngine<double> eng(par, cache);
    const double expect = (1.0 - 0.25) / (1.0 + q2);
    CHECK(std::abs(eng.invariant_state(P::generator(PodGen::A)) - expect) <
          1e-12);
    CHECK(std::abs(eng.invariant_state(P::generator(PodGen::A)) - 0.6) <
          1e-12);
    // exact zero off the a-powers
    CHECK(eng.invariant_state(P::mono(PodMono{false, 2, 1})) == Cx(0));
    CHECK(eng.invariant_state(P::mono(PodMono{true, 0, 3})) == Cx(0));
  }

  for (const double t : {0.3, podles_c(2, qp)}) {
    const Param par(qp, t);
    PodlesEngine<double> eng(par, cache);
    Rng rng(31);
    for (int rep = 0; rep < 3; ++rep) {
      const P x = random_poly(rng, 3);
      // pruned and unpruned evaluations agree
      CHECK(std::abs(eng.invariant_state(x) - eng.invariant_state_full(x)) <
            1e-11);
      // positivity
      const double nn = std::real(
          eng.invariant_state(multiply(x.star(qp.q), x, par)));
      CHECK(nn > -1e-10);
      // invariance: (omega (x) id) sigma(x) = omega(x) 1
      GenPoly<double> acc;
      const auto sigma = eng.coact(x);
      for (const auto& [pk, leg] : sigma.legs()) {
        auto scaled = leg;
        scaled *= eng.invariant_state(P::mono(PodMono::from_key(pk)));
        acc += scaled;
      }
      GenPoly<double> expect = GenPoly<double>::unit();
      expect *= eng.invariant_state(x);
      CHECK(max_coeff_diff(acc, expect) / std::max(1.0, acc.linf()) < 1e-11);
    }
  }
}

TEST_CASE("spectral projections: known components and idempotence") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  const Param par(qp, 0.3);
  PodlesEngine<double> eng(par, cache);
  const P a = P::generator(PodGen::A);

  // E^0(x) = omega(x) 1
  Rng rng(41);
  const P x = random_poly(rng, 2);
  P e0 = P::unit();
  e0 *= eng.invariant_state(x);
  CHECK(rel_diff(eng.isotypic_project(0, x), e0) < 1e-12);

  // a has no half-integer-spin component but a nonzero spin-1 component
  CHECK(eng.isotypic_project(1, a).linf() < 1e-12);
  CHECK(eng.isotypic_project(3, a).linf() < 1e-12);
  CHECK(eng.isotypic_project(2, a).linf() > 1e-3);

  // E^beta E^gamma = delta E^gamma on a random element
  const P y = random_poly(rng, 2);
  for (int tb = 0; tb <= 2; ++tb)
    for (int tg = 0; tg <= 2; ++tg) {
      const P inner = eng.isotypic_project(tg, y);
      const P comp = eng.isotypic_project(tb, inner);
      const P expect = tb == tg ? inner : P::zero();
      CHECK(max_coeff_diff(comp, expect) / std::max(1.0, y.linf()) < 1e-11);
    }

  // E^gamma_{ij} E^gamma_{kl} = delta_{jk} E^gamma_{il}
  const int two_j = 2;
  for (const auto& [j, k] : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 1}, {2, 1}}) {
    const P comp = eng.spectral_project(two_j, 0, j,
                                        eng.spectral_project(two_j, k, 1, y));
    const P expect =
        j == k ? eng.spectral_project(two_j, 0, 1, y) : P::zero();
    CHECK(max_coeff_diff(comp, expect) / std::max(1.0, y.linf()) < 1e-11);
  }
}

TEST_CASE("multiplicity tables across the parameter space") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  // continuous fibres: multiplicity 1 at integer spins, 0 at half-integer
  for (const double t : {0.0, 0.3, 1.0}) {
    const Param par(qp, t);
    PodlesEngine<double> eng(par, cache);
    const auto basis = eng.standard_basis(4);
    CHECK(basis.mult.at(0) == 1);
    CHECK(basis.mult.at(1) == 0);
    CHECK(basis.mult.at(2) == 1);
    CHECK(basis.mult.at(3) == 0);
    CHECK(basis.mult.at(4) == 1);
  }
  // discrete fibres: multiplicity 1 exactly at integer spins below n
  for (const int n : {1, 2, 3}) {
    const Param par(qp, podles_c(n, qp));
    PodlesEngine<double> eng(par, cache);
    const auto basis = eng.standard_basis(4);
    for (int two_j = 0; two_j <= 4; ++two_j) {
      const bool present = (two_j % 2 == 0) && (two_j / 2 < n);
      CHECK(basis.mult.at(two_j) == (present ? 1 : 0));
    }
  }
}

TEST_CASE("standard basis: orthonormality, coaction rows, unit row") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  const Param par(qp, 0.3);
  PodlesEngine<double> eng(par, cache);
  const auto basis = eng.standard_basis(4);

  CHECK(max_coeff_diff(basis.rows.at(0)[0][0], P::unit()) == 0.0);

  // omega(e*_{gamma s j} e_{gamma k i}) = delta delta, including across spins
  struct Tagged {
    int two_j, k, i;
    const P* e;
  };
  std::vector<Tagged> all;
  for (const auto& [two_j, rows] : basis.rows)
    for (int k = 0; k < int(rows.size()); ++k)
      for (int i = 0; i <= two_j; ++i)
        all.push_back({two_j, k, i, &rows[std::size_t(k)][std::size_t(i)]});
  for (const auto& lhs : all)
    for (const auto& rhs : all) {
      const Cx v = eng.invariant_state(
          multiply(lhs.e->star(qp.q), *rhs.e, par));
      const Cx expect = (lhs.two_j == rhs.two_j && lhs.k == rhs.k &&
                         lhs.i == rhs.i)
                            ? Cx(1)
                            : Cx(0);
      CHECK(std::abs(v - expect) < 1e-9);
    }

  // sigma(e_{ki}) = sum_j e_{kj} (x) u_{ji}, checked directly for spin 1
  const auto& u = cache.corep(2);
  const auto& row = basis.rows.at(2)[0];
  for (int i = 0; i <= 2; ++i) {
    PodTensor<double> expect;
    for (int j = 0; j <= 2; ++j)
      for (const auto& [pk, pc] : row[std::size_t(j)].terms()) {
        auto leg = u(j, i);
        leg *= pc;
        expect.add(pk, leg);
      }
    CHECK(max_coeff_diff(eng.coact(row[std::size_t(i)]), expect) < 1e-10);
  }
}

TEST_CASE("matrix model at the discrete fibres") {
  for (const double qv : {0.3, 0.5}) {
    QParam<double> qp(qv);
    CorepCache<double> cache(qp);
    for (int n = 1; n <= 4; ++n) {
      const auto m = matrix_model(n, cache);
      CHECK(m.n == n);
      CHECK(m.par.regime == PodRegime::Discrete);
      CHECK(m.par.n == n);
      // operator norm bounds from the relation algebra
      Eigen::MatrixXcd a = m.a, b = m.b;
      const double anorm =
          a.jacobiSvd().singularValues().maxCoeff();
      const double bnorm =
          b.jacobiSvd().singularValues().maxCoeff();
      CHECK(anorm <= (1 + std::sqrt(2.0)) / (1 + qv * qv) + 1e-12);
      CHECK(bnorm <= std::sqrt(2.0 / (1 + qv * qv)) + 1e-12);
      if (n == 1) {
        CHECK(std::abs(a(0, 0) - 1.0 / (1 + qv * qv)) < 1e-15);
        CHECK(std::abs(b(0, 0)) == 0.0);
      }
    }
  }
}

TEST_CASE("matrix model carries the same action and invariant state") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  const auto& h = cache.haar();
  for (int n = 2; n <= 3; ++n) {
    const auto m = matrix_model(n, cache);
    PodlesEngine<double> eng(m.par, cache);

    auto pi = [&](const P& x) {
      Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
      for (const auto& [pk, c] : x.terms()) {
        const PodMono pm = PodMono::from_key(pk);
        Eigen::MatrixXcd w = Eigen::MatrixXcd::Identity(n, n);
        for (int i = 0; i < pm.k; ++i) w = (w * m.a).eval();
        Eigen::MatrixXcd bb = m.b;
        if (pm.bstar) bb = m.b.adjoint().eval();
        for (int i = 0; i < pm.l; ++i) w = (w * bb).eval();
        out += Cx(c) * w;
      }
      return out;
    };

    // evaluation intertwines the coactions: (pi (x) id) sigma = Ad_u pi
    for (const PodGen g : {PodGen::A, PodGen::B, PodGen::BStar}) {
      const P x = P::generator(g);
      const auto rhs = m.sigma(pi(x));
      std::vector<GenPoly<double>> lhs(std::size_t(n * n));
      const auto sx = eng.coact(x);
      for (const auto& [pk, leg] : sx.legs()) {
        const Eigen::MatrixXcd w = pi(P::mono(PodMono::from_key(pk)));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            auto scaled = leg;
            scaled *= w(i, j);
            lhs[std::size_t(i * n + j)] += scaled;
          }
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          CHECK(max_coeff_diff(lhs[std::size_t(i * n + j)], rhs(i, j)) <
                1e-12);
    }

    // the invariant states agree through the evaluation
    for (int k = 1; k <= 6; ++k) {
      const P ak = P::mono(PodMono{false, k, 0});
      CHECK(std::abs(m.omega(pi(ak)) - eng.invariant_state(ak)) < 1e-12);
    }

    // invariance: (id (x) h) sigma(x) = omega(x) I for a random x
    Rng rng(57);
    Eigen::MatrixXcd x(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x(i, j) = rng.cgaussian();
    const auto sx = m.sigma(x);
    const Cx w = m.omega(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Cx v = h(sx(i, j));
        CHECK(std::abs(v - (i == j ? w : Cx(0))) < 1e-12);
      }
  }
}
