#pragma once
//
// Structure constants of an ergodic action over a spin window.
//
// A standard basis {e_{gamma,k,i}} of the regular subspace turns the algebra
// into pure coefficient data: a tensor f with e_{x1} e_{x2} = sum_x3 f(x1,
// x2, x3) e_{x3} (the unit slot x0 included in the third index) and a tensor
// g with e*_{x1} = sum_x2 g(x1, x2) e_{x2}.  This header extracts (f, g)
// from any action model exposing the uniform surface (mult, e, mul, star,
// omega), evaluates the defining equation families on the window, applies
// the partial gauge action of block unitaries, and measures a sup distance
// between two windows after gauge alignment.
//
// Windowing policy: products of window spins can fuse past the top spin.
// Every equation instance whose evaluation needs coefficients outside the
// window is skipped and counted, never approximated.  Coefficients of an
// equation that land inside the window are exact as long as the first-level
// expansions involved stay enumerable, which is what the skip tests check.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qea/errors.hpp"
#include "qea/qarith.hpp"
#include "qea/qcg.hpp"
#include "qea/matrixcoeffs.hpp"

namespace qea {

// Basis index (spin, multiplicity slot, vector index); k and i are 1-based.
struct IndexX {
  int two_j = 0;
  int k = 1;
  int i = 1;
  friend auto operator<=>(const IndexX&, const IndexX&) = default;
};

// The unit occupies the single slot of the trivial spin.
inline constexpr IndexX unit_index{0, 1, 1};

using FKey = std::array<IndexX, 3>;
using GKey = std::array<IndexX, 2>;

inline constexpr IndexX index_min{std::numeric_limits<int>::min(),
                                  std::numeric_limits<int>::min(),
                                  std::numeric_limits<int>::min()};

// Spins of V_{j1} (x) V_{j2} as two_j values: |t1 - t2| .. t1 + t2 step 2.
inline std::vector<int> fusion_range(int two_j1, int two_j2) {
  std::vector<int> out;
  for (int t = std::abs(two_j1 - two_j2); t <= two_j1 + two_j2; t += 2)
    out.push_back(t);
  return out;
}

inline bool fusion_in_window(const std::set<int>& window, int two_j1,
                             int two_j2) {
  for (int t : fusion_range(two_j1, two_j2))
    if (!window.count(t)) return false;
  return true;
}

template <class Scalar = double>
struct StructureConstants {
  using C = std::complex<Scalar>;

  Scalar q = Scalar(0);
  std::vector<int> window;  // two_j values, ascending, trivial spin included
  std::map<int, int> mult;  // two_j -> occupied slots (0 allowed)
  std::map<FKey, C> f;      // sparse; zero entries dropped
  std::map<GKey, C> g;

  int multiplicity(int two_j) const {
    auto it = mult.find(two_j);
    return it == mult.end() ? 0 : it->second;
  }

  bool in_window(int two_j) const {
    return std::binary_search(window.begin(), window.end(), two_j);
  }

  std::set<int> window_set() const {
    return std::set<int>(window.begin(), window.end());
  }

  C fval(const IndexX& x1, const IndexX& x2, const IndexX& x3) const {
    auto it = f.find({x1, x2, x3});
    return it == f.end() ? C(0) : it->second;
  }

  C gval(const IndexX& x1, const IndexX& x2) const {
    auto it = g.find({x1, x2});
    return it == g.end() ? C(0) : it->second;
  }

  // Occupied nontrivial indices, ascending.
  std::vector<IndexX> occupied() const {
    std::vector<IndexX> out;
    for (int t : window) {
      if (t == 0) continue;
      const int m = multiplicity(t), d = spin_dim(t);
      for (int k = 1; k <= m; ++k)
        for (int i = 1; i <= d; ++i) out.push_back({t, k, i});
    }
    return out;
  }

  // Slot range probed by the pattern equations: one slot past the occupied
  // block, capped by the dimension bound on the multiplicity.
  int slot_cap(int two_j) const {
    const IrrepConstants<Scalar> cst(two_j, QParam<Scalar>(q));
    return int(std::min<long>(cst.N, long(multiplicity(two_j)) + 1));
  }
};

// ---------------------------------------------------------------------------
// Index set enumeration.

struct IndexSets {
  std::vector<IndexX> X;  // unit first, then spin blocks
  std::vector<FKey> Y;
  std::vector<GKey> Z;
};

// Enumerates the window's index sets.  Slots run to the dimension bound
// N_gamma unless slot_cap provides a (per spin) cap; spins missing from a
// provided cap map contribute no slots.  Y triples pair two nontrivial spins
// with every fusion spin inside the window, the trivial spin included.
template <class Scalar = double>
IndexSets index_sets(Scalar q, const std::vector<int>& window,
                     const std::map<int, int>* slot_cap = nullptr) {
  const QParam<Scalar> qp(q);
  std::set<int> wset(window.begin(), window.end());

  std::map<int, std::vector<IndexX>> blocks;
  for (int t : wset) {
    if (t < 0) throw DomainError("index_sets: negative spin in window");
    if (t == 0) continue;
    const IrrepConstants<Scalar> cst(t, qp);
    long slots = cst.N;
    if (slot_cap) {
      auto it = slot_cap->find(t);
      slots = it == slot_cap->end() ? 0 : std::min<long>(cst.N, it->second);
    }
    std::vector<IndexX> block;
    for (long k = 1; k <= slots; ++k)
      for (int i = 1; i <= cst.d; ++i) block.push_back({t, int(k), i});
    blocks.emplace(t, std::move(block));
  }

  IndexSets out;
  out.X.push_back(unit_index);
  long xtotal = 1;
  for (const auto& [t, block] : blocks) {
    xtotal += long(block.size());
    out.X.insert(out.X.end(), block.begin(), block.end());
  }

  long ytotal = 0;
  for (const auto& [ta, ba] : blocks)
    for (const auto& [tb, bb] : blocks)
      for (int tg : fusion_range(ta, tb)) {
        if (tg != 0 && !wset.count(tg)) continue;
        const long dg = tg == 0 ? 1 : long(blocks.at(tg).size());
        ytotal += long(ba.size()) * long(bb.size()) * dg;
      }
  if (ytotal > 2'000'000)
    throw DomainError(
        "index_sets: window too large to enumerate; pass slot caps");

  for (const auto& [ta, ba] : blocks)
    for (const auto& [tb, bb] : blocks)
      for (int tg : fusion_range(ta, tb)) {
        if (tg != 0 && !wset.count(tg)) continue;
        const std::vector<IndexX> trivial{unit_index};
        const auto& bg = tg == 0 ? trivial : blocks.at(tg);
        for (const auto& xa : ba)
          for (const auto& xb : bb)
            for (const auto& xg : bg) out.Y.push_back({xa, xb, xg});
      }

  for (const auto& [t, block] : blocks)
    for (const auto& xa : block)
      for (const auto& xb : block) out.Z.push_back({xa, xb});

  return out;
}

// ---------------------------------------------------------------------------
// Extraction from an action model.

// Pulls (f, g) out of a certified basis: f(x1, x2, x3) = omega(e*_{x3}
// (e_{x1} e_{x2})) with the plain invariant-state value at the unit slot,
// g(x1, x2) = omega(e*_{x2} e*_{x1}).  Completeness of every expansion that
// the window can express is verified through the Parseval identity in the
// invariant state; a leak past the declared slots raises a truncation error.
template <class Model>
auto from_action(Model& m)
    -> StructureConstants<std::decay_t<decltype(m.qparam().q)>> {
  using Scalar = std::decay_t<decltype(m.qparam().q)>;
  using C = std::complex<Scalar>;
  using Element = typename Model::Element;

  StructureConstants<Scalar> sc;
  sc.q = m.qparam().q;
  const int top = m.two_j_max();
  const QParam<Scalar> qp(sc.q);

  for (int t = 0; t <= top; ++t) {
    sc.window.push_back(t);
    const int mu = m.mult(t);
    const IrrepConstants<Scalar> cst(t, qp);
    if (mu < 0 || long(mu) > cst.N)
      throw DomainError("from_action: multiplicity outside the slot bound");
    sc.mult[t] = mu;
  }
  if (sc.mult.at(0) != 1)
    throw DomainError("from_action: trivial spin must carry exactly the unit");

  std::map<IndexX, Element> basis;
  for (const IndexX& x : sc.occupied())
    basis.emplace(x, m.e(x.two_j, x.k - 1, x.i - 1));

  const std::set<int> wset = sc.window_set();
  const double drop = tol::sparse_drop;

  // Conjugate expansions: same spin block, always complete.
  std::map<IndexX, Element> stars;
  for (const auto& [x1, e1] : basis) stars.emplace(x1, m.star(e1));
  for (const auto& [x1, s1] : basis) {
    const Element& star1 = stars.at(x1);
    const Scalar n2 = std::real(m.omega(m.mul(m.star(star1), star1)));
    Scalar captured = 0;
    for (const auto& [x2, e2] : basis) {
      if (x2.two_j != x1.two_j) continue;
      const C val = m.omega(m.mul(stars.at(x2), star1));
      captured += std::norm(val);
      if (std::abs(val) > drop) sc.g[{x1, x2}] = val;
    }
    if (std::abs(n2 - captured) > tol::certify * std::max<Scalar>(1, n2))
      throw TruncationError(
          "from_action: conjugate expansion escapes the declared slots (spin " +
          std::to_string(x1.two_j) + ")");
  }

  // Products.  Fusion inside the window makes the expansion checkable; a
  // leaking pair still yields exact coefficients for every window slot.
  for (const auto& [x1, e1] : basis)
    for (const auto& [x2, e2] : basis) {
      const Element p = m.mul(e1, e2);
      Scalar captured = 0;
      for (int tg : fusion_range(x1.two_j, x2.two_j)) {
        if (!wset.count(tg)) continue;
        if (tg == 0) {
          const C val = m.omega(p);
          captured += std::norm(val);
          if (std::abs(val) > drop) sc.f[{x1, x2, unit_index}] = val;
          continue;
        }
        const int mu = sc.mult.at(tg), d = spin_dim(tg);
        for (int k = 1; k <= mu; ++k)
          for (int i = 1; i <= d; ++i) {
            const IndexX x3{tg, k, i};
            const C val = m.omega(m.mul(stars.at(x3), p));
            captured += std::norm(val);
            if (std::abs(val) > drop) sc.f[{x1, x2, x3}] = val;
          }
      }
      if (fusion_in_window(wset, x1.two_j, x2.two_j)) {
        const Scalar n2 = std::real(m.omega(m.mul(m.star(p), p)));
        if (std::abs(n2 - captured) > tol::certify * std::max<Scalar>(1, n2))
          throw TruncationError(
              "from_action: product expansion escapes the declared slots "
              "(spins " +
              std::to_string(x1.two_j) + ", " + std::to_string(x2.two_j) +
              ")");
      }
    }

  return sc;
}

// Precision cast, so extraction can run at extended precision and hand the
// certification pipeline double data.
template <class To, class From>
StructureConstants<To> convert_constants(const StructureConstants<From>& in) {
  StructureConstants<To> out;
  out.q = To(in.q);
  out.window = in.window;
  out.mult = in.mult;
  for (const auto& [key, v] : in.f)
    out.f[key] = std::complex<To>(To(v.real()), To(v.imag()));
  for (const auto& [key, v] : in.g)
    out.g[key] = std::complex<To>(To(v.real()), To(v.imag()));
  return out;
}

// ---------------------------------------------------------------------------
// Formal expansion helpers over the window span.

namespace detail {

template <class Scalar>
using VCoeff = std::map<IndexX, std::complex<Scalar>>;

// Window coefficients of v_{x} v_{y}; unit slots act as the identity.
template <class Scalar>
VCoeff<Scalar> mul_basis(const StructureConstants<Scalar>& sc, const IndexX& x,
                         const IndexX& y) {
  VCoeff<Scalar> out;
  if (x == unit_index) {
    out[y] = 1;
    return out;
  }
  if (y == unit_index) {
    out[x] = 1;
    return out;
  }
  for (auto it = sc.f.lower_bound({x, y, index_min});
       it != sc.f.end() && it->first[0] == x && it->first[1] == y; ++it)
    out[it->first[2]] = it->second;
  return out;
}

// Window coefficients of v*_{x}.
template <class Scalar>
VCoeff<Scalar> star_basis(const StructureConstants<Scalar>& sc,
                          const IndexX& x) {
  VCoeff<Scalar> out;
  if (x == unit_index) {
    out[unit_index] = 1;
    return out;
  }
  for (auto it = sc.g.lower_bound({x, index_min});
       it != sc.g.end() && it->first[0] == x; ++it)
    out[it->first[1]] = it->second;
  return out;
}

template <class Scalar>
double max_diff(const VCoeff<Scalar>& a, const VCoeff<Scalar>& b) {
  double out = 0;
  for (const auto& [x, v] : a)
    out = std::max(out, std::abs(v - (b.count(x) ? b.at(x) : 0)));
  for (const auto& [x, v] : b)
    if (!a.count(x)) out = std::max(out, std::abs(v));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Residual evaluation.

struct FamilyResidual {
  double max = 0;
  double sum = 0;
  long count = 0;
  bool pass = true;

  void add(double r) {
    max = std::max(max, r);
    sum += r;
    ++count;
  }
  double mean() const { return count ? sum / double(count) : 0; }
  void close(double tolerance) { pass = max <= tolerance; }
};

struct ResidualReport {
  FamilyResidual e1_assoc;       // (v1 v2) v3 = v1 (v2 v3)
  FamilyResidual e1_involution;  // (v*)* = v and (v1 v2)* = v2* v1*
  FamilyResidual e1_coaction;    // coaction is a *-homomorphism
  FamilyResidual e2;             // unit coefficients carry the slot pattern
  FamilyResidual e3;             // (f, g) supported on occupied slots
  long assoc_skipped = 0;
  long coaction_skipped = 0;
  double tolerance = tol::certify;
  bool pass = false;
};

// Coefficient of v*_{x2} v_{x1} at the unit, expanded through g then f.
template <class Scalar>
std::complex<Scalar> coefficient_F(const StructureConstants<Scalar>& sc,
                                   const IndexX& x1, const IndexX& x2) {
  if (x1.two_j != x2.two_j)
    throw DomainError("coefficient_F: indices from different spin blocks");
  std::complex<Scalar> out = 0;
  for (auto it = sc.g.lower_bound({x2, index_min});
       it != sc.g.end() && it->first[0] == x2; ++it)
    out += it->second * sc.fval(it->first[1], x1, unit_index);
  return out;
}

// Evaluates every equation family the window determines.  Residuals are
// absolute; each instance contributes the sup norm over its coefficients.
template <class Scalar>
ResidualReport residuals(const StructureConstants<Scalar>& sc,
                         CorepCache<Scalar>& cqg,
                         double tolerance = tol::certify) {
  using C = std::complex<Scalar>;
  if (std::abs(cqg.qparam().q - sc.q) > tol::t_dispatch)
    throw DomainError("residuals: deformation parameter mismatch");

  ResidualReport rep;
  rep.tolerance = tolerance;
  const std::set<int> wset = sc.window_set();
  const std::vector<IndexX> occ = sc.occupied();
  QcgCache<Scalar> cg(cqg.qparam());

  // Associativity.  Both first-level fusions must stay enumerable inside the
  // window; the intermediate sums then cover every contributing slot.
  for (const IndexX& x1 : occ)
    for (const IndexX& x2 : occ)
      for (const IndexX& x3 : occ) {
        if (!fusion_in_window(wset, x1.two_j, x2.two_j) ||
            !fusion_in_window(wset, x2.two_j, x3.two_j)) {
          ++rep.assoc_skipped;
          continue;
        }
        detail::VCoeff<Scalar> lhs, rhs;
        for (const auto& [xm, c] : detail::mul_basis(sc, x1, x2))
          for (const auto& [x4, c2] : detail::mul_basis(sc, xm, x3))
            lhs[x4] += c * c2;
        for (const auto& [xm, c] : detail::mul_basis(sc, x2, x3))
          for (const auto& [x4, c2] : detail::mul_basis(sc, x1, xm))
            rhs[x4] += c * c2;
        rep.e1_assoc.add(detail::max_diff(lhs, rhs));
      }

  // Involution: (v*)* = v.
  for (const IndexX& x1 : occ) {
    detail::VCoeff<Scalar> acc;
    for (const auto& [y, c] : detail::star_basis(sc, x1))
      for (const auto& [z, c2] : detail::star_basis(sc, y))
        acc[z] += std::conj(c) * c2;
    acc[x1] -= C(1);
    double r = 0;
    for (const auto& [z, v] : acc) r = std::max(r, std::abs(v));
    rep.e1_involution.add(r);
  }

  // Involution: (v1 v2)* = v2* v1*.  Conjugation preserves spin blocks, so
  // both sides are exact at every window coefficient without fusion closure.
  for (const IndexX& x1 : occ)
    for (const IndexX& x2 : occ) {
      detail::VCoeff<Scalar> lhs, rhs;
      for (const auto& [x3, c] : detail::mul_basis(sc, x1, x2))
        for (const auto& [z, c2] : detail::star_basis(sc, x3))
          lhs[z] += std::conj(c) * c2;
      for (const auto& [y2, c2] : detail::star_basis(sc, x2))
        for (const auto& [y1, c1] : detail::star_basis(sc, x1))
          for (const auto& [z, c3] : detail::mul_basis(sc, y2, y1))
            rhs[z] += c2 * c1 * c3;
      rep.e1_involution.add(detail::max_diff(lhs, rhs));
    }

  // Coaction homomorphism.  With u^a_{j1 i1} u^b_{j2 i2} re-expanded through
  // the coupling isometries as sum_g C((j1 j2), m) u^g_{mn} conj(C((i1 i2),
  // n)), matching coefficients of v_{x4} (x) u^g_{mn} gives, per occupied
  // pair (x1, x2) and window slot x4:
  //   conj(C((i1 i2), n)) sum_{j1 j2} f(.., j1, .., j2, x4) C((j1 j2), m)
  //     = [spin(x4) = g][i(x4) = m + 1] f(x1, x2, (g, slot(x4), n + 1)).
  for (const IndexX& x1 : occ)
    for (const IndexX& x2 : occ) {
      if (!fusion_in_window(wset, x1.two_j, x2.two_j)) {
        ++rep.coaction_skipped;
        continue;
      }
      const int d1 = spin_dim(x1.two_j), d2 = spin_dim(x2.two_j);
      double r = 0;
      for (int tg : fusion_range(x1.two_j, x2.two_j)) {
        const auto& coup = cg.coupling(x1.two_j, x2.two_j, tg);
        const int dg = spin_dim(tg);
        std::vector<IndexX> targets;
        if (tg == 0) targets.push_back(unit_index);
        const int mu = sc.multiplicity(tg), dd = spin_dim(tg);
        if (tg != 0)
          for (int s = 1; s <= mu; ++s)
            for (int p = 1; p <= dd; ++p) targets.push_back({tg, s, p});
        for (const IndexX& x4 : targets)
          for (int mm = 0; mm < dg; ++mm)
            for (int nn = 0; nn < dg; ++nn) {
              C rhs = 0;
              for (int j1 = 0; j1 < d1; ++j1)
                for (int j2 = 0; j2 < d2; ++j2) {
                  const C fv = sc.fval({x1.two_j, x1.k, j1 + 1},
                                       {x2.two_j, x2.k, j2 + 1}, x4);
                  if (fv != C(0)) rhs += fv * coup(j1 * d2 + j2, mm);
                }
              rhs *= std::conj(
                  C(coup((x1.i - 1) * d2 + (x2.i - 1), nn)));
              C lhs = 0;
              if (x4.i == mm + 1)
                lhs = sc.fval(x1, x2, {tg, x4.k, nn + 1});
              r = std::max(r, std::abs(lhs - rhs));
            }
      }
      rep.e1_coaction.add(r);
    }

  // Coaction-conjugation compatibility, through the conjugate re-expansion
  // (u^g_{ji})* = sum_{mn} K((m, n), (j, i)) u^g_{mn} of the spin block.
  for (const IndexX& x1 : occ) {
    const int t = x1.two_j, d = spin_dim(t);
    const auto& K = cqg.conj_expansion(t);
    double r = 0;
    for (const IndexX& y : occ) {
      if (y.two_j != t) continue;
      for (int mm = 0; mm < d; ++mm)
        for (int nn = 0; nn < d; ++nn) {
          C lhs = 0;
          for (int j = 0; j < d; ++j) {
            const C gv = sc.gval({t, x1.k, j + 1}, y);
            if (gv != C(0)) lhs += gv * K(mm * d + nn, j * d + (x1.i - 1));
          }
          C rhs = 0;
          if (y.i == mm + 1) rhs = sc.gval(x1, {t, y.k, nn + 1});
          r = std::max(r, std::abs(lhs - rhs));
        }
    }
    rep.e1_coaction.add(r);
  }

  // Unit-coefficient pattern against the declared multiplicities, probed one
  // slot past the occupied block.
  for (int t : sc.window) {
    if (t == 0) continue;
    const int cap = sc.slot_cap(t), d = spin_dim(t), mu = sc.multiplicity(t);
    for (int s = 1; s <= cap; ++s)
      for (int k = 1; k <= cap; ++k)
        for (int j = 1; j <= d; ++j)
          for (int i = 1; i <= d; ++i) {
            const IndexX x1{t, s, j}, x2{t, k, i};
            const C fc = coefficient_F(sc, x1, x2);
            const C expected = (x1 == x2 && s <= mu) ? C(1) : C(0);
            rep.e2.add(std::abs(fc - expected));
          }
  }

  // Support: every stored coefficient is matched by unit slots of value one.
  {
    std::map<IndexX, C> fdiag;
    auto unit_weight = [&](const IndexX& x) {
      auto it = fdiag.find(x);
      if (it == fdiag.end())
        it = fdiag.emplace(x, coefficient_F(sc, x, x)).first;
      return it->second;
    };
    for (const auto& [key, v] : sc.f) {
      double r = 0;
      for (int s = 0; s < 3; ++s) {
        if (key[s] == unit_index) continue;
        r = std::max(r, std::abs(v) * std::abs(C(1) - unit_weight(key[s])));
      }
      rep.e3.add(r);
    }
    for (const auto& [key, v] : sc.g) {
      double r = 0;
      for (int s = 0; s < 2; ++s)
        r = std::max(r, std::abs(v) * std::abs(C(1) - unit_weight(key[s])));
      rep.e3.add(r);
    }
  }

  rep.e1_assoc.close(tolerance);
  rep.e1_involution.close(tolerance);
  rep.e1_coaction.close(tolerance);
  rep.e2.close(tolerance);
  rep.e3.close(tolerance);
  rep.pass = rep.e1_assoc.pass && rep.e1_involution.pass &&
             rep.e1_coaction.pass && rep.e2.pass && rep.e3.pass;
  return rep;
}

// ---------------------------------------------------------------------------
// Gauge action.

// Per-spin block unitaries acting on the occupied multiplicity slots.  Spins
// missing from the map act as the identity.
template <class Scalar = double>
struct GaugeElement {
  using Mat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic,
                            Eigen::Dynamic>;
  std::map<int, Mat> xi;
};

// Transforms the constants by the slot mixing e'_{gamma, k} = sum_s
// xi_gamma(s, k) e_{gamma, s}.  Blocks larger than the occupied range must
// fix the tail slots, otherwise the element leaves the action's domain.
template <class Scalar>
StructureConstants<Scalar> gauge_act(const StructureConstants<Scalar>& sc,
                                     const GaugeElement<Scalar>& xi) {
  using C = std::complex<Scalar>;
  using Mat = typename GaugeElement<Scalar>::Mat;

  std::map<int, Mat> blocks;
  for (const auto& [t, m] : xi.xi) {
    if (!sc.in_window(t))
      throw DomainError("gauge_act: block spin outside the window");
    if (m.rows() != m.cols() || m.rows() < 1)
      throw DomainError("gauge_act: block is not square");
    const int mu = sc.multiplicity(t);
    if ((m.adjoint() * m - Mat::Identity(m.rows(), m.cols())).cwiseAbs()
            .maxCoeff() > tol::unitary)
      throw DomainError("gauge_act: block is not unitary");
    if (m.rows() > mu) {
      Mat tail = m.bottomRightCorner(m.rows() - mu, m.cols() - mu);
      Mat offa = m.topRightCorner(mu, m.cols() - mu);
      Mat offb = m.bottomLeftCorner(m.rows() - mu, mu);
      if ((tail - Mat::Identity(tail.rows(), tail.cols())).cwiseAbs()
                  .maxCoeff() > tol::unitary ||
          (offa.size() && offa.cwiseAbs().maxCoeff() > tol::unitary) ||
          (offb.size() && offb.cwiseAbs().maxCoeff() > tol::unitary))
        throw DomainError("gauge_act: block mixes slots past the occupied range");
    }
    if (mu == 0) continue;
    blocks[t] = m.topLeftCorner(std::min<int>(int(m.rows()), mu),
                                std::min<int>(int(m.cols()), mu));
    if (blocks[t].rows() < mu)
      throw DomainError("gauge_act: block smaller than the occupied range");
  }

  // Slot images of an index under the transform: pairs (new slot, factor).
  auto images = [&](const IndexX& x, bool conj) {
    std::vector<std::pair<int, C>> out;
    auto it = blocks.find(x.two_j);
    if (x == unit_index || it == blocks.end()) {
      out.emplace_back(x.k, C(1));
      return out;
    }
    for (int knew = 1; knew <= int(it->second.cols()); ++knew) {
      C v = it->second(x.k - 1, knew - 1);
      if (conj) v = std::conj(v);
      if (v != C(0)) out.emplace_back(knew, v);
    }
    return out;
  };

  StructureConstants<Scalar> out;
  out.q = sc.q;
  out.window = sc.window;
  out.mult = sc.mult;

  for (const auto& [key, v] : sc.f) {
    const auto& [x1, x2, x3] = key;
    for (const auto& [k1, c1] : images(x1, false))
      for (const auto& [k2, c2] : images(x2, false))
        for (const auto& [k3, c3] : images(x3, true))
          out.f[{IndexX{x1.two_j, k1, x1.i}, IndexX{x2.two_j, k2, x2.i},
                 IndexX{x3.two_j, k3, x3.i}}] += c1 * c2 * c3 * v;
  }
  for (const auto& [key, v] : sc.g) {
    const auto& [x1, x2] = key;
    for (const auto& [k1, c1] : images(x1, true))
      for (const auto& [k2, c2] : images(x2, true))
        out.g[{IndexX{x1.two_j, k1, x1.i}, IndexX{x2.two_j, k2, x2.i}}] +=
            c1 * c2 * v;
  }

  auto prune = [](auto& mp) {
    for (auto it = mp.begin(); it != mp.end();)
      it = std::abs(it->second) <= tol::sparse_drop ? mp.erase(it)
                                                    : std::next(it);
  };
  prune(out.f);
  prune(out.g);
  return out;
}

// ---------------------------------------------------------------------------
// Isometry identity and norm bounds.

struct IsometryReport {
  double max_residual = 0;   // against delta_{ks} M at the unit coefficient
  double bound_excess = 0;   // worst |value| - bound over f and g
  bool pass = true;
};

// Verifies the slot isometry sum_j F_j v*_{gamma k j} v_{gamma s j} =
// delta_{ks} M 1 at every window coefficient (the weight diag(F) is the one
// whose contraction of conjugates against matrix entries is invariant, and
// trace F = M fixes the unit value), slots within the occupied range, and
// the norm bounds |f|, |g| <= sqrt(|F| M) of the first slot's spin.
template <class Scalar>
IsometryReport isometry_check(const StructureConstants<Scalar>& sc) {
  using C = std::complex<Scalar>;
  const QParam<Scalar> qp(sc.q);
  IsometryReport rep;

  for (int t : sc.window) {
    if (t == 0) continue;
    const int mu = sc.multiplicity(t);
    if (mu == 0) continue;
    const IrrepConstants<Scalar> cst(t, qp);
    for (int k = 1; k <= mu; ++k)
      for (int s = 1; s <= mu; ++s) {
        detail::VCoeff<Scalar> acc;
        for (int j = 1; j <= static_cast<int>(cst.d); ++j) {
          const Scalar w = cst.F[j - 1];
          const IndexX xk{t, k, j}, xs{t, s, j};
          for (auto it = sc.g.lower_bound({xk, index_min});
               it != sc.g.end() && it->first[0] == xk; ++it) {
            const IndexX& y = it->first[1];
            for (auto jt = sc.f.lower_bound({y, xs, index_min});
                 jt != sc.f.end() && jt->first[0] == y && jt->first[1] == xs;
                 ++jt)
              acc[jt->first[2]] += w * it->second * jt->second;
          }
        }
        acc[unit_index] -= C(k == s ? cst.M : Scalar(0));
        for (const auto& [x, v] : acc)
          rep.max_residual = std::max(rep.max_residual, std::abs(v));
      }
  }

  auto bound_of = [&](int t) {
    return IrrepConstants<Scalar>(t, qp).norm_bound;
  };
  for (const auto& [key, v] : sc.f)
    rep.bound_excess =
        std::max(rep.bound_excess, std::abs(v) - double(bound_of(key[0].two_j)));
  for (const auto& [key, v] : sc.g)
    rep.bound_excess =
        std::max(rep.bound_excess, std::abs(v) - double(bound_of(key[0].two_j)));

  rep.pass = rep.max_residual <= tol::certify && rep.bound_excess <= 1e-9;
  return rep;
}

// ---------------------------------------------------------------------------
// Window distance.

namespace detail {

template <class Scalar>
double sup_difference(const StructureConstants<Scalar>& a,
                      const StructureConstants<Scalar>& b) {
  double out = 0;
  for (const auto& [key, v] : a.f)
    out = std::max(out, std::abs(v - b.fval(key[0], key[1], key[2])));
  for (const auto& [key, v] : b.f)
    if (!a.f.count(key)) out = std::max(out, std::abs(v));
  for (const auto& [key, v] : a.g)
    out = std::max(out, std::abs(v - b.gval(key[0], key[1])));
  for (const auto& [key, v] : b.g)
    if (!a.g.count(key)) out = std::max(out, std::abs(v));
  return out;
}

// One alignment pass: per spin, the unitary minimizing the Frobenius
// mismatch of the third-slot coordinates of f (slots as columns), by the
// polar factor of the cross-Gram.  Exact when each spin enters keys once;
// used inside an iterated minimizer otherwise.
template <class Scalar>
GaugeElement<Scalar> procrustes_pass(const StructureConstants<Scalar>& a,
                                     const StructureConstants<Scalar>& b) {
  using C = std::complex<Scalar>;
  using Mat = typename GaugeElement<Scalar>::Mat;
  GaugeElement<Scalar> out;
  for (int t : a.window) {
    if (t == 0) continue;
    const int mu = a.multiplicity(t);
    if (mu == 0) continue;
    Mat cross = Mat::Zero(mu, mu);
    std::set<std::array<IndexX, 3>> keys;
    auto strip = [&](const FKey& key) {
      return std::array<IndexX, 3>{key[0], key[1], IndexX{t, 0, key[2].i}};
    };
    for (const auto& [key, v] : a.f)
      if (key[2].two_j == t && key[2] != unit_index) keys.insert(strip(key));
    for (const auto& [key, v] : b.f)
      if (key[2].two_j == t && key[2] != unit_index) keys.insert(strip(key));
    for (const auto& sk : keys)
      for (int s = 1; s <= mu; ++s)
        for (int k = 1; k <= mu; ++k) {
          const IndexX xs{t, s, sk[2].i}, xk{t, k, sk[2].i};
          cross(s - 1, k - 1) += b.fval(sk[0], sk[1], xs) *
                                 std::conj(a.fval(sk[0], sk[1], xk));
        }
    Eigen::JacobiSVD<Mat> svd(cross,
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().minCoeff() <= 0) {
      out.xi[t] = Mat::Identity(mu, mu);
      continue;
    }
    const Mat polar = svd.matrixU() * svd.matrixV().adjoint();
    out.xi[t] = polar.conjugate();
  }
  return out;
}

// Joint phase fit for windows whose spins all carry multiplicity one.  A
// phase gauge multiplies an f entry by the slot phases (conjugated on the
// third slot) and a g entry by two conjugates, so with all other phases
// frozen the l2 mismatch against the target is const - 2 Re sum_p c_p z^p
// in the remaining phase z, |p| <= 2.  Cyclic coordinate descent maximizes
// that trigonometric polynomial exactly per step (coarse sample, then
// guarded Newton), giving monotone convergence of the global objective.
template <class Scalar>
std::map<int, std::complex<Scalar>> phase_align(
    const StructureConstants<Scalar>& a, const StructureConstants<Scalar>& b,
    const std::vector<int>& spins) {
  using C = std::complex<Scalar>;

  std::vector<std::pair<C, std::map<int, int>>> terms;
  auto push = [&](C va, C vb, std::map<int, int> e) {
    if (std::abs(va) <= tol::sparse_drop) return;
    for (auto it = e.begin(); it != e.end();)
      it = it->second == 0 ? e.erase(it) : std::next(it);
    if (e.empty()) return;
    terms.push_back({std::conj(va) * vb, std::move(e)});
  };
  for (const auto& [key, vb] : b.f) {
    std::map<int, int> e;
    if (key[0].two_j != 0) e[key[0].two_j] += 1;
    if (key[1].two_j != 0) e[key[1].two_j] += 1;
    if (key[2].two_j != 0) e[key[2].two_j] -= 1;
    push(a.fval(key[0], key[1], key[2]), vb, std::move(e));
  }
  for (const auto& [key, vb] : b.g) {
    std::map<int, int> e;
    if (key[0].two_j != 0) e[key[0].two_j] -= 1;
    if (key[1].two_j != 0) e[key[1].two_j] -= 1;
    push(a.gval(key[0], key[1]), vb, std::move(e));
  }

  auto pw = [](C z, int p) {
    C w = p < 0 ? std::conj(z) : z;
    C r(1);
    for (int n = std::abs(p); n > 0; --n) r *= w;
    return r;
  };

  std::map<int, C> th;
  for (int t : spins) th[t] = C(1);

  auto objective = [&] {
    double s = 0;
    for (const auto& [core, e] : terms) {
      C p = core;
      for (const auto& [t, pe] : e) p *= pw(th[t], pe);
      s += p.real();
    }
    return s;
  };

  double prev = objective();
  for (int sweep = 0; sweep < 40; ++sweep) {
    for (int t : spins) {
      std::array<C, 5> cs{};
      for (const auto& [core, e] : terms) {
        const auto it = e.find(t);
        if (it == e.end()) continue;
        C quiet = core;
        for (const auto& [tt, pe] : e)
          if (tt != t) quiet *= pw(th[tt], pe);
        cs[it->second + 2] += quiet;
      }
      auto hval = [&](Scalar ph) {
        const C z = std::polar(Scalar(1), ph);
        double s = 0;
        for (int p = -2; p <= 2; ++p)
          if (p != 0) s += (pw(z, p) * cs[p + 2]).real();
        return s;
      };
      Scalar phi = 0;
      double hbest = hval(0);
      for (int k = 1; k < 64; ++k) {
        const Scalar cand = Scalar(2 * M_PI * k / 64.0);
        const double h = hval(cand);
        if (h > hbest) hbest = h, phi = cand;
      }
      for (int it2 = 0; it2 < 60; ++it2) {
        const C z = std::polar(Scalar(1), phi);
        double d1 = 0, d2 = 0;
        for (int p = -2; p <= 2; ++p)
          if (p != 0) {
            const C term = pw(z, p) * cs[p + 2];
            d1 += (C(0, Scalar(p)) * term).real();
            d2 -= double(p) * double(p) * term.real();
          }
        if (std::abs(d2) < 1e-300) break;
        Scalar step = Scalar(-d1 / d2);
        step = std::clamp(step, Scalar(-0.2), Scalar(0.2));
        if (hval(phi + step) < hbest) break;
        phi += step;
        hbest = hval(phi);
        if (std::abs(step) < Scalar(1e-15)) break;
      }
      th[t] = std::polar(Scalar(1), phi);
    }
    const double cur = objective();
    if (cur - prev <= 1e-13 * (1 + std::abs(cur))) break;
    prev = cur;
  }
  return th;
}

template <class Scalar>
GaugeElement<Scalar> compose(const StructureConstants<Scalar>& sc,
                             const GaugeElement<Scalar>& first,
                             const GaugeElement<Scalar>& second) {
  using Mat = typename GaugeElement<Scalar>::Mat;
  GaugeElement<Scalar> out;
  std::set<int> spins;
  for (const auto& [t, m] : first.xi) spins.insert(t);
  for (const auto& [t, m] : second.xi) spins.insert(t);
  for (int t : spins) {
    const int mu = sc.multiplicity(t);
    if (mu == 0) continue;
    Mat aa = Mat::Identity(mu, mu), bb = Mat::Identity(mu, mu);
    if (auto it = first.xi.find(t); it != first.xi.end())
      aa = it->second.topLeftCorner(mu, mu);
    if (auto it = second.xi.find(t); it != second.xi.end())
      bb = it->second.topLeftCorner(mu, mu);
    out.xi[t] = aa * bb;
  }
  return out;
}

}  // namespace detail

// Sup distance over the shared window after gauge alignment.  An explicit
// align element names the gauge carrying the first window onto the second,
// so the second is pulled back by its adjoint before comparing.  The default
// searches identity, sign flips and a joint phase fit on multiplicity-one
// spins, and an iterated per-spin alignment, and reports the smallest value
// found, an upper bound for the distance between the gauge orbits.  A
// multiplicity mismatch is infinite distance; the differing spins are
// listed.
template <class Scalar>
double window_distance(const StructureConstants<Scalar>& a,
                       const StructureConstants<Scalar>& b,
                       const GaugeElement<Scalar>* align = nullptr,
                       std::vector<int>* mult_mismatch = nullptr) {
  using Mat = typename GaugeElement<Scalar>::Mat;
  if (std::abs(a.q - b.q) > tol::t_dispatch)
    throw DomainError("window_distance: deformation parameter mismatch");
  if (a.window != b.window)
    throw DomainError("window_distance: different windows");

  std::vector<int> mismatch;
  for (int t : a.window)
    if (a.multiplicity(t) != b.multiplicity(t)) mismatch.push_back(t);
  if (mult_mismatch) *mult_mismatch = mismatch;
  if (!mismatch.empty()) return std::numeric_limits<double>::infinity();

  if (align) {
    GaugeElement<Scalar> inv;
    for (const auto& [t, m] : align->xi) inv.xi[t] = m.adjoint();
    return detail::sup_difference(a, gauge_act(b, inv));
  }

  double best = detail::sup_difference(a, b);

  std::vector<int> ones;
  bool all_small = true;
  for (int t : a.window) {
    if (t == 0) continue;
    if (a.multiplicity(t) == 1) ones.push_back(t);
    if (a.multiplicity(t) > 1) all_small = false;
  }
  if (all_small && !ones.empty() && ones.size() <= 12) {
    for (unsigned long mask = 1; mask < (1ul << ones.size()); ++mask) {
      GaugeElement<Scalar> flip;
      for (std::size_t p = 0; p < ones.size(); ++p)
        if (mask & (1ul << p))
          flip.xi[ones[p]] = -Mat::Identity(1, 1);
      best = std::min(best, detail::sup_difference(a, gauge_act(b, flip)));
    }
    const auto th = detail::phase_align(a, b, ones);
    for (unsigned long mask = 0; mask < (1ul << ones.size()); ++mask) {
      GaugeElement<Scalar> cand;
      for (std::size_t p = 0; p < ones.size(); ++p) {
        Mat m(1, 1);
        m(0, 0) = th.at(ones[p]) *
                  ((mask >> p) & 1 ? Scalar(-1) : Scalar(1));
        cand.xi[ones[p]] = m;
      }
      best = std::min(best, detail::sup_difference(a, gauge_act(b, cand)));
    }
  }

  GaugeElement<Scalar> acc;
  StructureConstants<Scalar> moved = b;
  for (int pass = 0; pass < 5; ++pass) {
    const GaugeElement<Scalar> step = detail::procrustes_pass(a, moved);
    acc = pass == 0 ? step : detail::compose(b, acc, step);
    moved = gauge_act(b, acc);
    best = std::min(best, detail::sup_difference(a, moved));
  }
  return best;
}

// Minimizing alignment found by the default window_distance search.
template <class Scalar>
GaugeElement<Scalar> procrustes_align(const StructureConstants<Scalar>& a,
                                      const StructureConstants<Scalar>& b) {
  return detail::procrustes_pass(a, b);
}

// ---------------------------------------------------------------------------
// Serialization (implemented in serialize.cpp).

struct LoadedConstants {
  StructureConstants<double> sc;
  std::vector<std::string> warnings;  // bound violations are flagged, kept
};

std::string serialize(const StructureConstants<double>& sc);
LoadedConstants deserialize(const std::string& text);
void save_constants(const std::string& path,
                    const StructureConstants<double>& sc);
LoadedConstants load_constants(const std::string& path);

}  // namespace qea
