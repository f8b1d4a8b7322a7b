// Podles sphere at polynomial level for every parameter t in
//   T_q = {c(1), c(2), ...} ∪ [0, 1],   c(n) = -q^{2n}/(1+q^{2n})^2.
//
// Generators a = a*, b with
//   b a = q^2 a b,
//   b* b = t + a - a^2           (t <= 0)        b b* = t + q^2 a - q^4 a^2
//   b* b = t^2 + (1-t^2) a - a^2 (0 <= t <= 1)   b b* = t^2 + (1-t^2) q^2 a - q^4 a^2
//
// PBW normal form: a^k b^l and a^k b*^l.  The coaction into the quantum
// SU(2) function algebra is
//   sigma(a)  = a (x) 1 + c_t (x) b*b + b* (x) a*b + b (x) b*a
//   sigma(b)  = -q b* (x) b^2 + c_t (x) ab + b (x) a^2
//   sigma(b*) = sigma(b)^(* (x) *)
// with c_t = s_t 1 - (1+q^2) a, s_t = 1 (t <= 0) or 1 - t^2 (t >= 0).
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qea/errors.hpp"
#include "qea/genpoly.hpp"
#include "qea/gramutil.hpp"
#include "qea/haar.hpp"
#include "qea/matrixcoeffs.hpp"
#include "qea/qarith.hpp"

namespace qea {

struct PodMono {
  bool bstar = false;  // true: a^k b*^l branch (l >= 1)
  int k = 0;
  int l = 0;

  static constexpr std::uint64_t kUnitKey = 0;

  std::uint64_t key() const {
    return (std::uint64_t(bstar ? 1 : 0) << 32) | (std::uint64_t(k) << 16) |
           std::uint64_t(l);
  }
  static PodMono from_key(std::uint64_t key) {
    PodMono p;
    p.bstar = ((key >> 32) & 1u) != 0;
    p.k = int((key >> 16) & 0xffffu);
    p.l = int(key & 0xffffu);
    return p;
  }
  int degree() const { return k + l; }
  // Torus weight carried by the second coaction leg: every tensor term of
  // sigma(x) has right weight equal to weight(x).
  int weight() const { return bstar ? -2 * l : 2 * l; }
};

inline int pod_key_degree(std::uint64_t key) {
  return int((key >> 16) & 0xffffu) + int(key & 0xffffu);
}
inline int pod_key_weight(std::uint64_t key) {
  const int l = int(key & 0xffffu);
  return ((key >> 32) & 1u) ? -2 * l : 2 * l;
}

enum class PodRegime { Discrete, Continuous };

// Locates t inside T_q and fixes the rewrite data for that fibre.
template <class Scalar = double>
struct PodlesParam {
  QParam<Scalar> qp;
  Scalar t;
  PodRegime regime;
  int n = 0;  // level of the discrete point c(n); 0 in the continuous regime

  std::array<Scalar, 3> bsb{};  // b*b  = bsb[0] + bsb[1] a + bsb[2] a^2
  std::array<Scalar, 3> bbs{};  // b b* = bbs[0] + bbs[1] a + bbs[2] a^2
  Scalar ct_scalar{};           // c_t = ct_scalar 1 - (1+q^2) a

  PodlesParam(const QParam<Scalar>& qp_, Scalar t_) : qp(qp_), t(t_) {
    const Scalar q2 = qp.q * qp.q;
    // The discrete points c(n) < 0 accumulate at 0, so [0,1] is tried first:
    // a t within dispatch tolerance of both 0 and some deep c(n) is treated
    // as the continuous fibre (the two are numerically indistinguishable).
    if (t >= -Scalar(tol::t_dispatch) && t <= Scalar(1) + Scalar(tol::t_dispatch)) {
      regime = PodRegime::Continuous;
      t = std::min(std::max(t, Scalar(0)), Scalar(1));
    } else {
      regime = PodRegime::Discrete;
      n = 0;
      for (int level = 1; level <= 200; ++level) {
        if (std::abs(t - podles_c(level, qp)) <= Scalar(tol::t_dispatch)) {
          n = level;
          t = podles_c(level, qp);
          break;
        }
      }
      if (n == 0) throw DomainError("PodlesParam: t is not in T_q");
    }
    if (regime == PodRegime::Discrete) {
      bsb = {t, Scalar(1), Scalar(-1)};
      bbs = {t, q2, -q2 * q2};
      ct_scalar = Scalar(1);
    } else {
      bsb = {t * t, Scalar(1) - t * t, Scalar(-1)};
      bbs = {t * t, (Scalar(1) - t * t) * q2, -q2 * q2};
      ct_scalar = Scalar(1) - t * t;
    }
  }
};

enum class PodGen : int { A = 0, B = 1, BStar = 2 };

template <class Scalar = double>
class PodlesPoly {
 public:
  using C = std::complex<Scalar>;
  using Map = std::map<std::uint64_t, C>;

  static constexpr double kZeroThreshold = 1e-300;

  PodlesPoly() = default;
  static PodlesPoly unit() { return mono(PodMono{}); }
  static PodlesPoly zero() { return PodlesPoly(); }
  static PodlesPoly mono(const PodMono& p, C c = C(1)) {
    if (p.bstar && p.l == 0)
      throw DomainError("PodlesPoly: b* branch needs l >= 1");
    PodlesPoly x;
    if (std::abs(c) > kZeroThreshold) x.terms_[p.key()] = c;
    return x;
  }
  static PodlesPoly generator(PodGen g) {
    switch (g) {
      case PodGen::A: return mono(PodMono{false, 1, 0});
      case PodGen::B: return mono(PodMono{false, 0, 1});
      case PodGen::BStar: return mono(PodMono{true, 0, 1});
    }
    throw DomainError("PodlesPoly: unknown generator");
  }

  const Map& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  int degree() const {
    int d = 0;
    for (const auto& [key, c] : terms_) d = std::max(d, pod_key_degree(key));
    return d;
  }

  void add_term(std::uint64_t key, C c) {
    auto it = terms_.find(key);
    if (it == terms_.end()) {
      if (std::abs(c) > kZeroThreshold) terms_.emplace(key, c);
    } else {
      it->second += c;
      if (std::abs(it->second) <= kZeroThreshold) terms_.erase(it);
    }
  }

  PodlesPoly& operator+=(const PodlesPoly& o) {
    for (const auto& [key, c] : o.terms_) add_term(key, c);
    return *this;
  }
  PodlesPoly& operator-=(const PodlesPoly& o) {
    for (const auto& [key, c] : o.terms_) add_term(key, -c);
    return *this;
  }
  PodlesPoly& operator*=(C s) {
    if (std::abs(s) <= kZeroThreshold) {
      terms_.clear();
      return *this;
    }
    for (auto& [key, c] : terms_) c *= s;
    return *this;
  }
  friend PodlesPoly operator+(PodlesPoly x, const PodlesPoly& y) { return x += y; }
  friend PodlesPoly operator-(PodlesPoly x, const PodlesPoly& y) { return x -= y; }
  friend PodlesPoly operator*(PodlesPoly x, C s) { return x *= s; }
  friend PodlesPoly operator*(C s, PodlesPoly x) { return x *= s; }

  // Right multiplication of a normal-form monomial by one generator.
  static void mono_mul_gen(std::uint64_t key, PodGen g,
                           const PodlesParam<Scalar>& par,
                           std::map<std::uint64_t, C>& out, C coeff) {
    const PodMono x = PodMono::from_key(key);
    const Scalar q = par.qp.q;
    auto emit = [&out](bool bstar, int k, int l, C c) {
      if (l == 0) bstar = false;
      const PodMono m{bstar, k, l};
      auto it = out.find(m.key());
      if (it == out.end())
        out.emplace(m.key(), c);
      else
        it->second += c;
    };
    switch (g) {
      case PodGen::A: {
        // b^l a = q^{2l} a b^l,  b*^l a = q^{-2l} a b*^l
        const Scalar ph = std::pow(q, Scalar(x.bstar ? -2 * x.l : 2 * x.l));
        emit(x.bstar, x.k + 1, x.l, coeff * ph);
        return;
      }
      case PodGen::B: {
        if (!x.bstar) {
          emit(false, x.k, x.l + 1, coeff);
          return;
        }
        // a^k b*^l b = a^k b*^{l-1} (b* b);  then move the a-polynomial left:
        // b*^{l-1} a^j = q^{-2j(l-1)} a^j b*^{l-1}
        for (int j = 0; j < 3; ++j) {
          if (par.bsb[std::size_t(j)] == Scalar(0)) continue;
          const Scalar ph = std::pow(q, Scalar(-2 * j * (x.l - 1)));
          emit(true, x.k + j, x.l - 1, coeff * par.bsb[std::size_t(j)] * ph);
        }
        return;
      }
      case PodGen::BStar: {
        if (x.bstar) {
          emit(true, x.k, x.l + 1, coeff);
          return;
        }
        if (x.l == 0) {
          emit(true, x.k, 1, coeff);
          return;
        }
        // a^k b^l b* = a^k b^{l-1} (b b*);  b^{l-1} a^j = q^{2j(l-1)} a^j b^{l-1}
        for (int j = 0; j < 3; ++j) {
          if (par.bbs[std::size_t(j)] == Scalar(0)) continue;
          const Scalar ph = std::pow(q, Scalar(2 * j * (x.l - 1)));
          emit(false, x.k + j, x.l - 1, coeff * par.bbs[std::size_t(j)] * ph);
        }
        return;
      }
    }
    throw DomainError("PodlesPoly: unknown generator");
  }

  PodlesPoly mul_gen(PodGen g, const PodlesParam<Scalar>& par) const {
    PodlesPoly out;
    std::map<std::uint64_t, C> acc;
    for (const auto& [key, c] : terms_) mono_mul_gen(key, g, par, acc, c);
    for (const auto& [key, c] : acc) out.add_term(key, c);
    return out;
  }

  PodlesPoly mul_mono(const PodMono& y, const PodlesParam<Scalar>& par,
                      C coeff = C(1)) const {
    PodlesPoly out = *this;
    out *= coeff;
    for (int i = 0; i < y.k; ++i) out = out.mul_gen(PodGen::A, par);
    const PodGen tail = y.bstar ? PodGen::BStar : PodGen::B;
    for (int i = 0; i < y.l; ++i) out = out.mul_gen(tail, par);
    return out;
  }

  friend PodlesPoly multiply(const PodlesPoly& x, const PodlesPoly& y,
                             const PodlesParam<Scalar>& par) {
    PodlesPoly out;
    for (const auto& [key, c] : y.terms())
      out += x.mul_mono(PodMono::from_key(key), par, c);
    return out;
  }

  // (a^k b^l)* = q^{-2kl} a^k b*^l,  (a^k b*^l)* = q^{+2kl} a^k b^l.
  PodlesPoly star(Scalar q) const {
    PodlesPoly out;
    for (const auto& [key, c] : terms_) {
      const PodMono x = PodMono::from_key(key);
      const Scalar ph = std::pow(q, Scalar((x.bstar ? 2 : -2) * x.k * x.l));
      const PodMono sx{x.l > 0 && !x.bstar, x.k, x.l};
      out.add_term(sx.key(), std::conj(c) * ph);
    }
    return out;
  }

  Scalar linf() const {
    Scalar m(0);
    for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }
  void prune(Scalar eps) {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = std::abs(it->second) <= eps ? terms_.erase(it) : std::next(it);
  }
  friend Scalar max_coeff_diff(const PodlesPoly& x, const PodlesPoly& y) {
    Scalar m(0);
    for (const auto& [key, c] : x.terms_) {
      auto it = y.terms_.find(key);
      m = std::max(m, std::abs(it == y.terms_.end() ? c : c - it->second));
    }
    for (const auto& [key, c] : y.terms_)
      if (x.terms_.find(key) == x.terms_.end()) m = std::max(m, std::abs(c));
    return m;
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [key, c] : terms_) {
      const PodMono x = PodMono::from_key(key);
      if (!first) os << " + ";
      first = false;
      os << "(";
      if (std::abs(c.imag()) > 1e-14)
        os << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i";
      else
        os << c.real();
      os << ")";
      if (x.k > 0) os << " a^" << x.k;
      if (x.l > 0) os << (x.bstar ? " bs^" : " b^") << x.l;
    }
    return os.str();
  }

 private:
  Map terms_;
};

// Parses a word over {a, b, b*} (whitespace allowed) into normal form.
template <class Scalar = double>
PodlesPoly<Scalar> normalize(const std::string& word,
                             const PodlesParam<Scalar>& par) {
  PodlesPoly<Scalar> out = PodlesPoly<Scalar>::unit();
  for (std::size_t i = 0; i < word.size(); ++i) {
    const char ch = word[i];
    if (ch == ' ' || ch == '\t') continue;
    if (ch == 'a') {
      out = out.mul_gen(PodGen::A, par);
    } else if (ch == 'b') {
      if (i + 1 < word.size() && word[i + 1] == '*') {
        out = out.mul_gen(PodGen::BStar, par);
        ++i;
      } else {
        out = out.mul_gen(PodGen::B, par);
      }
    } else {
      throw ParseError(std::string("normalize: unexpected character '") + ch +
                       "'");
    }
  }
  return out;
}

// Element of (Podles sphere) (x) (quantum SU(2) function algebra), stored as
// a sparse map from sphere monomials to second-leg polynomials.
template <class Scalar = double>
class PodTensor {
 public:
  using C = std::complex<Scalar>;
  using Leg = GenPoly<Scalar>;
  using Map = std::map<std::uint64_t, Leg>;

  PodTensor() = default;
  static PodTensor unit() {
    PodTensor t;
    t.legs_[PodMono::kUnitKey] = Leg::unit();
    return t;
  }

  const Map& legs() const { return legs_; }
  bool empty() const { return legs_.empty(); }

  void add(std::uint64_t podkey, const Leg& y) {
    auto it = legs_.find(podkey);
    if (it == legs_.end())
      legs_.emplace(podkey, y);
    else
      it->second += y;
    tidy(podkey);
  }
  void add_term(std::uint64_t podkey, std::uint64_t genkey, C c) {
    legs_[podkey].add_term(genkey, c);
    tidy(podkey);
  }

  PodTensor& operator+=(const PodTensor& o) {
    for (const auto& [key, leg] : o.legs_) add(key, leg);
    return *this;
  }
  PodTensor& operator-=(const PodTensor& o) {
    for (const auto& [key, leg] : o.legs_) {
      Leg neg = leg;
      neg *= C(-1);
      add(key, neg);
    }
    return *this;
  }

  PodTensor mul(const PodTensor& o, const PodlesParam<Scalar>& par) const {
    PodTensor out;
    const Scalar q = par.qp.q;
    for (const auto& [k1, y1] : legs_)
      for (const auto& [k2, y2] : o.legs_) {
        const PodlesPoly<Scalar> prod =
            PodlesPoly<Scalar>::mono(PodMono::from_key(k1))
                .mul_mono(PodMono::from_key(k2), par);
        const Leg y = multiply(y1, y2, q);
        for (const auto& [pk, pc] : prod.terms()) {
          Leg scaled = y;
          scaled *= pc;
          out.add(pk, scaled);
        }
      }
    return out;
  }

  PodTensor star(const PodlesParam<Scalar>& par) const {
    PodTensor out;
    const Scalar q = par.qp.q;
    for (const auto& [key, y] : legs_) {
      const PodlesPoly<Scalar> sx =
          PodlesPoly<Scalar>::mono(PodMono::from_key(key)).star(q);
      const Leg sy = y.star(q);
      for (const auto& [pk, pc] : sx.terms()) {
        Leg scaled = sy;
        scaled *= pc;
        out.add(pk, scaled);
      }
    }
    return out;
  }

  Scalar linf() const {
    Scalar m(0);
    for (const auto& [key, y] : legs_) m = std::max(m, y.linf());
    return m;
  }
  friend Scalar max_coeff_diff(const PodTensor& x, const PodTensor& y) {
    Scalar m(0);
    for (const auto& [key, leg] : x.legs_) {
      auto it = y.legs_.find(key);
      m = std::max(m, it == y.legs_.end() ? leg.linf()
                                          : max_coeff_diff(leg, it->second));
    }
    for (const auto& [key, leg] : y.legs_)
      if (x.legs_.find(key) == x.legs_.end()) m = std::max(m, leg.linf());
    return m;
  }

 private:
  void tidy(std::uint64_t podkey) {
    auto it = legs_.find(podkey);
    if (it != legs_.end() && it->second.empty()) legs_.erase(it);
  }
  Map legs_;
};

// Applies a linear functional to the second leg.
template <class Scalar, class Functional>
PodlesPoly<Scalar> slice_pod(const PodTensor<Scalar>& t, Functional phi) {
  PodlesPoly<Scalar> out;
  for (const auto& [podkey, leg] : t.legs()) {
    const std::complex<Scalar> v = phi(leg);
    if (std::abs(v) > PodlesPoly<Scalar>::kZeroThreshold)
      out.add_term(podkey, v);
  }
  return out;
}

template <class Scalar = double>
PodTensor<Scalar> coact_gen(PodGen g, const PodlesParam<Scalar>& par) {
  using T = PodTensor<Scalar>;
  using C = std::complex<Scalar>;
  const Scalar q = par.qp.q;
  const std::uint64_t kA = PodMono{false, 1, 0}.key();
  const std::uint64_t kB = PodMono{false, 0, 1}.key();
  const std::uint64_t kBS = PodMono{true, 0, 1}.key();
  const std::uint64_t kUnit = PodMono::kUnitKey;
  const GenMono A{false, 1, 0, 0}, AS{true, 1, 0, 0};
  T t;
  auto add_ct = [&](const GenMono& leg, C c) {
    // c_t = ct_scalar 1 - (1+q^2) a
    t.add_term(kUnit, leg.key(), c * par.ct_scalar);
    t.add_term(kA, leg.key(), -c * (Scalar(1) + q * q));
  };
  switch (g) {
    case PodGen::A:
      t.add_term(kA, GenMono{}.key(), C(1));
      add_ct(GenMono{false, 0, 1, 1}, C(1));           // b*b in PBW form
      t.add_term(kBS, GenMono{true, 1, 1, 0}.key(), C(1));   // a* b
      t.add_term(kB, GenMono{false, 1, 0, 1}.key(), C(1) / q);  // b* a = q^{-1} a b*
      return t;
    case PodGen::B:
      t.add_term(kBS, GenMono{false, 0, 2, 0}.key(), C(-q));
      add_ct(GenMono{false, 1, 1, 0}, C(1));
      t.add_term(kB, GenMono{false, 2, 0, 0}.key(), C(1));
      return t;
    case PodGen::BStar:
      t.add_term(kB, GenMono{false, 0, 0, 2}.key(), C(-q));
      add_ct(GenMono{true, 1, 0, 1}, C(q));
      t.add_term(kBS, GenMono{true, 2, 0, 0}.key(), C(1));
      return t;
  }
  throw DomainError("coact_gen: unknown generator");
}

template <class Scalar = double>
struct SpectralBasis {
  int two_j_max = 0;
  std::map<int, int> mult;  // two_j -> multiplicity inside the window
  // rows[two_j][k][i] = e_{gamma,k+1,i+1}, k < mult, i < 2j+1
  std::map<int, std::vector<std::vector<PodlesPoly<Scalar>>>> rows;
};

template <class Scalar = double>
class PodlesEngine {
 public:
  using C = std::complex<Scalar>;
  using Poly = PodlesPoly<Scalar>;
  using Tensor = PodTensor<Scalar>;

  PodlesEngine(const PodlesParam<Scalar>& par, CorepCache<Scalar>& cqg)
      : par_(par), cqg_(cqg) {
    if (std::abs(par.qp.q - cqg.qparam().q) > Scalar(0))
      throw DomainError("PodlesEngine: q mismatch with corepresentation cache");
  }

  const PodlesParam<Scalar>& param() const { return par_; }
  CorepCache<Scalar>& cqg() { return cqg_; }

  const Tensor& coact_mono(std::uint64_t podkey) {
    auto it = cache_.find(podkey);
    if (it != cache_.end()) return it->second;
    const PodMono x = PodMono::from_key(podkey);
    Tensor t = Tensor::unit();
    for (int i = 0; i < x.k; ++i) t = t.mul(coact_gen(PodGen::A, par_), par_);
    const PodGen tail = x.bstar ? PodGen::BStar : PodGen::B;
    for (int i = 0; i < x.l; ++i) t = t.mul(coact_gen(tail, par_), par_);
    // Torus bookkeeping certification: in sigma(x) = sum x_i (x) y_i every
    // monomial of y_i has right weight weight(x) and left weight weight(x_i).
    // invariant_state relies on this to recognize exact zeros.
    for (const auto& [pk, leg] : t.legs())
      for (const auto& [gk, c] : leg.terms())
        if (gen_key_wr(gk) != x.weight() ||
            gen_key_wl(gk) != pod_key_weight(pk))
          throw PrecisionError("coact_mono: weight bookkeeping violated");
    return cache_.emplace(podkey, std::move(t)).first->second;
  }

  Tensor coact(const Poly& x) {
    Tensor out;
    for (const auto& [key, c] : x.terms()) {
      const Tensor& t = coact_mono(key);
      for (const auto& [podkey, leg] : t.legs()) {
        auto scaled = leg;
        scaled *= c;
        out.add(podkey, scaled);
      }
    }
    return out;
  }

  // omega(x) 1 = (id (x) h) sigma(x).  Monomials a^k b^l (l >= 1) contribute
  // exactly zero: every second leg of their coaction carries right weight
  // +-2l (certified in coact_mono) and the Haar state vanishes off weight
  // zero in closed form.  Pure a-powers are evaluated honestly once and
  // cached, including the scalar-recognition assertion.
  C invariant_state(const Poly& x) {
    C out(0);
    for (const auto& [key, c] : x.terms()) {
      const PodMono m = PodMono::from_key(key);
      if (m.l == 0) out += c * omega_pow_a(m.k);
    }
    return out;
  }

  // Unpruned evaluation used by audits: assembles the full coaction tensor.
  C invariant_state_full(const Poly& x) {
    const auto& h = cqg_.haar();
    const Poly r = slice_pod(coact(x), [&](const GenPoly<Scalar>& leg) {
      return h(leg);
    });
    C scalar(0);
    Scalar off(0);
    for (const auto& [key, c] : r.terms()) {
      if (key == PodMono::kUnitKey)
        scalar = c;
      else
        off = std::max(off, std::abs(c));
    }
    const Scalar scale = std::max(Scalar(1), x.linf());
    if (off > Scalar(tol::scalar_rec) * scale)
      throw PrecisionError("invariant_state: non-scalar residual");
    return scalar;
  }

  // E^gamma(x) = sum_i E^gamma_{ii}(x), the isotypic projection.
  Poly isotypic_project(int two_j, const Poly& x) {
    Poly out;
    for (int i = 0; i <= two_j; ++i) out += spectral_project(two_j, i, i, x);
    return out;
  }

  // E^gamma_{ij}(x) = (id (x) rho^gamma_{ij}) sigma(x).
  Poly spectral_project(int two_j, int i, int j, const Poly& x) {
    const Scalar q = par_.qp.q;
    if (two_j == 0) {
      Poly out = Poly::unit();
      out *= invariant_state(x);
      return out;
    }
    const GenPoly<Scalar>& rho = cqg_.rho_element(two_j, i, j);
    const auto& h = cqg_.haar();
    return slice_pod(coact(x), [&](const GenPoly<Scalar>& leg) {
      return h(multiply(leg, rho, q));
    });
  }

  // Builds standard bases for all spins 2j <= two_j_max from monomials of
  // degree <= deg.  The sphere's spin-j subspace is generated in degree j,
  // so the default two_j_max/2 + 2 exceeds the top window spin by two;
  // exhaustion is certified by a saturation check at deg + 1 and by the
  // coaction residual on each basis row.  Keeping deg small matters: the
  // spectral projections normal-order coaction legs of degree 2*deg, which
  // is numerically safe only up to degree ~ 10.
  SpectralBasis<Scalar> standard_basis(int two_j_max, int deg = -1) {
    if (deg < 0) deg = two_j_max / 2 + 2;
    SpectralBasis<Scalar> basis;
    basis.two_j_max = two_j_max;

    // Spectral projections never raise the sphere degree, so everything below
    // lives in the span of monomials of degree <= deg + 1.  Work there with
    // the omega metric K_{ij} = omega(m_i^* m_j).
    const std::vector<std::uint64_t> monos1 = monomials_up_to(deg + 1);
    const int nm = int(monos1.size());
    std::map<std::uint64_t, int> idx;
    for (int i = 0; i < nm; ++i) idx.emplace(monos1[std::size_t(i)], i);
    MatX K(nm, nm);
    for (int i = 0; i < nm; ++i) {
      const Poly si =
          Poly::mono(PodMono::from_key(monos1[std::size_t(i)])).star(par_.qp.q);
      for (int j = 0; j < nm; ++j)
        K(i, j) = invariant_state(
            si.mul_mono(PodMono::from_key(monos1[std::size_t(j)]), par_));
    }
    K = ((K + K.adjoint()) / Scalar(2)).eval();

    for (int two_j = 0; two_j <= two_j_max; ++two_j) {
      MatX cand1(nm, nm);
      int ncut = 0;
      for (int j = 0; j < nm; ++j) {
        cand1.col(j) = vectorize(
            spectral_project(two_j, 0, 0,
                             Poly::mono(PodMono::from_key(monos1[std::size_t(j)]))),
            idx);
        if (pod_key_degree(monos1[std::size_t(j)]) <= deg) ++ncut;
      }
      // The saturation check compares ranks over source degree <= deg and
      // <= deg + 1.
      MatX cand(nm, ncut);
      {
        int c = 0;
        for (int j = 0; j < nm; ++j)
          if (pod_key_degree(monos1[std::size_t(j)]) <= deg)
            cand.col(c++) = cand1.col(j);
      }
      const Scalar kref = K.diagonal().real().maxCoeff();
      const int r = gram_rank(cand.adjoint() * K * cand, kref, "standard_basis");
      if (gram_rank(cand1.adjoint() * K * cand1, kref, "standard_basis") != r)
        throw TruncationError(
            "standard_basis: degree window does not exhaust the spectral "
            "subspace");
      basis.mult[two_j] = r;
      if (r == 0) {
        basis.rows[two_j] = {};
        continue;
      }

      std::vector<Poly> heads;
      for (const auto& v : metric_orthonormalize(cand, K, r, kref, "standard_basis"))
        heads.push_back(devectorize(v, monos1));
      if (two_j == 0) {
        // Convention e_{gamma_0,1,1} = 1.  The computed head must agree with
        // the unit up to roundoff before snapping.
        if (r != 1)
          throw PrecisionError("standard_basis: trivial spin multiplicity != 1");
        if (max_coeff_diff(heads[0], Poly::unit()) > Scalar(1e-8))
          throw PrecisionError("standard_basis: trivial head is not the unit");
        heads[0] = Poly::unit();
      }

      const int d = two_j + 1;
      std::vector<std::vector<Poly>> rows;
      for (int k = 0; k < r; ++k) {
        std::vector<Poly> row(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
          row[std::size_t(i)] =
              i == 0 ? heads[std::size_t(k)]
                     : spectral_project(two_j, i, 0, heads[std::size_t(k)]);
        rows.push_back(std::move(row));
      }
      certify_rows(two_j, rows);
      basis.rows[two_j] = std::move(rows);
    }
    return basis;
  }

  std::vector<std::uint64_t> monomials_up_to(int deg) const {
    std::vector<std::uint64_t> keys;
    for (int k = 0; k <= deg; ++k)
      for (int l = 0; k + l <= deg; ++l) {
        keys.push_back(PodMono{false, k, l}.key());
        if (l >= 1) keys.push_back(PodMono{true, k, l}.key());
      }
    return keys;
  }

 private:
  using MatX =
      Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
  using VecX = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

  VecX vectorize(const Poly& x, const std::map<std::uint64_t, int>& idx) const {
    VecX v = VecX::Zero(Eigen::Index(idx.size()));
    for (const auto& [key, c] : x.terms()) {
      auto it = idx.find(key);
      if (it == idx.end())
        throw TruncationError("standard_basis: projection left the monomial span");
      v[it->second] = c;
    }
    return v;
  }
  Poly devectorize(const VecX& v, const std::vector<std::uint64_t>& monos) const {
    Poly x;
    for (int i = 0; i < v.size(); ++i)
      x.add_term(monos[std::size_t(i)], C(v[i]));
    return x;
  }

  // sigma(e_{ki}) must equal sum_j e_{kj} (x) u_{ji}.
  void certify_rows(int two_j, const std::vector<std::vector<Poly>>& rows) {
    const auto& u = cqg_.corep(two_j);
    const int d = two_j + 1;
    for (const auto& row : rows)
      for (int i = 0; i < d; ++i) {
        Tensor expect;
        for (int j = 0; j < d; ++j)
          for (const auto& [pk, pc] : row[std::size_t(j)].terms()) {
            auto leg = u(j, i);
            leg *= pc;
            expect.add(pk, leg);
          }
        Tensor got = coact(row[std::size_t(i)]);
        got -= expect;
        if (got.linf() > Scalar(tol::certify))
          throw PrecisionError("standard_basis: coaction residual on basis row");
      }
  }

  // ---- stable moments of a ------------------------------------------------
  //
  // omega(a^k) = h(unit-leg of sigma(a)^k).  Normal-ordering the second legs
  // inflates coefficients like q^{-k^2} with exact cancellations that double
  // precision cannot survive past k ~ 6.  Instead the legs act on the
  // faithful representation of the function algebra on l2(N x Z),
  //   alpha e_{n,m} = sqrt(1-q^{2n}) e_{n-1,m},   beta e_{n,m} = q^n e_{n,m+1},
  // where every word has amplitude <= 1 and
  //   h(x) = (1-q^2) sum_n q^{2n} <e_{n,0}, x e_{n,0}>.
  // The scalar-recognition assertion (all non-unit legs have vanishing h)
  // is evaluated the same way.

  struct CoTerm {
    std::uint64_t podkey;
    std::array<Gen, 2> word;  // operator composition; word[wlen-1] acts first
    int wlen;
    C coeff;
  };
  std::vector<CoTerm> coact_a_words() const {
    const Scalar q = par_.qp.q;
    const std::uint64_t kU = PodMono::kUnitKey;
    const std::uint64_t kA = PodMono{false, 1, 0}.key();
    const std::uint64_t kB = PodMono{false, 0, 1}.key();
    const std::uint64_t kBS = PodMono{true, 0, 1}.key();
    return {
        {kA, {Gen::Alpha, Gen::Alpha}, 0, C(1)},
        {kU, {Gen::BetaStar, Gen::Beta}, 2, C(par_.ct_scalar)},
        {kA, {Gen::BetaStar, Gen::Beta}, 2, C(-(Scalar(1) + q * q))},
        {kBS, {Gen::AlphaStar, Gen::Beta}, 2, C(1)},
        {kB, {Gen::BetaStar, Gen::Alpha}, 2, C(1)},
    };
  }

  using LatticeVec = std::map<std::pair<int, int>, C>;

  LatticeVec apply_gen(const LatticeVec& v, Gen g) const {
    const Scalar q = par_.qp.q;
    LatticeVec out;
    for (const auto& [nm, c] : v) {
      const auto [n, m] = nm;
      switch (g) {
        case Gen::Alpha:
          if (n > 0)
            out[{n - 1, m}] +=
                c * std::sqrt(Scalar(1) - std::pow(q, Scalar(2 * n)));
          break;
        case Gen::AlphaStar:
          out[{n + 1, m}] +=
              c * std::sqrt(Scalar(1) - std::pow(q, Scalar(2 * n + 2)));
          break;
        case Gen::Beta:
          out[{n, m + 1}] += c * std::pow(q, Scalar(n));
          break;
        case Gen::BetaStar:
          out[{n, m - 1}] += c * std::pow(q, Scalar(n));
          break;
      }
    }
    return out;
  }

  void build_omega_table(int kmax) {
    const Scalar q = par_.qp.q;
    const auto terms = coact_a_words();
    Scalar cmass(0);
    for (const auto& t : terms) cmass += std::abs(t.coeff);
    // Tail bound: |<e_n0| leg |e_n0>| <= (l1 mass) <= cmass^k, so truncating
    // the geometric sum at N leaves at most q^{2(N+1)} cmass^kmax.
    int N = 0;
    while (std::pow(q, Scalar(2 * (N + 1))) * std::pow(cmass, Scalar(kmax)) >
           Scalar(1e-16))
      ++N;

    std::map<int, C> acc_unit;
    std::map<std::pair<int, std::uint64_t>, C> acc_off;
    for (int k = 0; k <= kmax; ++k) acc_unit[k] = k == 0 ? C(1) : C(0);

    for (int n = 0; n <= N; ++n) {
      const Scalar wn =
          (Scalar(1) - q * q) * std::pow(q, Scalar(2 * n));
      std::map<std::uint64_t, LatticeVec> state;
      state[PodMono::kUnitKey][{n, 0}] = C(1);
      for (int k = 1; k <= kmax; ++k) {
        std::map<std::uint64_t, LatticeVec> next;
        for (const auto& t : terms)
          for (const auto& [pk, psi] : state) {
            LatticeVec wpsi = psi;
            for (int w = t.wlen - 1; w >= 0; --w)
              wpsi = apply_gen(wpsi, t.word[std::size_t(w)]);
            const auto prod =
                Poly::mono(PodMono::from_key(t.podkey))
                    .mul_mono(PodMono::from_key(pk), par_);
            for (const auto& [pk2, pc] : prod.terms()) {
              LatticeVec& dst = next[pk2];
              const C f = t.coeff * pc;
              for (const auto& [nm, c] : wpsi) dst[nm] += f * c;
            }
          }
        state = std::move(next);
        for (const auto& [pk, psi] : state) {
          auto it = psi.find({n, 0});
          if (it == psi.end()) continue;
          if (pk == PodMono::kUnitKey)
            acc_unit[k] += wn * it->second;
          else
            acc_off[{k, pk}] += wn * it->second;
        }
      }
    }
    for (const auto& [key, v] : acc_off)
      if (std::abs(v) > Scalar(tol::scalar_rec))
        throw PrecisionError("invariant_state: non-scalar residual");
    omega_a_ = std::move(acc_unit);
    omega_kmax_ = kmax;
  }

  C omega_pow_a(int k) {
    if (k > omega_kmax_) build_omega_table(k + 4);
    return omega_a_.at(k);
  }

  PodlesParam<Scalar> par_;
  CorepCache<Scalar>& cqg_;
  std::map<std::uint64_t, Tensor> cache_;
  std::map<int, C> omega_a_{{0, C(1)}};
  int omega_kmax_ = 0;
};

// Finite-dimensional fibre at t = c(n): a is the diagonal chain
// a_k = q^{2(n-1-k)}/(1+q^{2n}), b the weighted shift b e_k = w_k e_{k+1}
// with w_k = sqrt(a_k - a_k^2 + c(n)) and w_{n-1} = 0.
template <class Scalar = double>
struct PodlesMatrixModel {
  using CMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
  int n = 0;
  PodlesParam<Scalar> par;
  CMat a, b;
  Corep<Scalar> u;  // spin (n-1)/2 corepresentation driving sigma = Ad_u
  IrrepConstants<Scalar> cst;

  // Invariant state of the conjugation action x -> u (x (x) 1) u^*.  Averaging
  // that action with the Haar state gives the Peter-Weyl weights, i.e. the
  // normalized trace twisted by the inverse corep metric.
  std::complex<Scalar> omega(const CMat& x) const {
    std::complex<Scalar> s(0);
    for (int k = 0; k < n; ++k) s += x(k, k) / cst.F[k];
    return s / cst.M;
  }

  // sigma(x) = u (x (x) 1) u^* as an n x n matrix of coefficient polynomials.
  using PolyMat = Eigen::Matrix<GenPoly<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
  PolyMat sigma(const CMat& x) const {
    const Scalar q = par.qp.q;
    PolyMat out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        GenPoly<Scalar> acc;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            if (std::abs(x(k, l)) == Scalar(0)) continue;
            GenPoly<Scalar> term = multiply(u(i, k), u(j, l).star(q), q);
            term *= std::complex<Scalar>(x(k, l));
            acc += term;
          }
        out(i, j) = acc;
      }
    return out;
  }
};

// Basis ordering convention: a = diag(q^{2k}) / (1 + q^{2n}) decreasing along
// the diagonal and b a weighted superdiagonal shift, b e_k = v_k e_{k-1}.
// This ordering (and no other) makes x -> u (x (x) 1) u^* intertwine the
// defining coaction through the evaluation a -> a, b -> b.  Both boundary
// weights v_0 and v_n vanish identically at t = c(n).
template <class Scalar = double>
PodlesMatrixModel<Scalar> matrix_model(int n, CorepCache<Scalar>& cqg) {
  using CMat = typename PodlesMatrixModel<Scalar>::CMat;
  if (n < 1) throw DomainError("matrix_model: n >= 1 required");
  const QParam<Scalar>& qp = cqg.qparam();
  const Scalar q = qp.q;
  const Scalar t = podles_c(n, qp);
  PodlesMatrixModel<Scalar> m{n, PodlesParam<Scalar>(qp, t), CMat::Zero(n, n),
                              CMat::Zero(n, n), cqg.corep(n - 1),
                              cqg.constants(n - 1)};
  const Scalar q2n = std::pow(q, Scalar(2 * n));
  for (int k = 0; k < n; ++k)
    m.a(k, k) = std::pow(q, Scalar(2 * k)) / (Scalar(1) + q2n);
  for (int k = 1; k < n; ++k) {
    const Scalar ak = std::real(m.a(k, k));
    const Scalar w2 = ak - ak * ak + t;
    if (w2 < -Scalar(tol::algebraic))
      throw PrecisionError("matrix_model: shift weight is not positive");
    m.b(k - 1, k) = std::sqrt(std::max(w2, Scalar(0)));
  }
  // Certify the defining relations.
  const CMat I = CMat::Identity(n, n);
  const CMat p1 = t * I + m.a - m.a * m.a;
  const CMat p2 = t * I + q * q * m.a - std::pow(q, Scalar(4)) * m.a * m.a;
  const Scalar r1 = (m.b.adjoint() * m.b - p1).template lpNorm<Eigen::Infinity>();
  const Scalar r2 = (m.b * m.b.adjoint() - p2).template lpNorm<Eigen::Infinity>();
  const Scalar r3 = (m.b * m.a - q * q * m.a * m.b).template lpNorm<Eigen::Infinity>();
  if (std::max({r1, r2, r3}) > Scalar(1e-10))
    throw PrecisionError("matrix_model: defining relations fail");
  return m;
}

}  // namespace qea
