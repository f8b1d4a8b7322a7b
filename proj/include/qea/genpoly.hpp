#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qea/errors.hpp"
#include "qea/qarith.hpp"

// Polynomial algebra O(SU_q(2)) on generators alpha (a), beta (b) with the
// defining unitary u = [[alpha, -q beta*], [beta, alpha*]].  Unitarity of u is
// equivalent to
//   alpha beta  = q beta alpha,      alpha beta* = q beta* alpha,
//   beta beta*  = beta* beta,
//   alpha* alpha + beta* beta = 1,   alpha alpha* + q^2 beta* beta = 1.
// PBW normal form: monomials alpha^k beta^l beta*^m and
// alpha*^k beta^l beta*^m (k >= 1 in the starred branch).

namespace qea {

// Packed monomial key: star branch bit | k | l | m (16 bits each for k,l,m).
struct GenMono {
  bool star = false;  // true: alpha*^k branch (k >= 1)
  int k = 0, l = 0, m = 0;

  static constexpr std::uint64_t kUnitKey = 0;

  std::uint64_t key() const {
    return (std::uint64_t(star ? 1 : 0) << 48) | (std::uint64_t(k) << 32) |
           (std::uint64_t(l) << 16) | std::uint64_t(m);
  }
  static GenMono from_key(std::uint64_t key) {
    GenMono g;
    g.star = ((key >> 48) & 1u) != 0;
    g.k = int((key >> 32) & 0xffffu);
    g.l = int((key >> 16) & 0xffffu);
    g.m = int(key & 0xffffu);
    return g;
  }
  int degree() const { return k + l + m; }
  // Torus bi-weights: left weight of alpha = +1, beta = -1, beta* = +1;
  // right weight of alpha = +1, beta = +1, beta* = -1.  Starred branch negates
  // the alpha contribution.
  int wl() const { return (star ? -k : k) - l + m; }
  int wr() const { return (star ? -k : k) + l - m; }
};

inline int gen_key_degree(std::uint64_t key) {
  return int((key >> 32) & 0xffffu) + int((key >> 16) & 0xffffu) +
         int(key & 0xffffu);
}
inline int gen_key_wl(std::uint64_t key) {
  const int k = int((key >> 32) & 0xffffu);
  const int l = int((key >> 16) & 0xffffu);
  const int m = int(key & 0xffffu);
  return (((key >> 48) & 1u) ? -k : k) - l + m;
}
inline int gen_key_wr(std::uint64_t key) {
  const int k = int((key >> 32) & 0xffffu);
  const int l = int((key >> 16) & 0xffffu);
  const int m = int(key & 0xffffu);
  return (((key >> 48) & 1u) ? -k : k) + l - m;
}

enum class Gen : int { Alpha = 0, AlphaStar = 1, Beta = 2, BetaStar = 3 };

template <class Scalar = double>
class GenPoly {
 public:
  using C = std::complex<Scalar>;
  using Map = std::map<std::uint64_t, C>;

  static constexpr double kZeroThreshold = 1e-300;

  GenPoly() = default;
  static GenPoly unit() { return mono(GenMono{}); }
  static GenPoly zero() { return GenPoly(); }
  static GenPoly mono(const GenMono& g, C c = C(1)) {
    if (g.star && g.k == 0)
      throw DomainError("GenPoly: starred branch needs k >= 1");
    GenPoly p;
    if (std::abs(c) > kZeroThreshold) p.terms_[g.key()] = c;
    return p;
  }
  static GenPoly generator(Gen g) {
    switch (g) {
      case Gen::Alpha: return mono(GenMono{false, 1, 0, 0});
      case Gen::AlphaStar: return mono(GenMono{true, 1, 0, 0});
      case Gen::Beta: return mono(GenMono{false, 0, 1, 0});
      case Gen::BetaStar: return mono(GenMono{false, 0, 0, 1});
    }
    throw DomainError("GenPoly: unknown generator");
  }

  const Map& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  int degree() const {
    int d = 0;
    for (const auto& [key, c] : terms_) d = std::max(d, gen_key_degree(key));
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

  GenPoly& operator+=(const GenPoly& o) {
    for (const auto& [key, c] : o.terms_) add_term(key, c);
    return *this;
  }
  GenPoly& operator-=(const GenPoly& o) {
    for (const auto& [key, c] : o.terms_) add_term(key, -c);
    return *this;
  }
  GenPoly& operator*=(C s) {
    if (std::abs(s) <= kZeroThreshold) {
      terms_.clear();
      return *this;
    }
    for (auto& [key, c] : terms_) c *= s;
    return *this;
  }
  friend GenPoly operator+(GenPoly x, const GenPoly& y) { return x += y; }
  friend GenPoly operator-(GenPoly x, const GenPoly& y) { return x -= y; }
  friend GenPoly operator*(GenPoly x, C s) { return x *= s; }
  friend GenPoly operator*(C s, GenPoly x) { return x *= s; }

  // Right multiplication by a single generator in normal form.  Output has at
  // most two monomials per input monomial.
  static void mono_mul_gen(std::uint64_t key, Gen g, Scalar q,
                           std::vector<std::pair<std::uint64_t, C>>& out) {
    out.clear();
    GenMono x = GenMono::from_key(key);
    switch (g) {
      case Gen::Beta:
        ++x.l;
        out.emplace_back(x.key(), C(1));
        return;
      case Gen::BetaStar:
        ++x.m;
        out.emplace_back(x.key(), C(1));
        return;
      case Gen::Alpha: {
        const Scalar ph = std::pow(q, Scalar(-(x.l + x.m)));
        if (!x.star) {
          ++x.k;
          out.emplace_back(x.key(), C(ph));
        } else {
          // alpha*^k alpha = alpha*^{k-1} (1 - beta* beta)
          GenMono y = x;
          --y.k;
          if (y.k == 0) y.star = false;
          out.emplace_back(y.key(), C(ph));
          GenMono z = y;
          ++z.l;
          ++z.m;
          out.emplace_back(z.key(), C(-ph));
        }
        return;
      }
      case Gen::AlphaStar: {
        const Scalar ph = std::pow(q, Scalar(x.l + x.m));
        if (x.star) {
          ++x.k;
          out.emplace_back(x.key(), C(ph));
        } else if (x.k == 0) {
          x.star = true;
          x.k = 1;
          out.emplace_back(x.key(), C(ph));
        } else {
          // alpha^k alpha* = alpha^{k-1} (1 - q^2 beta* beta)
          GenMono y = x;
          --y.k;
          out.emplace_back(y.key(), C(ph));
          GenMono z = y;
          ++z.l;
          ++z.m;
          out.emplace_back(z.key(), C(-ph * q * q));
        }
        return;
      }
    }
    throw DomainError("GenPoly: unknown generator");
  }

  GenPoly mul_gen(Gen g, Scalar q) const {
    GenPoly r;
    std::vector<std::pair<std::uint64_t, C>> buf;
    for (const auto& [key, c] : terms_) {
      mono_mul_gen(key, g, q, buf);
      for (const auto& [k2, c2] : buf) r.add_term(k2, c * c2);
    }
    return r;
  }

  // Right multiplication by a normal-form monomial.
  GenPoly mul_mono(const GenMono& y, Scalar q, C coeff = C(1)) const {
    GenPoly r = *this;
    const Gen head = y.star ? Gen::AlphaStar : Gen::Alpha;
    for (int i = 0; i < y.k; ++i) r = r.mul_gen(head, q);
    for (int i = 0; i < y.l; ++i) r = r.mul_gen(Gen::Beta, q);
    for (int i = 0; i < y.m; ++i) r = r.mul_gen(Gen::BetaStar, q);
    r *= coeff;
    return r;
  }

  friend GenPoly multiply(const GenPoly& x, const GenPoly& y, Scalar q) {
    GenPoly r;
    for (const auto& [ky, cy] : y.terms_) {
      GenPoly part = x.mul_mono(GenMono::from_key(ky), q, cy);
      r += part;
    }
    return r;
  }

  // Involution.  (alpha^k b^l b*^m)* = q^{k(l+m)} alpha*^k b^m b*^l and
  // (alpha*^k b^l b*^m)* = q^{-k(l+m)} alpha^k b^m b*^l; coefficients are
  // conjugated.
  GenPoly star(Scalar q) const {
    GenPoly r;
    for (const auto& [key, c] : terms_) {
      GenMono x = GenMono::from_key(key);
      GenMono y;
      y.k = x.k;
      y.l = x.m;
      y.m = x.l;
      y.star = (x.k > 0) ? !x.star : false;
      const Scalar ph =
          std::pow(q, Scalar((x.star ? -x.k : x.k) * (x.l + x.m)));
      r.add_term(y.key(), std::conj(c) * ph);
    }
    return r;
  }

  // Counit: e(alpha) = e(alpha*) = 1, e(beta) = e(beta*) = 0.
  C counit() const {
    C v(0);
    for (const auto& [key, c] : terms_) {
      GenMono x = GenMono::from_key(key);
      if (x.l == 0 && x.m == 0) v += c;
    }
    return v;
  }

  Scalar linf() const {
    Scalar v(0);
    for (const auto& [key, c] : terms_) v = std::max(v, std::abs(c));
    return v;
  }

  void prune(Scalar eps) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (std::abs(it->second) <= eps)
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  friend Scalar max_coeff_diff(const GenPoly& x, const GenPoly& y) {
    GenPoly d = x;
    d -= y;
    return d.linf();
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [key, c] : terms_) {
      GenMono x = GenMono::from_key(key);
      if (!first) os << " + ";
      first = false;
      os << "(" << c.real();
      if (c.imag() != Scalar(0)) os << (c.imag() < 0 ? "" : "+") << c.imag() << "i";
      os << ")";
      const char* head = x.star ? "as" : "a";
      if (x.k > 0) os << " " << head << "^" << x.k;
      if (x.l > 0) os << " b^" << x.l;
      if (x.m > 0) os << " bs^" << x.m;
    }
    return os.str();
  }

 private:
  Map terms_;
};

// Tensor polynomial over O(SU_q(2)) (x) O(SU_q(2)); used for the
// comultiplication.
template <class Scalar = double>
class GenTensor {
 public:
  using C = std::complex<Scalar>;
  using Key = std::pair<std::uint64_t, std::uint64_t>;
  using Map = std::map<Key, C>;

  GenTensor() = default;
  static GenTensor unit() {
    GenTensor t;
    t.terms_[{GenMono::kUnitKey, GenMono::kUnitKey}] = C(1);
    return t;
  }

  const Map& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  void add_term(const Key& key, C c) {
    auto it = terms_.find(key);
    if (it == terms_.end()) {
      if (std::abs(c) > GenPoly<Scalar>::kZeroThreshold) terms_.emplace(key, c);
    } else {
      it->second += c;
      if (std::abs(it->second) <= GenPoly<Scalar>::kZeroThreshold)
        terms_.erase(it);
    }
  }

  GenTensor& operator+=(const GenTensor& o) {
    for (const auto& [key, c] : o.terms_) add_term(key, c);
    return *this;
  }

  // Right multiplication by a pure tensor of monomials.
  GenTensor mul_tensor_mono(const GenMono& a, const GenMono& b, C coeff,
                            Scalar q) const {
    GenTensor r;
    for (const auto& [key, c] : terms_) {
      GenPoly<Scalar> pa =
          GenPoly<Scalar>::mono(GenMono::from_key(key.first)).mul_mono(a, q);
      GenPoly<Scalar> pb =
          GenPoly<Scalar>::mono(GenMono::from_key(key.second)).mul_mono(b, q);
      for (const auto& [ka, ca] : pa.terms())
        for (const auto& [kb, cb] : pb.terms())
          r.add_term({ka, kb}, c * coeff * ca * cb);
    }
    return r;
  }

  GenTensor mul(const GenTensor& o, Scalar q) const {
    GenTensor r;
    for (const auto& [key, c] : o.terms_) {
      GenTensor part = mul_tensor_mono(GenMono::from_key(key.first),
                                       GenMono::from_key(key.second), c, q);
      r += part;
    }
    return r;
  }

  GenTensor star(Scalar q) const {
    GenTensor r;
    for (const auto& [key, c] : terms_) {
      GenPoly<Scalar> sa =
          GenPoly<Scalar>::mono(GenMono::from_key(key.first)).star(q);
      GenPoly<Scalar> sb =
          GenPoly<Scalar>::mono(GenMono::from_key(key.second)).star(q);
      for (const auto& [ka, ca] : sa.terms())
        for (const auto& [kb, cb] : sb.terms())
          r.add_term({ka, kb}, std::conj(c) * ca * cb);
    }
    return r;
  }

  Scalar linf() const {
    Scalar v(0);
    for (const auto& [key, c] : terms_) v = std::max(v, std::abs(c));
    return v;
  }

  friend Scalar max_coeff_diff(const GenTensor& x, const GenTensor& y) {
    GenTensor d = x;
    for (const auto& [key, c] : y.terms_) d.add_term(key, -c);
    return d.linf();
  }

 private:
  Map terms_;
};

// Comultiplication determined by Phi(u_ij) = sum_l u_il (x) u_lj on the
// defining corepresentation:
//   Phi(alpha) = alpha (x) alpha - q beta* (x) beta
//   Phi(beta)  = beta (x) alpha + alpha* (x) beta
// extended as a *-homomorphism.
template <class Scalar>
GenTensor<Scalar> comultiply_gen(Gen g, Scalar q) {
  using T = GenTensor<Scalar>;
  using C = std::complex<Scalar>;
  T t;
  const GenMono A{false, 1, 0, 0}, AS{true, 1, 0, 0}, B{false, 0, 1, 0},
      BS{false, 0, 0, 1};
  switch (g) {
    case Gen::Alpha:
      t.add_term({A.key(), A.key()}, C(1));
      t.add_term({BS.key(), B.key()}, C(-q));
      return t;
    case Gen::Beta:
      t.add_term({B.key(), A.key()}, C(1));
      t.add_term({AS.key(), B.key()}, C(1));
      return t;
    case Gen::AlphaStar:
      t.add_term({AS.key(), AS.key()}, C(1));
      t.add_term({B.key(), BS.key()}, C(-q));
      return t;
    case Gen::BetaStar:
      t.add_term({BS.key(), AS.key()}, C(1));
      t.add_term({A.key(), BS.key()}, C(1));
      return t;
  }
  throw DomainError("comultiply_gen: unknown generator");
}

// Phi of a full polynomial.  `max_degree`, when nonnegative, guards the cost:
// inputs of higher degree raise TruncationError.
template <class Scalar>
GenTensor<Scalar> comultiply(const GenPoly<Scalar>& x, Scalar q,
                             int max_degree = -1) {
  using C = std::complex<Scalar>;
  if (max_degree >= 0 && x.degree() > max_degree)
    throw TruncationError("comultiply: polynomial degree exceeds window");
  GenTensor<Scalar> out;
  for (const auto& [key, c] : x.terms()) {
    GenMono mono = GenMono::from_key(key);
    GenTensor<Scalar> t = GenTensor<Scalar>::unit();
    const Gen head = mono.star ? Gen::AlphaStar : Gen::Alpha;
    for (int i = 0; i < mono.k; ++i) t = t.mul(comultiply_gen(head, q), q);
    for (int i = 0; i < mono.l; ++i) t = t.mul(comultiply_gen(Gen::Beta, q), q);
    for (int i = 0; i < mono.m; ++i)
      t = t.mul(comultiply_gen(Gen::BetaStar, q), q);
    for (const auto& [tk, tc] : t.terms()) out.add_term(tk, tc * c);
  }
  return out;
}

// Apply a functional to one leg of a tensor:  (phi (x) id) or (id (x) phi).
template <class Scalar, class Functional>
GenPoly<Scalar> slice(const GenTensor<Scalar>& t, Functional phi, bool first_leg) {
  GenPoly<Scalar> out;
  for (const auto& [key, c] : t.terms()) {
    const std::uint64_t applied = first_leg ? key.first : key.second;
    const std::uint64_t kept = first_leg ? key.second : key.first;
    const std::complex<Scalar> v = phi(GenMono::from_key(applied));
    if (std::abs(v) > GenPoly<Scalar>::kZeroThreshold)
      out.add_term(kept, c * v);
  }
  return out;
}

}  // namespace qea
