#include "qea/lipdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qea/errors.hpp"
#include "qea/rng.hpp"

namespace qea {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLengthCut = 1e-8;

// R3 Kronecker steps: inverse powers of the real root of x^4 = x + 1.
constexpr double kAlpha1 = 0.8191725133961645;
constexpr double kAlpha2 = 0.6710436067037893;
constexpr double kAlpha3 = 0.5497004779019703;

double frac(double x) { return x - std::floor(x); }

// Uniform map from the cube to unit quaternions, scalar part first.
so3::Vec4 shoemake(double u1, double u2, double u3) {
  const double r1 = std::sqrt(1.0 - u1);
  const double r2 = std::sqrt(u1);
  const double a = 2.0 * kPi * u2;
  const double b = 2.0 * kPi * u3;
  so3::Vec4 g;
  g << r2 * std::cos(b), r1 * std::sin(a), r1 * std::cos(a), r2 * std::sin(b);
  return g;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

double geodesic_distance(const so3::Vec4& p, const so3::Vec4& q) {
  const double c = std::min(1.0, std::abs(p.dot(q)) / (p.norm() * q.norm()));
  return 2.0 * std::acos(c);
}

GroupGrid GroupGrid::kronecker(int size, std::uint64_t seed) {
  if (size < 1) throw DomainError("GroupGrid: size must be positive");
  GroupGrid grid;
  grid.seed = seed;
  grid.points.reserve(std::size_t(size));
  Rng off_rng(seed);
  const double o1 = off_rng.uniform();
  const double o2 = off_rng.uniform();
  const double o3 = off_rng.uniform();
  for (int k = 1; k <= size; ++k) {
    grid.points.push_back(shoemake(frac(o1 + k * kAlpha1),
                                   frac(o2 + k * kAlpha2),
                                   frac(o3 + k * kAlpha3)));
  }
  // Probe estimate: the max over random probes of the distance to the
  // nearest grid point lower-bounds the covering radius.
  Rng probe_rng(seed ^ 0xa5a5a5a5a5a5a5a5ull);
  double worst = 0;
  for (int p = 0; p < 256; ++p) {
    const so3::Vec4 x = shoemake(probe_rng.uniform(), probe_rng.uniform(),
                                 probe_rng.uniform());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : grid.points)
      best = std::min(best, geodesic_distance(x, g));
    worst = std::max(worst, best);
  }
  grid.covering_radius_estimate = worst;
  return grid;
}

FuzzySphere::FuzzySphere(int n_, const GroupGrid& g) : n(n_), grid(&g) {
  if (n < 1) throw DomainError("FuzzySphere: n must be >= 1");
  reps.reserve(g.points.size());
  for (const auto& x : g.points) reps.push_back(so3::irrep(n - 1, x));
}

double op_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

double lip_norm(const FuzzySphere& B, const Eigen::MatrixXcd& b) {
  if (b.rows() != B.n || b.cols() != B.n)
    throw DomainError("lip_norm: element size does not match the sphere");
  double sup = 0;
  for (std::size_t k = 0; k < B.reps.size(); ++k) {
    const double len = length_geodesic(B.grid->points[k]);
    if (len < kLengthCut) continue;
    // (U b U* - b) U = U b - b U, so the commutator has the same norm.
    const auto& U = B.reps[k];
    sup = std::max(sup, op_norm(U * b - b * U) / len);
  }
  return sup;
}

double invariantized_lip_norm(const FuzzySphere& B, const Eigen::MatrixXcd& b,
                              int translates) {
  double sup = lip_norm(B, b);
  const std::size_t m =
      std::min<std::size_t>(std::size_t(std::max(translates, 0)),
                            B.reps.size());
  for (std::size_t k = 0; k < m; ++k)
    sup = std::max(sup, lip_norm(B, B.ad(k, b)));
  return sup;
}

std::function<double(const Eigen::MatrixXcd&)> invariantize(
    const FuzzySphere& B, int translates) {
  return [&B, translates](const Eigen::MatrixXcd& b) {
    return invariantized_lip_norm(B, b, translates);
  };
}

RadiusReport radius_checks(const FuzzySphere& B, int samples,
                           std::uint64_t seed, double rhat) {
  RadiusReport rep;
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Eigen::MatrixXcd b = rng.hermitian(B.n);
    const double dev = op_norm(b - B.omega(b) * B.unit());
    const double L = lip_norm(B, b);
    double ratio = 0;
    if (L > 0)
      ratio = dev / (2.0 * rhat * L);
    else if (dev > 1e-12)
      ratio = std::numeric_limits<double>::infinity();
    rep.count += 1;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio > 1.0 && rep.pass) {
      rep.pass = false;
      rep.witness = b;
    }
  }
  return rep;
}

GraphPoint graph_point(const FuzzySphere& B, const Eigen::MatrixXcd& b,
                       int leg_points) {
  GraphPoint p;
  p.head = b;
  const std::size_t m =
      std::min<std::size_t>(std::size_t(std::max(leg_points, 0)),
                            B.reps.size());
  p.legs.reserve(m);
  for (std::size_t k = 0; k < m; ++k) p.legs.push_back(B.ad(k, b));
  return p;
}

double graph_norm(const GraphPoint& p) {
  double nrm = op_norm(p.head);
  for (const auto& leg : p.legs) nrm = std::max(nrm, op_norm(leg));
  return nrm;
}

std::vector<Eigen::MatrixXcd> isotypic_hermitians(int n, int l) {
  if (n < 1 || l < 0 || l > n - 1)
    throw DomainError("isotypic_hermitians: need 0 <= l <= n - 1");
  const int two_j = n - 1;
  auto tensor = [&](int m) {
    // Wigner-Eckart pattern: entry (a, b) couples the column weight with
    // (l, m) into the row weight.
    Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        t(a, b) = so3::cg(two_j, 2 * l, two_j, two_j - 2 * b, 2 * m,
                          two_j - 2 * a);
    return t;
  };
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(std::size_t(2 * l + 1));
  out.push_back(tensor(0));
  for (int m = 1; m <= l; ++m) {
    const Eigen::MatrixXcd t = tensor(m);
    out.push_back(0.5 * (t + t.adjoint()));
    out.push_back((t - t.adjoint()) / std::complex<double>(0, 2));
  }
  return out;
}

namespace {

// Lip-ball samples: the zero element (always in the ball), the canonical
// isotypic Hermitians normalized to L = 1, and seeded random traceless
// Hermitian directions.  Depends only on (seed, n) so that the two sides
// of the estimator are exchangeable.
std::vector<Eigen::MatrixXcd> ball_samples(const FuzzySphere& B,
                                           int random_samples,
                                           std::uint64_t seed) {
  std::vector<Eigen::MatrixXcd> out;
  out.push_back(Eigen::MatrixXcd::Zero(B.n, B.n));
  for (int l = 1; l <= B.n - 1; ++l)
    for (const auto& t : isotypic_hermitians(B.n, l)) {
      const double L = lip_norm(B, t);
      if (L > 1e-12) out.push_back(t / L);
    }
  Rng rng(seed ^ (0x9e3779b97f4a7c15ull * std::uint64_t(B.n)));
  for (int s = 0; s < random_samples; ++s) {
    Eigen::MatrixXcd h = rng.hermitian(B.n);
    h -= B.omega(h) * B.unit();
    const double L = lip_norm(B, h);
    if (L > 1e-12) out.push_back(h / L);
  }
  return out;
}

}  // namespace

DistanceEstimate dist_e_estimate(const FuzzySphere& B1, const FuzzySphere& B2,
                                 const std::string& mode, int random_samples,
                                 std::uint64_t seed, int leg_points,
                                 bool identity_embedding) {
  if (mode != "dist_e" && mode != "dist_nu")
    throw DomainError("dist_e_estimate: unknown mode " + mode);
  if (B1.grid != B2.grid)
    throw DomainError("dist_e_estimate: spheres must share a grid");
  if (identity_embedding && B1.n != B2.n)
    throw DomainError("dist_e_estimate: identity embedding needs n1 == n2");

  // Order the sides by n; the per-side samples depend only on (seed, n),
  // so swapping the arguments reruns the same arithmetic bit for bit.
  const FuzzySphere* S1 = &B1;
  const FuzzySphere* S2 = &B2;
  if (S2->n < S1->n) std::swap(S1, S2);

  const auto samples1 = ball_samples(*S1, random_samples, seed);
  const auto samples2 = ball_samples(*S2, random_samples, seed);

  const std::size_t legs =
      mode == "dist_e"
          ? std::min<std::size_t>(std::size_t(std::max(leg_points, 0)),
                                  S1->reps.size())
          : 0;

  const Eigen::MatrixXcd id1 = Eigen::MatrixXcd::Identity(S1->n, S1->n);
  const Eigen::MatrixXcd id2 = Eigen::MatrixXcd::Identity(S2->n, S2->n);
  std::vector<Eigen::MatrixXcd> E1, E2;
  E1.reserve(samples1.size());
  for (const auto& b : samples1)
    E1.push_back(identity_embedding ? b : kron(b, id2));
  E2.reserve(samples2.size());
  for (const auto& c : samples2)
    E2.push_back(identity_embedding ? c : kron(id1, c));

  // Conjugators implementing the action on C at the leg points.
  std::vector<Eigen::MatrixXcd> W;
  W.reserve(legs);
  for (std::size_t k = 0; k < legs; ++k)
    W.push_back(identity_embedding ? S1->reps[k]
                                   : kron(S1->reps[k], S2->reps[k]));

  Eigen::MatrixXd D(E1.size(), E2.size());
  for (std::size_t i = 0; i < E1.size(); ++i)
    for (std::size_t j = 0; j < E2.size(); ++j) {
      const Eigen::MatrixXcd x = E1[i] - E2[j];
      double d = op_norm(x);
      for (const auto& w : W) d = std::max(d, op_norm(w * x * w.adjoint()));
      D(Eigen::Index(i), Eigen::Index(j)) = d;
    }

  const double h1 = D.rowwise().minCoeff().maxCoeff();
  const double h2 = D.colwise().minCoeff().maxCoeff();

  DistanceEstimate est;
  est.value = std::max(h1, h2);
  est.mode = mode;
  est.n1 = B1.n;
  est.n2 = B2.n;
  const bool kept_order = (S1 == &B1);
  est.samples_1 = int(kept_order ? samples1.size() : samples2.size());
  est.samples_2 = int(kept_order ? samples2.size() : samples1.size());
  est.leg_points = int(legs);
  est.seed = seed;
  est.identity_embedding = identity_embedding;
  if (identity_embedding)
    est.embedding = "identity into M_" + std::to_string(S1->n);
  else
    est.embedding = "M_" + std::to_string(S1->n) + " (x) M_" +
                    std::to_string(S2->n) + ", b (x) 1 vs 1 (x) c";
  return est;
}

}  // namespace qea
