#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qea/so3.hpp"

// Classical SU(2) metric machinery at desk scale: a deterministic group
// grid, the translation Lip-norm on fuzzy spheres, invariantization, the
// radius inequality, and a sampled coaction-graph Hausdorff estimator of
// the distance between two fuzzy spheres.  Everything is seeded and
// single-path so reruns are byte-identical.

namespace qea {

// Geodesic length on SU(2) quotiented by the center: the SO(3) rotation
// angle in [0, pi].  Subadditive, inverse-symmetric, and vanishing exactly
// on +-1, which the adjoint action does not see.
inline double length_geodesic(const so3::Vec4& g) {
  return so3::rotation_angle(g);
}

// Geodesic distance between two unit quaternions seen in SO(3).  The scalar
// part of p conj(q) is the 4-vector dot product, so no quaternion algebra
// is needed.
double geodesic_distance(const so3::Vec4& p, const so3::Vec4& q);

// Deterministic quasi-uniform sample of SU(2): the R3 Kronecker sequence in
// the cube pushed through the Shoemake map.  Prefixes nest, so a larger
// grid with the same seed contains the smaller one and grid sups are
// monotone in the size.  The covering radius estimate is a seeded probe
// lower bound in the geodesic metric, recorded for reporting.
struct GroupGrid {
  std::vector<so3::Vec4> points;
  std::uint64_t seed = 0;
  double covering_radius_estimate = 0;

  static GroupGrid kronecker(int size, std::uint64_t seed);
};

// M_n with the adjoint action of the spin-(n-1)/2 irrep and the normalized
// trace as invariant state.  Irrep images over the grid are cached; the
// grid must outlive the sphere.
struct FuzzySphere {
  using Mat = Eigen::MatrixXcd;

  int n = 1;
  const GroupGrid* grid = nullptr;
  std::vector<Mat> reps;

  FuzzySphere(int n_, const GroupGrid& g);

  Mat ad(std::size_t k, const Mat& b) const {
    return reps[k] * b * reps[k].adjoint();
  }
  std::complex<double> omega(const Mat& b) const {
    return b.trace() / double(n);
  }
  Mat unit() const { return Mat::Identity(n, n); }
};

// Operator norm (largest singular value).
double op_norm(const Eigen::MatrixXcd& m);

// Translation Lip-norm L(b) = sup over the grid of |Ad_x(b) - b| / l(x)
// with the geodesic length.  Points with length below the degeneracy cut
// (the center) are skipped.  The formula applies verbatim to non-Hermitian
// b, and L(b*) = L(b) since the action is a *-isometry.
double lip_norm(const FuzzySphere& B, const Eigen::MatrixXcd& b);

// Invariantized norm L'(b) = sup over translates y of L(Ad_y(b)), the grid
// realization of the sup over states.  The translate set is the identity
// together with the first `translates` grid points; since the identity is
// always included, L' >= L holds exactly rather than within grid tolerance.
double invariantized_lip_norm(const FuzzySphere& B, const Eigen::MatrixXcd& b,
                              int translates);

// Evaluator form of the above, closing over B (which must outlive it).
std::function<double(const Eigen::MatrixXcd&)> invariantize(
    const FuzzySphere& B, int translates);

// Checks |b - omega(b) 1| <= 2 rhat L(b) on seeded random Hermitian
// elements.  rhat is a documented upper bound for the radius of the state
// space in the induced metric; for the geodesic length every point-state
// distance is at most pi, hence the default.
struct RadiusReport {
  int count = 0;
  double max_ratio = 0;  // worst |b - omega(b)1| / (2 rhat L(b))
  bool pass = true;
  Eigen::MatrixXcd witness;  // set on the first failure
};

RadiusReport radius_checks(const FuzzySphere& B, int samples,
                           std::uint64_t seed,
                           double rhat = 3.14159265358979323846);

// Coaction graph of b sampled over a grid prefix: the element together with
// its orbit Ad_x(b) at the first leg_points grid points.
struct GraphPoint {
  Eigen::MatrixXcd head;
  std::vector<Eigen::MatrixXcd> legs;
};

GraphPoint graph_point(const FuzzySphere& B, const Eigen::MatrixXcd& b,
                       int leg_points);

// Norm of a graph point in the direct sum: max of the head norm and the
// sup of the leg norms.
double graph_norm(const GraphPoint& p);

// Canonical spin-l Hermitian tensor operators on M_n built from classical
// Clebsch-Gordan coefficients: the m = 0 component plus real and imaginary
// combinations for m = 1..l.  Returns 2l + 1 matrices, traceless for
// l >= 1.  Requires 0 <= l <= n - 1.
std::vector<Eigen::MatrixXcd> isotypic_hermitians(int n, int l);

// Sampled coaction-graph Hausdorff estimate between two fuzzy spheres over
// a shared grid.  The common algebra is C = M_{n1} (x) M_{n2} with the
// unital embeddings b |-> b (x) 1 and c |-> 1 (x) c; when n1 == n2 and
// identity_embedding is requested, C = M_n with both embeddings the
// identity.  Each Lip-ball is sampled by the canonical isotypic Hermitian
// elements normalized to L = 1, the zero element, and seeded random
// traceless directions; mode "dist_e" takes per pair the max of the
// C-coordinate norm and the orbit-leg sup over a grid prefix, "dist_nu"
// keeps the C-coordinate alone, so dist_e >= dist_nu holds exactly on the
// shared samples.  The value approximates the Hausdorff term of this one
// admissible C: an estimate of an upper bound, never a certified bound.
struct DistanceEstimate {
  double value = 0;
  std::string mode;       // "dist_e" or "dist_nu"
  std::string embedding;  // human-readable description of C
  int n1 = 0, n2 = 0;
  int samples_1 = 0, samples_2 = 0;
  int leg_points = 0;
  std::uint64_t seed = 0;
  bool identity_embedding = false;
  bool certified = false;  // always false: sampled estimate
};

DistanceEstimate dist_e_estimate(const FuzzySphere& B1, const FuzzySphere& B2,
                                 const std::string& mode, int random_samples,
                                 std::uint64_t seed, int leg_points = 64,
                                 bool identity_embedding = false);

}  // namespace qea
