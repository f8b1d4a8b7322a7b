#pragma once

#include <Eigen/Dense>

// Classical spin machinery: Clebsch-Gordan coefficients (Condon-Shortley
// phases), spin matrices, and finite-dimensional irreps of SU(2) evaluated on
// unit quaternions.  Spins and weights are passed doubled (two_j = 2j) so that
// half-integer cases stay integral.
//
// Basis convention everywhere: index n = 0..two_j runs over m = j - n, i.e.
// weights descend along the basis.

namespace qea::so3 {

using Mat = Eigen::MatrixXcd;
using Vec4 = Eigen::Vector4d;

// <j1 m1 j2 m2 | j m>.  Returns 0 outside the coupling range or when
// m1 + m2 != m; throws DomainError on parity-inconsistent arguments.
double cg(int two_j1, int two_j2, int two_j, int two_m1, int two_m2,
          int two_m);

// Coupling isometry V_j -> V_{j1} (x) V_{j2}: rows indexed by (m1, m2) pairs
// with m1 descending outer and m2 descending inner, columns by m descending.
Eigen::MatrixXd cg_matrix(int two_j1, int two_j2, int two_j);

Mat jz(int two_j);
Mat jplus(int two_j);
Mat jminus(int two_j);
Mat jx(int two_j);
Mat jy(int two_j);

// g = (w, x, y, z) with w = cos(t/2) and (x, y, z) = sin(t/2) nhat; returns
// pi_j(g) = exp(-i t nhat . J).  Unimodular up to normalization of g.
Mat irrep(int two_j, const Vec4& g);

// SO(3) rotation angle of g, in [0, pi].  Vanishes exactly on +-1.
double rotation_angle(const Vec4& g);

// SU(2) character chi_j(g) = sin((2j+1) t/2) / sin(t/2).
double character(int two_j, const Vec4& g);

}  // namespace qea::so3
