#include "qea/so3.hpp"

#include <array>
#include <cmath>
#include <complex>

#include "qea/errors.hpp"

namespace qea::so3 {

namespace {

long double fact(int n) {
  static const std::array<long double, 64> table = [] {
    std::array<long double, 64> t{};
    t[0] = 1.0L;
    for (std::size_t i = 1; i < t.size(); ++i)
      t[i] = t[i - 1] * static_cast<long double>(i);
    return t;
  }();
  if (n < 0 || n >= int(table.size()))
    throw DomainError("so3: factorial argument out of range");
  return table[std::size_t(n)];
}

}  // namespace

double cg(int two_j1, int two_j2, int two_j, int two_m1, int two_m2,
          int two_m) {
  if (two_j1 < 0 || two_j2 < 0 || two_j < 0)
    throw DomainError("so3::cg: negative spin");
  if (((two_j1 + two_m1) | (two_j2 + two_m2) | (two_j + two_m)) & 1)
    throw DomainError("so3::cg: parity mismatch between spin and weight");
  if (two_m1 + two_m2 != two_m) return 0.0;
  if (two_j < std::abs(two_j1 - two_j2) || two_j > two_j1 + two_j2) return 0.0;
  if (std::abs(two_m1) > two_j1 || std::abs(two_m2) > two_j2 ||
      std::abs(two_m) > two_j)
    return 0.0;

  const int a1 = (two_j1 + two_m1) / 2, a2 = (two_j1 - two_m1) / 2;
  const int b1 = (two_j2 + two_m2) / 2, b2 = (two_j2 - two_m2) / 2;
  const int c1 = (two_j + two_m) / 2, c2 = (two_j - two_m) / 2;
  const int jj1 = (two_j1 + two_j2 - two_j) / 2;
  const int jj2 = (two_j1 - two_j2 + two_j) / 2;
  const int jj3 = (-two_j1 + two_j2 + two_j) / 2;
  const int jsum1 = (two_j1 + two_j2 + two_j) / 2 + 1;

  // Racah's closed form.
  const int d4_base = (two_j - two_j2 + two_m1) / 2;
  const int d5_base = (two_j - two_j1 - two_m2) / 2;
  const int kmin = std::max({0, -d4_base, -d5_base});
  const int kmax = std::min({jj1, a2, b1});
  long double sum = 0.0L;
  for (int k = kmin; k <= kmax; ++k) {
    const long double den = fact(k) * fact(jj1 - k) * fact(a2 - k) *
                            fact(b1 - k) * fact(d4_base + k) *
                            fact(d5_base + k);
    sum += ((k & 1) ? -1.0L : 1.0L) / den;
  }
  const long double pre =
      std::sqrt(static_cast<long double>(two_j + 1) * fact(jj1) * fact(jj2) *
                fact(jj3) / fact(jsum1) * fact(a1) * fact(a2) * fact(b1) *
                fact(b2) * fact(c1) * fact(c2));
  return double(pre * sum);
}

Eigen::MatrixXd cg_matrix(int two_j1, int two_j2, int two_j) {
  const int d1 = two_j1 + 1, d2 = two_j2 + 1, d = two_j + 1;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d1 * d2, d);
  for (int i = 0; i < d1; ++i)
    for (int k = 0; k < d2; ++k)
      for (int n = 0; n < d; ++n)
        C(i * d2 + k, n) = cg(two_j1, two_j2, two_j, two_j1 - 2 * i,
                              two_j2 - 2 * k, two_j - 2 * n);
  return C;
}

Mat jz(int two_j) {
  const int d = two_j + 1;
  Mat J = Mat::Zero(d, d);
  for (int n = 0; n < d; ++n) J(n, n) = 0.5 * (two_j - 2 * n);
  return J;
}

Mat jplus(int two_j) {
  const int d = two_j + 1;
  Mat J = Mat::Zero(d, d);
  for (int n = 1; n < d; ++n)
    J(n - 1, n) = std::sqrt(double(n) * double(two_j - n + 1));
  return J;
}

Mat jminus(int two_j) { return jplus(two_j).adjoint(); }

Mat jx(int two_j) { return 0.5 * (jplus(two_j) + jminus(two_j)); }

Mat jy(int two_j) {
  return std::complex<double>(0, -0.5) * (jplus(two_j) - jminus(two_j));
}

Mat irrep(int two_j, const Vec4& g) {
  const int d = two_j + 1;
  const double w = g[0];
  Eigen::Vector3d v = g.tail<3>();
  const double s = v.norm();
  if (s < 1e-300) {
    const double sign = (w < 0 && (two_j & 1)) ? -1.0 : 1.0;
    return sign * Mat::Identity(d, d);
  }
  const double theta = 2.0 * std::atan2(s, w);
  v /= s;
  Mat H = v[0] * jx(two_j) + v[1] * jy(two_j) + v[2] * jz(two_j);
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  Eigen::VectorXcd phases(d);
  for (int i = 0; i < d; ++i)
    phases[i] =
        std::exp(std::complex<double>(0, -theta * es.eigenvalues()[i]));
  return es.eigenvectors() * phases.asDiagonal() *
         es.eigenvectors().adjoint();
}

double rotation_angle(const Vec4& g) {
  const double w = std::min(1.0, std::abs(g[0]) / g.norm());
  return 2.0 * std::acos(w);
}

double character(int two_j, const Vec4& g) {
  const Eigen::Vector3d v = g.tail<3>();
  const double x = std::atan2(v.norm(), g[0]);  // half the SU(2) angle
  const double sx = std::sin(x);
  if (std::abs(sx) < 1e-8)
    return (two_j + 1) * std::cos((two_j + 1) * x) / std::cos(x);
  return std::sin((two_j + 1) * x) / sx;
}

}  // namespace qea::so3
