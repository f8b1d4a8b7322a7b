#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

#include "qea/errors.hpp"
#include "qea/rng.hpp"
#include "qea/so3.hpp"

using namespace qea;
namespace s3 = qea::so3;

TEST_CASE("Clebsch-Gordan textbook values") {
  const double r2 = std::sqrt(0.5), r3 = 1.0 / std::sqrt(3.0);
  // 1/2 x 1/2
  CHECK(s3::cg(1, 1, 2, 1, 1, 2) == doctest::Approx(1.0));
  CHECK(s3::cg(1, 1, 2, 1, -1, 0) == doctest::Approx(r2));
  CHECK(s3::cg(1, 1, 2, -1, 1, 0) == doctest::Approx(r2));
  CHECK(s3::cg(1, 1, 0, 1, -1, 0) == doctest::Approx(r2));
  CHECK(s3::cg(1, 1, 0, -1, 1, 0) == doctest::Approx(-r2));
  // 1 x 1/2
  CHECK(s3::cg(2, 1, 3, 2, -1, 1) == doctest::Approx(r3));
  CHECK(s3::cg(2, 1, 3, 0, 1, 1) == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s3::cg(2, 1, 1, 2, -1, 1) == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(s3::cg(2, 1, 1, 0, 1, 1) == doctest::Approx(-r3));
  // 1 x 1
  CHECK(s3::cg(2, 2, 4, 2, 0, 2) == doctest::Approx(r2));
  CHECK(s3::cg(2, 2, 2, 2, 0, 2) == doctest::Approx(r2));
  CHECK(s3::cg(2, 2, 2, 0, 2, 2) == doctest::Approx(-r2));
  CHECK(s3::cg(2, 2, 0, 2, -2, 0) == doctest::Approx(r3));
  CHECK(s3::cg(2, 2, 0, 0, 0, 0) == doctest::Approx(-r3));
  // selection rules
  CHECK(s3::cg(2, 2, 2, 2, 2, 4) == 0.0);
  CHECK(s3::cg(2, 1, 5, 2, 1, 3) == 0.0);
  CHECK_THROWS_AS(s3::cg(2, 1, 3, 1, 0, 1), DomainError);
}

TEST_CASE("coupling matrices are isometries with orthogonal ranges") {
  for (int two_j1 : {1, 2, 3})
    for (int two_j2 : {1, 2}) {
      for (int two_j = std::abs(two_j1 - two_j2); two_j <= two_j1 + two_j2;
           two_j += 2) {
        auto C = s3::cg_matrix(two_j1, two_j2, two_j);
        CHECK((C.transpose() * C - Eigen::MatrixXd::Identity(two_j + 1,
                                                             two_j + 1))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
        for (int two_jp = std::abs(two_j1 - two_j2); two_jp < two_j;
             two_jp += 2) {
          auto Cp = s3::cg_matrix(two_j1, two_j2, two_jp);
          CHECK((Cp.transpose() * C).cwiseAbs().maxCoeff() < 1e-12);
        }
      }
    }
}

TEST_CASE("coupling matrices intertwine the spin operators") {
  for (int two_j1 : {1, 2})
    for (int two_j2 : {1, 2})
      for (int two_j = std::abs(two_j1 - two_j2); two_j <= two_j1 + two_j2;
           two_j += 2) {
        const int d1 = two_j1 + 1, d2 = two_j2 + 1;
        auto C = s3::cg_matrix(two_j1, two_j2, two_j).cast<std::complex<double>>().eval();
        auto I1 = s3::Mat::Identity(d1, d1).eval();
        auto I2 = s3::Mat::Identity(d2, d2).eval();
        for (auto op : {&s3::jz, &s3::jplus, &s3::jx}) {
          s3::Mat big = Eigen::kroneckerProduct(op(two_j1), I2).eval() +
                        Eigen::kroneckerProduct(I1, op(two_j2)).eval();
          CHECK((big * C - C * op(two_j)).cwiseAbs().maxCoeff() < 1e-10);
        }
      }
}

TEST_CASE("spin matrix commutators") {
  for (int two_j : {1, 2, 3, 4}) {
    auto X = s3::jx(two_j), Y = s3::jy(two_j), Z = s3::jz(two_j);
    const std::complex<double> i(0, 1);
    CHECK((X * Y - Y * X - i * Z).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((Y * Z - Z * Y - i * X).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((Z * X - X * Z - i * Y).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("irrep is a unitary homomorphism") {
  Rng rng(77);
  auto random_quat = [&] {
    s3::Vec4 g;
    for (int i = 0; i < 4; ++i) g[i] = rng.gaussian();
    g.normalize();
    return g;
  };
  // quaternion product (w, v): (w1 w2 - v1.v2, w1 v2 + w2 v1 + v1 x v2)
  auto qmul = [](const s3::Vec4& a, const s3::Vec4& b) {
    s3::Vec4 c;
    Eigen::Vector3d va = a.tail<3>(), vb = b.tail<3>();
    c[0] = a[0] * b[0] - va.dot(vb);
    c.tail<3>() = a[0] * vb + b[0] * va + va.cross(vb);
    return c;
  };
  for (int two_j : {1, 2, 3}) {
    const int d = two_j + 1;
    for (int rep = 0; rep < 5; ++rep) {
      auto g1 = random_quat(), g2 = random_quat();
      auto U1 = s3::irrep(two_j, g1), U2 = s3::irrep(two_j, g2);
      CHECK((U1 * U1.adjoint() - s3::Mat::Identity(d, d)).cwiseAbs().maxCoeff() <
            1e-10);
      CHECK((U1 * U2 - s3::irrep(two_j, qmul(g1, g2))).cwiseAbs().maxCoeff() <
            1e-9);
    }
  }
  // center: -1 acts by (-1)^{2j}
  s3::Vec4 minus_one(-1, 0, 0, 0);
  CHECK((s3::irrep(1, minus_one) + s3::Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((s3::irrep(2, minus_one) - s3::Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("rotation angle and character") {
  s3::Vec4 one(1, 0, 0, 0), minus_one(-1, 0, 0, 0);
  CHECK(s3::rotation_angle(one) == 0.0);
  CHECK(s3::rotation_angle(minus_one) == 0.0);
  const double t = 1.3;
  s3::Vec4 g(std::cos(t / 2), 0, 0, std::sin(t / 2));
  CHECK(s3::rotation_angle(g) == doctest::Approx(t));
  // character = trace of the irrep
  for (int two_j : {1, 2, 3, 4})
    CHECK(s3::character(two_j, g) ==
          doctest::Approx(s3::irrep(two_j, g).trace().real()).epsilon(1e-10));
  CHECK(s3::character(2, one) == doctest::Approx(3.0));
  CHECK(s3::character(1, minus_one) == doctest::Approx(-2.0));
}
