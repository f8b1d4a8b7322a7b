#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qea/qarith.hpp"

using namespace qea;

// Frozen oracle values, evaluated by hand from the definitions before the
// implementation existed:
//   [n]_q = (q^-n - q^n)/(q^-1 - q)
//   [2]_{1/2} = (2 - 1/2)/(2 - 1/2) * ... = 3.75/1.5 = 2.5
//   [3]_{1/2} = (8 - 1/8)/1.5 = 5.25
//   c(1)|_{q=1/2} = -(1/4)/(1+1/4)^2 = -0.16

TEST_CASE("q_int frozen values") {
  QParam<double> q(0.5);
  CHECK(q_int(0, q) == doctest::Approx(0.0));
  CHECK(q_int(1, q) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q_int(2, q) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(q_int(3, q) == doctest::Approx(5.25).epsilon(1e-14));
  for (double qq : {0.3, 0.7, 0.9}) {
    QParam<double> p(qq);
    CHECK(q_int(1, p) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("q_int recursion [2][n] = [n+1] + [n-1]") {
  for (double qq : {0.3, 0.5, 0.9}) {
    QParam<double> p(qq);
    for (int n = 1; n <= 10; ++n) {
      CHECK(q_int(2, p) * q_int(n, p) ==
            doctest::Approx(q_int(n + 1, p) + q_int(n - 1, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("QParam rejects invalid q") {
  CHECK_THROWS_AS(QParam<double>(0.0), DomainError);
  CHECK_THROWS_AS(QParam<double>(1.0), DomainError);
  CHECK_THROWS_AS(QParam<double>(1.5), DomainError);
  CHECK_NOTHROW(QParam<double>(-0.5));
}

TEST_CASE("irrep constants at j=1/2, q=0.5") {
  QParam<double> q(0.5);
  IrrepConstants<double> c(1, q);
  CHECK(c.d == 2);
  CHECK(c.M == doctest::Approx(2.5).epsilon(1e-14));
  REQUIRE(c.F.size() == 2);
  CHECK(c.F[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(c.F[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(c.N == 3);  // floor(6.25/2)
}

TEST_CASE("irrep constants at j=1, q=0.5") {
  QParam<double> q(0.5);
  IrrepConstants<double> c(2, q);
  CHECK(c.d == 3);
  CHECK(c.M == doctest::Approx(5.25).epsilon(1e-14));
  CHECK(c.F.maxCoeff() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(c.norm_bound == doctest::Approx(std::sqrt(21.0)).epsilon(1e-14));
}

TEST_CASE("Tr F = Tr F^{-1} = M") {
  for (double qq : {0.3, 0.5, 0.9}) {
    QParam<double> p(qq);
    for (int two_j = 0; two_j <= 8; ++two_j) {
      IrrepConstants<double> c(two_j, p);
      double tr = 0, tri = 0;
      for (int n = 0; n < c.d; ++n) {
        tr += c.F[n];
        tri += 1.0 / c.F[n];
      }
      CHECK(std::abs(tr - c.M) <= tol::trace * std::abs(c.M));
      CHECK(std::abs(tri - c.M) <= tol::trace * std::abs(c.M));
      CHECK(double(c.M) == doctest::Approx(double(q_int(two_j + 1, p))));
    }
  }
}

TEST_CASE("podles c(n) frozen value and monotonicity") {
  QParam<double> q(0.5);
  CHECK(podles_c(1, q) == doctest::Approx(-0.16).epsilon(1e-14));
  for (int n = 1; n < 6; ++n) CHECK(podles_c(n, q) < podles_c(n + 1, q));
  CHECK(podles_c(6, q) < 0.0);
  CHECK_THROWS_AS(podles_c(0, q), DomainError);
}

TEST_CASE("tq_points layout") {
  QParam<double> q(0.5);
  auto pts = tq_points(q, 2, 3);
  REQUIRE(pts.size() == 5);
  CHECK(pts[0] == doctest::Approx(-0.16));
  CHECK(pts[1] == doctest::Approx(podles_c(2, q)));
  CHECK(pts[2] == doctest::Approx(0.0));
  CHECK(pts[3] == doctest::Approx(0.5));
  CHECK(pts[4] == doctest::Approx(1.0));
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i - 1] < pts[i]);
}

TEST_CASE("long double instantiation") {
  QParam<long double> q(0.5L);
  CHECK(double(q_int(3, q)) == doctest::Approx(5.25));
  IrrepConstants<long double> c(2, q);
  CHECK(double(c.M) == doctest::Approx(5.25));
}
