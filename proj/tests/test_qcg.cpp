#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

#include "qea/qcg.hpp"
#include "qea/so3.hpp"

using namespace qea;
using Mat = Eigen::MatrixXd;

TEST_CASE("spin 1/2 x 1/2 blocks at q = 1/2") {
  QParam<double> qp(0.5);
  QcgCache<double> cg(qp);
  const double q = qp.q;

  const auto& singlet = cg.coupling(1, 1, 0);
  // basis rows: (up,up), (up,down), (down,up), (down,down)
  const double n0 = std::sqrt(1 + q * q);
  CHECK(singlet(0, 0) == doctest::Approx(0.0));
  CHECK(singlet(1, 0) == doctest::Approx(1.0 / n0));
  CHECK(singlet(2, 0) == doctest::Approx(-q / n0));
  CHECK(singlet(3, 0) == doctest::Approx(0.0));

  const auto& triplet = cg.coupling(1, 1, 2);
  CHECK(triplet(0, 0) == doctest::Approx(1.0));
  CHECK(triplet(1, 1) == doctest::Approx(q / n0));
  CHECK(triplet(2, 1) == doctest::Approx(1.0 / n0));
  CHECK(triplet(3, 2) == doctest::Approx(1.0));
}

TEST_CASE("decomposition is unitary") {
  for (double q : {0.3, 0.5, 0.9}) {
    QParam<double> qp(q);
    QcgCache<double> cg(qp);
    for (int two_j1 : {1, 2, 3})
      for (int two_j2 : {1, 2, 3}) {
        const int D = (two_j1 + 1) * (two_j2 + 1);
        const auto& dec = cg.decomposition(two_j1, two_j2);
        Mat U(D, D);
        int col = 0;
        for (const auto& [two_j, C] : dec) {
          U.middleCols(col, C.cols()) = C;
          col += int(C.cols());
        }
        REQUIRE(col == D);
        CHECK((U.transpose() * U - Mat::Identity(D, D)).cwiseAbs().maxCoeff() <
              tol::cg_unitarity);
      }
  }
}

TEST_CASE("blocks intertwine the deformed raising and lowering operators") {
  QParam<double> qp(0.4);
  QcgCache<double> cg(qp);
  for (int two_j1 : {1, 2, 3})
    for (int two_j2 : {1, 2}) {
      const Mat E1 = uq_raise(two_j1, qp), E2 = uq_raise(two_j2, qp);
      const Mat K1 = uq_kdiag(two_j1, qp, 1).asDiagonal();
      const Mat K2inv = uq_kdiag(two_j2, qp, -1).asDiagonal();
      Mat dE = Eigen::kroneckerProduct(E1, K2inv).eval() +
               Eigen::kroneckerProduct(K1, E2).eval();
      Mat dF = Eigen::kroneckerProduct(E1.transpose(), K2inv).eval() +
               Eigen::kroneckerProduct(K1, E2.transpose()).eval();
      for (const auto& [two_j, C] : cg.decomposition(two_j1, two_j2)) {
        const Mat Ej = uq_raise(two_j, qp);
        CHECK((dE * C - C * Ej).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((dF * C - C * Ej.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
}

TEST_CASE("q -> 1 recovers the Condon-Shortley matrices") {
  QParam<double> qp(0.999);
  QcgCache<double> cg(qp);
  for (int two_j1 : {1, 2, 3, 4})
    for (int two_j2 : {1, 2, 3}) {
      for (const auto& [two_j, C] : cg.decomposition(two_j1, two_j2)) {
        Mat classical = so3::cg_matrix(two_j1, two_j2, two_j);
        CHECK((C - classical).cwiseAbs().maxCoeff() < 1e-2);
      }
    }
}

TEST_CASE("q-integer entries degrade gracefully in long double") {
  QParam<long double> qp(0.5L);
  auto blocks = QcgCache<long double>::build(qp, 1, 1);
  CHECK(blocks.size() == 2);
  CHECK(std::abs(blocks.at(0)(1, 0) - 1.0L / std::sqrt(1.25L)) < 1e-17L);
}
