#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <complex>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "qea/action_model.hpp"
#include "qea/rng.hpp"
#include "qea/structconst.hpp"

using namespace qea;
using Cx = std::complex<double>;

namespace {

// Extraction runs at extended precision: the anti-homomorphism family
// amplifies data error by the largest conjugation coefficients, which double
// extraction leaves just above the certification tolerance at window 4.
StructureConstants<double> podles_constants(double t, int two_j_max = 4) {
  QParam<long double> qp(0.5L);
  CorepCache<long double> cache(qp);
  PodlesActionModel<long double> m(PodlesParam<long double>(qp, (long double)t),
                                   cache, two_j_max);
  return convert_constants<double>(from_action(m));
}

GaugeElement<double> random_gauge(const StructureConstants<double>& sc,
                                  Rng& rng) {
  GaugeElement<double> xi;
  for (int t : sc.window) {
    if (t == 0) continue;
    const int mu = sc.multiplicity(t);
    if (mu > 0) xi.xi[t] = rng.unitary(mu);
  }
  return xi;
}

double family_gap(const FamilyResidual& a, const FamilyResidual& b) {
  return std::abs(a.max - b.max);
}

}  // namespace

TEST_CASE("index sets enumerate the window") {
  const auto trivial = index_sets(0.5, {0});
  CHECK(trivial.X.size() == 1);
  CHECK(trivial.X[0] == unit_index);
  CHECK(trivial.Y.empty());
  CHECK(trivial.Z.empty());

  // N = floor(M^2/d) = 3 for the defining spin at q = 0.5, so its block has
  // 3 * 2 indices.
  const auto half = index_sets(0.5, {0, 1});
  CHECK(half.X.size() == 7);
  CHECK(half.X[1] == IndexX{1, 1, 1});
  CHECK(half.X.back() == IndexX{1, 3, 2});
  CHECK(fusion_range(1, 1) == std::vector<int>{0, 2});
  // Only the trivial fusion target lies inside this window.
  CHECK(half.Y.size() == 36 * 1);
  for (const auto& y : half.Y) CHECK(y[2] == unit_index);
  CHECK(half.Z.size() == 36);

  std::map<int, int> caps{{1, 1}};
  const auto capped = index_sets(0.5, {0, 1}, &caps);
  CHECK(capped.X.size() == 3);
}

TEST_CASE("podles constants certify on the window") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  StructureConstants<double> sc = podles_constants(0.3);

  CHECK(sc.window == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(sc.multiplicity(0) == 1);
  CHECK(sc.multiplicity(1) == 0);
  CHECK(sc.multiplicity(2) == 1);
  CHECK(sc.multiplicity(4) == 1);
  CHECK(!sc.f.empty());
  CHECK(!sc.g.empty());

  // Unit coefficients reproduce orthonormality slotwise.
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) {
      const Cx fc = coefficient_F(sc, IndexX{2, 1, i}, IndexX{2, 1, j});
      CHECK(std::abs(fc - (i == j ? Cx(1) : Cx(0))) < 1e-9);
    }
  // One slot past the occupied block the pattern is zero.
  CHECK(std::abs(coefficient_F(sc, IndexX{2, 2, 1}, IndexX{2, 2, 1})) < 1e-9);

  const ResidualReport rep = residuals(sc, cache);
  CHECK(rep.pass);
  CHECK(rep.e1_assoc.count == 27);
  CHECK(rep.e1_assoc.max <= 1e-8);
  CHECK(rep.e1_involution.max <= 1e-8);
  CHECK(rep.e1_coaction.count > 0);
  CHECK(rep.e1_coaction.max <= 1e-8);
  CHECK(rep.e2.max <= 1e-8);
  CHECK(rep.e3.max <= 1e-8);
  CHECK(rep.assoc_skipped == 8 * 8 * 8 - 27);
  CHECK(rep.coaction_skipped == 8 * 8 - 9);

  const IsometryReport iso = isometry_check(sc);
  CHECK(iso.pass);
  CHECK(iso.max_residual <= 1e-8);
  // Norm bound sqrt(|F| M) = sqrt(21) for the adjoint spin at q = 0.5.
  const IrrepConstants<double> cst(2, qp);
  CHECK(cst.norm_bound == doctest::Approx(std::sqrt(21.0)).epsilon(1e-12));
  CHECK(iso.bound_excess <= 1e-9);
}

TEST_CASE("perturbed constants violate associativity") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  StructureConstants<double> sc = podles_constants(0.3);

  auto key = sc.f.end();
  for (auto it = sc.f.begin(); it != sc.f.end(); ++it)
    if (it->first[0].two_j == 2 && it->first[1].two_j == 2 &&
        it->first[2].two_j == 2 && it->first[2] != unit_index) {
      key = it;
      break;
    }
  REQUIRE(key != sc.f.end());
  key->second += 0.1;

  const ResidualReport rep = residuals(sc, cache);
  CHECK(!rep.pass);
  CHECK(rep.e1_assoc.max >= 1e-3);
}

TEST_CASE("empty window reports zero residuals") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  StructureConstants<double> sc;
  sc.q = 0.5;
  sc.window = {0};
  sc.mult[0] = 1;
  const ResidualReport rep = residuals(sc, cache);
  CHECK(rep.pass);
  CHECK(rep.e1_assoc.count == 0);
  CHECK(rep.e1_assoc.max == 0.0);
  CHECK(rep.e2.count == 0);
  CHECK(rep.e3.count == 0);
  CHECK(isometry_check(sc).pass);
}

TEST_CASE("regular window carries full multiplicity") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  CqgActionModel<double> m(cache, 2);
  StructureConstants<double> sc = from_action(m);

  CHECK(sc.multiplicity(0) == 1);
  CHECK(sc.multiplicity(1) == 2);
  CHECK(sc.multiplicity(2) == 3);

  const ResidualReport rep = residuals(sc, cache);
  CHECK(rep.pass);
  // Only the defining-spin triple block is fusion-complete at this window.
  CHECK(rep.e1_assoc.count == 64);
  CHECK(rep.e1_coaction.count == 16 + 13);
  CHECK(isometry_check(sc).pass);
}

TEST_CASE("gauge action preserves the certificate") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  CqgActionModel<double> m(cache, 2);
  const StructureConstants<double> sc = from_action(m);
  const ResidualReport base = residuals(sc, cache);
  const IsometryReport ibase = isometry_check(sc);
  Rng rng(2026);

  // Identity is a no-op.
  const GaugeElement<double> id;
  CHECK(window_distance(sc, gauge_act(sc, id), &id) == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const GaugeElement<double> xi = random_gauge(sc, rng);
    const StructureConstants<double> moved = gauge_act(sc, xi);
    CHECK(moved.mult == sc.mult);
    const ResidualReport rep = residuals(moved, cache);
    CHECK(family_gap(rep.e1_assoc, base.e1_assoc) <= 1e-9);
    CHECK(family_gap(rep.e1_involution, base.e1_involution) <= 1e-9);
    CHECK(family_gap(rep.e1_coaction, base.e1_coaction) <= 1e-9);
    CHECK(family_gap(rep.e2, base.e2) <= 1e-9);
    CHECK(family_gap(rep.e3, base.e3) <= 1e-9);
    CHECK(std::abs(isometry_check(moved).max_residual - ibase.max_residual) <=
          1e-8);

    // Right action law: acting twice composes the blocks.
    const GaugeElement<double> xi2 = random_gauge(sc, rng);
    GaugeElement<double> prod;
    for (const auto& [t, mat] : xi.xi) prod.xi[t] = mat * xi2.xi.at(t);
    const double gap = window_distance(gauge_act(moved, xi2),
                                       gauge_act(sc, prod), &id);
    CHECK(gap <= 1e-9);
  }

  // Blocks that reach past the occupied slots must fix them.
  StructureConstants<double> pod = podles_constants(0.3, 2);
  GaugeElement<double> bad;
  bad.xi[2] = Eigen::MatrixXcd::Zero(2, 2);
  bad.xi[2] << 0, 1, 1, 0;
  CHECK_THROWS_AS(gauge_act(pod, bad), DomainError);
  GaugeElement<double> skew;
  skew.xi[2] = Eigen::MatrixXcd::Identity(1, 1) * 2.0;
  CHECK_THROWS_AS(gauge_act(pod, skew), DomainError);
}

TEST_CASE("window metric separates the deformation grid") {
  const StructureConstants<double> a = podles_constants(0.30);
  const StructureConstants<double> near = podles_constants(0.31);
  const StructureConstants<double> far = podles_constants(0.40);

  CHECK(window_distance(a, a) == 0.0);

  Rng rng(7);
  GaugeElement<double> xi = random_gauge(a, rng);
  CHECK(window_distance(a, gauge_act(a, xi), &xi) <= 1e-9);
  // The default alignment search also recovers the orbit.
  CHECK(window_distance(a, gauge_act(a, xi)) <= 1e-6);

  const double dnear = window_distance(a, near);
  const double dfar = window_distance(a, far);
  CHECK(dnear > 0);
  CHECK(dnear < dfar);

  // Multiplicity mismatch is infinite and lists the spins.
  const StructureConstants<double> fibre = podles_constants(
      podles_c(2, QParam<double>(0.5)));
  std::vector<int> bad;
  CHECK(std::isinf(window_distance<double>(a, fibre, nullptr, &bad)));
  CHECK(bad == std::vector<int>{4});
}

TEST_CASE("polynomial and matrix realizations share a fibre window") {
  QParam<double> qp(0.5);
  CorepCache<double> cache(qp);
  const double t = podles_c(2, qp);

  PodlesActionModel<double> pm(PodlesParam<double>(qp, t), cache, 2);
  StructureConstants<double> sp = from_action(pm);

  MatrixActionModel<double> mm(2, cache, 2);
  StructureConstants<double> sm = from_action(mm);

  CHECK(sp.mult == sm.mult);
  CHECK(residuals(sp, cache).pass);
  CHECK(residuals(sm, cache).pass);
  CHECK(window_distance(sp, sm) <= 1e-8);
}

TEST_CASE("files round trip and enforce invariants") {
  const StructureConstants<double> sc = podles_constants(0.3);
  const std::string text = serialize(sc);
  const LoadedConstants lc = deserialize(text);
  CHECK(lc.warnings.empty());
  CHECK(lc.sc.window == sc.window);
  CHECK(lc.sc.mult == sc.mult);
  CHECK(lc.sc.f == sc.f);
  CHECK(lc.sc.g == sc.g);
  CHECK(serialize(lc.sc) == text);

  const std::string path = "structconst_roundtrip.json";
  save_constants(path, sc);
  const LoadedConstants fromfile = load_constants(path);
  CHECK(serialize(fromfile.sc) == text);
  std::remove(path.c_str());

  CHECK_THROWS_AS(deserialize("not json"), ParseError);
  CHECK_THROWS_AS(
      deserialize(
          R"({"version":2,"q":0.5,"window":[0],"mult":{"0":1},"f":[],"g":[]})"),
      ParseError);

  // Slot index past the dimension bound N = 3 of the defining spin.
  CHECK_THROWS_AS(
      deserialize(
          R"({"version":1,"q":0.5,"window":[0,1],"mult":{"0":1,"1":3},)"
          R"("f":[],"g":[[[1,4,1],[1,1,1],1.0,0.0]]})"),
      ParseError);
  // Entry outside the occupied slots.
  CHECK_THROWS_AS(
      deserialize(
          R"({"version":1,"q":0.5,"window":[0,1],"mult":{"0":1,"1":1},)"
          R"("f":[],"g":[[[1,2,1],[1,1,1],1.0,0.0]]})"),
      ParseError);
  // Fusion-inadmissible third slot.
  CHECK_THROWS_AS(
      deserialize(
          R"({"version":1,"q":0.5,"window":[0,1],"mult":{"0":1,"1":1},)"
          R"("f":[[[1,1,1],[1,1,1],[1,1,1],1.0,0.0]],"g":[]})"),
      ParseError);

  // Norm bound for the defining spin is sqrt(5); a 5 percent violation is
  // flagged but kept, past the slack the file is rejected.
  const LoadedConstants warned = deserialize(
      R"({"version":1,"q":0.5,"window":[0,1],"mult":{"0":1,"1":1},)"
      R"("f":[],"g":[[[1,1,1],[1,1,1],2.35,0.0]]})");
  CHECK(warned.warnings.size() == 1);
  CHECK(std::abs(warned.sc.gval(IndexX{1, 1, 1}, IndexX{1, 1, 1}) -
                 Cx(2.35)) == 0.0);
  CHECK_THROWS_AS(
      deserialize(
          R"({"version":1,"q":0.5,"window":[0,1],"mult":{"0":1,"1":1},)"
          R"("f":[],"g":[[[1,1,1],[1,1,1],2.7,0.0]]})"),
      ParseError);
}
