#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "kdvstab/damping.hpp"
#include "kdvstab/error.hpp"
#include "kdvstab/random.hpp"
#include "support.hpp"

using namespace kdvstab;
using kdvstab::testing::sample;

namespace {

Vector random_vector(std::uint64_t seed, int size) {
  CounterRng rng(seed);
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = rng.normal();
  return v;
}

double inner(const Grid1D& g, const Vector& a, const Vector& b) { return quadrature(g, a.cwiseProduct(b)); }

}  // namespace

TEST_CASE("weak G on a three-node window") {
  Grid1D g(16.0, 16);
  const auto w = OmegaWindow::snap(g, 5.0, 7.0);
  REQUIRE(w.node_count() == 3);
  Vector u = Vector::Constant(g.node_count(), 9.0);
  u(5) = 1.0;
  u(6) = 2.0;
  u(7) = 3.0;
  // Weights (1/2, 1, 1/2) dx give mean (0.5 + 2 + 1.5) / 2 = 2.
  const Vector gu = apply_weak_g(g, w, u);
  CHECK(gu(5) == -1.0);
  CHECK(gu(6) == 0.0);
  CHECK(gu(7) == 1.0);
  for (int i = 0; i < g.node_count(); ++i) {
    if (!w.contains(i)) CHECK(gu(i) == 0.0);
  }
}

TEST_CASE("weak G annihilates constants on the window") {
  Grid1D g(3.0, 128);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  Vector u = random_vector(3, g.node_count());
  for (int i = w.first; i <= w.last; ++i) u(i) = 4.25;
  CHECK(apply_weak_g(g, w, u).cwiseAbs().maxCoeff() <= 1e-14);
  for (int i = w.first; i <= w.last; ++i) u(i) = 0.0;
  CHECK(apply_weak_g(g, w, u).cwiseAbs().maxCoeff() == 0.0);
  const auto spec = DampingSpec::weak_g(w);
  for (int i = w.first; i <= w.last; ++i) u(i) = -1.5;
  CHECK(dissipation_functional(spec, g, u) <= 1e-28);
}

TEST_CASE("weak G structure over random vectors") {
  Grid1D g(3.0, 256);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Vector u = random_vector(seed, g.node_count());
    const Vector gu = apply_weak_g(g, w, u);
    const double norm = std::sqrt(inner(g, u, u));
    CHECK(std::abs(quadrature(g, gu, w)) <= 1e-12 * norm);
    for (int i = 0; i < g.node_count(); ++i) {
      if (!w.contains(i)) REQUIRE(gu(i) == 0.0);
    }
    // Projection identity in the window inner product.
    const double ugu = quadrature(g, u.cwiseProduct(gu), w);
    const double gg = quadrature(g, gu.cwiseAbs2(), w);
    CHECK(std::abs(ugu - gg) <= 1e-10 * gg);
    // The load vector reproduces the same pairing in the global inner product.
    const Vector load = damping_load(DampingSpec::weak_g(w), g, u);
    CHECK(std::abs(inner(g, u, load) - gg) <= 1e-10 * gg);
    CHECK(std::abs(quadrature(g, load)) <= 1e-12 * norm);
  }
}

TEST_CASE("multiplicative damping is a pointwise product") {
  Grid1D g(16.0, 16);
  const auto w = OmegaWindow::snap(g, 0.0, 4.0);
  Vector a = Vector::Zero(g.node_count());
  for (int i = 0; i <= 4; ++i) a(i) = 1.0 + g.node(i);
  const auto spec = DampingSpec::multiplicative(g, w, 1.0, a);
  const Vector u = sample(g, [](double x) { return x; });
  const Vector au = apply_multiplicative(spec, u);
  for (int i = 0; i <= 4; ++i) CHECK(au(i) == g.node(i) + g.node(i) * g.node(i));
  for (int i = 5; i < g.node_count(); ++i) CHECK(au(i) == 0.0);

  const auto indicator = DampingSpec::multiplicative(g, w, 1.0, ProfileKind::indicator);
  const Vector masked = apply_multiplicative(indicator, u);
  for (int i = 0; i < g.node_count(); ++i) CHECK(masked(i) == (w.contains(i) ? u(i) : 0.0));

  const auto zero = DampingSpec::multiplicative(g, w, 1.0, ProfileKind::bump);
  CHECK(zero.profile.minCoeff() >= 0.0);
  for (int i = w.first; i <= w.last; ++i) CHECK(zero.profile(i) >= 1.0);
}

TEST_CASE("multiplicative floor is validated") {
  Grid1D g(3.0, 64);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  Vector a = Vector::Constant(g.node_count(), 0.5);
  CHECK_THROWS_AS(DampingSpec::multiplicative(g, w, 1.0, a), ConfigError);
  a(0) = -1.0;
  CHECK_THROWS_AS(DampingSpec::multiplicative(g, w, 0.25, a), ConfigError);
  CHECK_THROWS_AS(DampingSpec::multiplicative(g, w, 0.0, ProfileKind::indicator), ConfigError);
}

TEST_CASE("H^-1 operator solves the window Dirichlet problem") {
  // Window (1, 2) on nodes, u = 1: v = (x - 1)(2 - x) / 2 exactly.
  Grid1D g(3.0, 192);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  const Vector u = Vector::Ones(g.node_count());
  const Vector v = apply_h_minus_one(g, w, u);
  for (int i = 0; i < g.node_count(); ++i) {
    const double x = g.node(i);
    const double exact = w.contains(i) ? (x - 1.0) * (2.0 - x) / 2.0 : 0.0;
    CHECK(std::abs(v(i) - exact) <= 1e-10);
  }
  CHECK(apply_h_minus_one(g, w, Vector::Zero(g.node_count())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("H^-1 unit window dissipation is 1/12") {
  // 597 cells on [0, 3] put 200 nodes in [1, 2].
  Grid1D g(3.0, 597);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  REQUIRE(w.node_count() == 200);
  const auto spec = DampingSpec::h_minus_one(g, w);
  Vector u = Vector::Zero(g.node_count());
  for (int i = w.first; i <= w.last; ++i) u(i) = 1.0;
  CHECK(std::abs(dissipation_functional(spec, g, u) - 1.0 / 12.0) <= 1e-3);
}

TEST_CASE("H^-1 delta response matches dense elimination") {
  Grid1D g(3.0, 96);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  const int mid = (w.first + w.last) / 2;
  Vector u = Vector::Zero(g.node_count());
  u(mid) = 1.0;
  const Vector v = apply_h_minus_one(g, w, u);

  const int m = w.last - w.first - 1;
  const double h2 = g.spacing() * g.spacing();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = 2.0 / h2;
    if (i > 0) a(i, i - 1) = -1.0 / h2;
    if (i + 1 < m) a(i, i + 1) = -1.0 / h2;
  }
  Vector rhs = Vector::Zero(m);
  rhs(mid - w.first - 1) = 1.0;
  const Vector oracle = a.fullPivLu().solve(rhs);
  for (int i = 0; i < m; ++i) CHECK(std::abs(v(w.first + 1 + i) - oracle(i)) <= 1e-12 * oracle.cwiseAbs().maxCoeff());
  CHECK(v(w.first) == 0.0);
  CHECK(v(w.last) == 0.0);
}

TEST_CASE("H^-1 operator is symmetric and positive") {
  Grid1D g(3.0, 128);
  const auto w = OmegaWindow::snap(g, 0.7, 2.1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Vector u = random_vector(100 + seed, g.node_count());
    const Vector z = random_vector(200 + seed, g.node_count());
    const double a = inner(g, z, apply_h_minus_one(g, w, u));
    const double b = inner(g, apply_h_minus_one(g, w, z), u);
    CHECK(std::abs(a - b) <= 1e-12 * (std::abs(a) + std::abs(b) + 1e-300));
    CHECK(inner(g, u, apply_h_minus_one(g, w, u)) >= 0.0);
    for (int i = 0; i < g.node_count(); ++i) {
      if (!w.contains(i)) REQUIRE(apply_h_minus_one(g, w, u)(i) == 0.0);
    }
  }
}

TEST_CASE("H^-1 window must stay inside the domain") {
  Grid1D g(3.0, 64);
  CHECK_THROWS_AS(DampingSpec::h_minus_one(g, OmegaWindow::snap(g, 0.0, 1.0)), ConfigError);
  CHECK_THROWS_AS(DampingSpec::h_minus_one(g, OmegaWindow::snap(g, 2.0, 3.0)), ConfigError);
}

TEST_CASE("dissipation functionals vanish at zero and are nonnegative") {
  Grid1D g(3.0, 128);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  const DampingSpec specs[] = {DampingSpec::none(), DampingSpec::weak_g(w), DampingSpec::h_minus_one(g, w),
                               DampingSpec::multiplicative(g, w, 0.5, ProfileKind::bump)};
  for (const auto& spec : specs) {
    CAPTURE(to_string(spec.kind));
    CHECK(dissipation_functional(spec, g, Vector::Zero(g.node_count())) == 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CHECK(dissipation_functional(spec, g, random_vector(seed, g.node_count())) >= 0.0);
    }
  }
}

TEST_CASE("damping kind names round-trip") {
  for (auto k : {DampingKind::none, DampingKind::weak_g, DampingKind::multiplicative, DampingKind::h_minus_one}) {
    CHECK(parse_damping_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_damping_kind("strong_g"), ConfigError);
}
