#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "kdvstab/error.hpp"
#include "kdvstab/timestepper.hpp"
#include "support.hpp"

using namespace kdvstab;
using kdvstab::testing::identity_residual;
using kdvstab::testing::max_energy_increase;
using kdvstab::testing::sample;
using kdvstab::testing::sine_cubed;

namespace {

Vector gaussian(const Grid1D& g, double center, double width) {
  return sample(g, [=](double x) { return std::exp(-std::pow((x - center) / width, 2)); });
}

SimConfig config(double dt, double horizon, int stride = 1 << 30) {
  SimConfig c;
  c.dt = dt;
  c.horizon = horizon;
  c.snapshot_stride = stride;
  return c;
}

}  // namespace

TEST_CASE("zero state stays zero") {
  Grid1D g(3.0, 64);
  SemiImplicitStepper stepper(ModelSpec::kdv(), g, DampingSpec::weak_g(OmegaWindow::snap(g, 1.0, 2.0)), 1e-3);
  ModelState s;
  s.u = Vector::Zero(g.interior_count());
  for (int k = 0; k < 5; ++k) s = stepper.step(s);
  CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);

  const SimTrace tr = run(ModelSpec::kdv(), g, DampingSpec::none(), Vector::Zero(g.node_count()), config(1e-3, 0.1));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    REQUIRE(tr.energy[k] == 0.0);
    REQUIRE(tr.mass[k] == 0.0);
  }
}

TEST_CASE("linear propagator matches the dense exponential") {
  Grid1D g(3.0, 64);
  const Eigen::MatrixXd op = linear_operator(ModelSpec::kdv_linear(), g).to_dense();

  SUBCASE("smooth data at dt = 1e-5") {
    const double dt = 1e-5;
    const Vector u0 = gaussian(g, 1.5, 0.35);
    const SimTrace tr = run(ModelSpec::kdv_linear(), g, DampingSpec::none(), u0, config(dt, 10 * dt, 10));
    const Vector exact = (-(10 * dt) * op).exp() * g.restrict_interior(u0);
    const Vector got = g.restrict_interior(tr.snapshots.back().u);
    CHECK((got - exact).norm() <= 1e-6 * exact.norm());
  }
  SUBCASE("slowest eigenmode at dt = 1e-3") {
    Eigen::EigenSolver<Eigen::MatrixXd> es(op);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
      if (std::abs(es.eigenvalues()(i)) < std::abs(es.eigenvalues()(best))) best = i;
    }
    const Vector mode = es.eigenvectors().col(best).real();
    const double dt = 1e-3;
    const SimTrace tr = run(ModelSpec::kdv_linear(), g, DampingSpec::none(), g.expand(mode), config(dt, 10 * dt, 10));
    const Vector exact = (-(10 * dt) * op).exp() * mode;
    const Vector got = g.restrict_interior(tr.snapshots.back().u);
    CHECK((got - exact).norm() <= 1e-6 * exact.norm());
  }
}

TEST_CASE("stepper is second order in time") {
  Grid1D g(3.0, 128);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  GearGrimshawConstants gg{0.1, 0.1, 0.2, 1.0, 1.0, 0.5};
  const ModelSpec models[] = {ModelSpec::kdv(), ModelSpec::kawahara(), ModelSpec::gear_grimshaw(gg)};
  const DampingSpec dampings[] = {DampingSpec::none(), DampingSpec::weak_g(w)};
  for (const auto& model : models) {
    for (const auto& damping : dampings) {
      CAPTURE(to_string(model.kind));
      CAPTURE(to_string(damping.kind));
      // Discretely smooth data: a few resolvent sweeps strip the content in
      // modes with |lambda dt| >> 1, which Crank-Nicolson carries along
      // without resolving.
      auto smooth = identity_plus(linear_operator(model, g), 0.01);
      Vector packed = pack(model, [&] {
        ModelState s;
        s.u = g.restrict_interior(sine_cubed(g));
        if (model.field_count() == 2) s.v = g.restrict_interior(sine_cubed(g, 0.5));
        return s;
      }());
      for (int r = 0; r < 4; ++r) packed = smooth.solve(packed);
      const ModelState s0 = unpack(model, packed, 0.0);
      InitialData init{g.expand(s0.u), model.field_count() == 2 ? g.expand(s0.v) : Vector()};

      const double horizon = 0.5;
      auto final_state = [&](double dt) {
        SimConfig c = config(dt, horizon, static_cast<int>(std::lround(horizon / dt)));
        const SimTrace tr = run(model, g, damping, init, c);
        Vector out = tr.snapshots.back().u;
        if (tr.two_fields) {
          out.conservativeResize(2 * g.node_count());
          out.tail(g.node_count()) = tr.snapshots.back().v;
        }
        return out;
      };
      const Vector ref = final_state(1.5625e-5);
      const double e1 = (final_state(5e-4) - ref).norm();
      const double e2 = (final_state(2.5e-4) - ref).norm();
      const double e3 = (final_state(1.25e-4) - ref).norm();
      // The indicator in the G load puts a jump into every step's forcing;
      // the Kawahara modes it reaches are stiff enough that Crank-Nicolson
      // converges at about 1.8 there (1.79, 1.74, 1.83 down to dt = 3e-5).
      const double order = model.kind == ModelKind::kawahara && damping.kind != DampingKind::none ? 1.6 : 1.8;
      CHECK(std::log2(e1 / e2) >= order);
      CHECK(std::log2(e2 / e3) >= order);
    }
  }
}

TEST_CASE("one step and two half steps agree to second order") {
  Grid1D g(3.0, 128);
  const ModelSpec models[] = {ModelSpec::kdv(), ModelSpec::kawahara(),
                              ModelSpec::gear_grimshaw({0.1, 0.1, 0.0, 1.0, 1.0, 0.5}),
                              ModelSpec::gear_grimshaw({0.0, 0.0, 0.2, 1.0, 1.0, 0.5})};
  for (const auto& model : models) {
    CAPTURE(to_string(model.kind));
    auto smooth = identity_plus(linear_operator(model, g), 0.01);
    ModelState s0;
    s0.u = g.restrict_interior(sine_cubed(g));
    if (model.field_count() == 2) s0.v = g.restrict_interior(sine_cubed(g, 0.5));
    Vector packed = pack(model, s0);
    for (int r = 0; r < 4; ++r) packed = smooth.solve(packed);
    s0 = unpack(model, packed, 0.0);

    auto gap = [&](double dt) {
      SemiImplicitStepper coarse(model, g, DampingSpec::none(), dt);
      SemiImplicitStepper fine(model, g, DampingSpec::none(), dt / 2);
      return (pack(model, coarse.step(s0)) - pack(model, fine.step(fine.step(s0)))).norm();
    };
    // Kawahara's nonlinear load is only asymptotic below dt ~ 1e-4 at this
    // resolution (ratio 2.7 at dt = 1e-3).
    const double d1 = gap(1.25e-4), d2 = gap(6.25e-5), d3 = gap(3.125e-5);
    CHECK(std::log2(d1 / d2) >= 1.8);
    CHECK(std::log2(d2 / d3) >= 1.8);
  }
}

TEST_CASE("undamped linear kdv dissipates through the left boundary only") {
  Grid1D g(3.0, 256);
  const SimTrace tr = run(ModelSpec::kdv_linear(), g, DampingSpec::none(), sine_cubed(g), config(5e-4, 2.0));
  CHECK(tr.energy.back() < tr.energy.front());
  CHECK(identity_residual(tr) <= 0.01);
  for (double d : tr.diss_damping) REQUIRE(d == 0.0);
}

// No consistent ghost closure of the third difference is dissipative in the
// plain dx-weighted norm, so the discrete boundary flux is indefinite and
// undamped runs can gain O(dx^2) energy on a step where u_x(0) is small.
TEST_CASE("undamped energy is monotone to 1e-10" * doctest::should_fail()) {
  Grid1D g(3.0, 256);
  const SimTrace tr = run(ModelSpec::kdv_linear(), g, DampingSpec::none(), sine_cubed(g), config(5e-4, 2.0));
  CHECK(max_energy_increase(tr) <= 1e-10);
}

TEST_CASE("undamped energy gain vanishes under refinement") {
  for (const auto& model : {ModelSpec::kdv_linear(), ModelSpec::kdv()}) {
    CAPTURE(to_string(model.kind));
    double gain[3];
    for (int r = 0; r < 3; ++r) {
      Grid1D g(3.0, 128 << r);
      const SimTrace tr = run(model, g, DampingSpec::none(), sine_cubed(g), config(1e-3 / (1 << r), 3.0));
      gain[r] = max_energy_increase(tr);
    }
    CHECK(gain[0] / gain[1] >= 3.5);
    CHECK(gain[1] / gain[2] >= 3.5);
  }
}

TEST_CASE("damped kdv decays from sin(pi x / 3)") {
  Grid1D g(3.0, 256);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  const double k = std::numbers::pi / 3.0;
  const Vector u0 = sample(g, [k](double x) { return std::sin(k * x); });
  const SimTrace tr = run(ModelSpec::kdv(), g, DampingSpec::weak_g(w), u0, config(5e-4, 30.0));
  CHECK(max_energy_increase(tr) <= 1e-10);
  CHECK(tr.energy.back() < 1e-2 * tr.energy.front());
  REQUIRE(tr.feedback_time_bound);
  CHECK(tr.feedback_time_bound->first <= tr.feedback_time_bound->second);
}

TEST_CASE("energy is monotone under every damping mechanism") {
  Grid1D g(3.0, 128);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  const DampingSpec specs[] = {DampingSpec::weak_g(w), DampingSpec::h_minus_one(g, w),
                               DampingSpec::multiplicative(g, w, 1.0, ProfileKind::bump)};
  for (const auto& spec : specs) {
    CAPTURE(to_string(spec.kind));
    const SimTrace tr = run(ModelSpec::kdv(), g, spec, sine_cubed(g), config(1e-3, 3.0));
    CHECK(max_energy_increase(tr) <= 1e-10);
    CHECK(identity_residual(tr) <= 0.02);
  }
}

TEST_CASE("gear-grimshaw energy balance with the derived boundary flux") {
  Grid1D g(3.0, 256);
  const auto w = OmegaWindow::snap(g, 1.0, 2.0);
  const ModelSpec model = ModelSpec::gear_grimshaw({0.1, 0.1, 0.2, 1.0, 1.0, 0.5});
  InitialData init;
  init.u = sine_cubed(g, 0.5);
  init.v = sine_cubed(g, 1.0);
  const SimTrace tr = run(model, g, DampingSpec::weak_g(w), init, config(5e-4, 5.0));
  CHECK(tr.two_fields);
  CHECK(tr.energy.back() < tr.energy.front());
  CHECK(identity_residual(tr) <= 0.02);
}

TEST_CASE("uncoupled gear-grimshaw v-field tracks standalone kdv") {
  Grid1D g(3.0, 128);
  const auto damping = DampingSpec::weak_g(OmegaWindow::snap(g, 1.0, 2.0));
  GearGrimshawConstants c;
  c.r = 1.0;
  const ModelSpec gg = ModelSpec::gear_grimshaw(c);
  const double dt = 5e-4;
  SemiImplicitStepper coupled(gg, g, damping, dt);
  SemiImplicitStepper single(ModelSpec::kdv(), g, damping, dt);
  ModelState a;
  a.u = g.restrict_interior(sine_cubed(g, 0.3));
  a.v = g.restrict_interior(sine_cubed(g, 1.0));
  ModelState b;
  b.u = a.v;
  for (int k = 0; k < 200; ++k) {
    const ModelState na = coupled.step(a);
    const ModelState nb = single.step(b);
    REQUIRE((na.v - nb.u).cwiseAbs().maxCoeff() <= 1e-12 * (k + 1));
    a = na;
    b = nb;
  }
}

TEST_CASE("runs are bit-identical") {
  Grid1D g(3.0, 128);
  const auto damping = DampingSpec::weak_g(OmegaWindow::snap(g, 1.0, 2.0));
  const SimTrace a = run(ModelSpec::kdv(), g, damping, sine_cubed(g), config(1e-3, 1.0, 100));
  const SimTrace b = run(ModelSpec::kdv(), g, damping, sine_cubed(g), config(1e-3, 1.0, 100));
  CHECK(a.energy == b.energy);
  CHECK(a.ux0 == b.ux0);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) CHECK(a.snapshots[k].u == b.snapshots[k].u);
}

TEST_CASE("trace layout follows cadence and stride") {
  Grid1D g(3.0, 64);
  SimConfig c = config(1e-3, 0.1, 20);
  c.trace_cadence = 5;
  const SimTrace tr = run(ModelSpec::kdv(), g, DampingSpec::none(), sine_cubed(g), c);
  CHECK(tr.steps == 100);
  CHECK(tr.size() == 21);
  CHECK(tr.snapshots.size() == 6);
  for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
  CHECK(tr.times.back() == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("horizon is snapped to a multiple of dt") {
  Grid1D g(3.0, 64);
  const SimTrace tr = run(ModelSpec::kdv(), g, DampingSpec::none(), sine_cubed(g), config(1e-3, 0.10049));
  CHECK(tr.snapped_horizon == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(tr.warnings.size() == 1);
}

TEST_CASE("dt guard") {
  Grid1D g(3.0, 64);
  SimConfig c = config(0.05, 1.0);
  CHECK_THROWS_AS(run(ModelSpec::kdv(), g, DampingSpec::none(), sine_cubed(g), c), ConfigError);
  c.allow_large_dt = true;
  c.horizon = 0.1;
  const SimTrace tr = run(ModelSpec::kdv(), g, DampingSpec::none(), sine_cubed(g), c);
  CHECK_FALSE(tr.warnings.empty());
}

TEST_CASE("blowup is reported with the last good time") {
  Grid1D g(3.0, 64);
  const Forcing pump = [&g](double) { return Vector(50.0 * sine_cubed(g)); };
  try {
    run(ModelSpec::kdv_linear(), g, DampingSpec::none(), sine_cubed(g, 0.1), config(1e-3, 5.0), pump);
    FAIL("expected a blowup");
  } catch (const BlowupError& e) {
    CHECK(e.last_good_time() > 0.0);
    CHECK(e.last_good_time() < 5.0);
  }
}

TEST_CASE("invalid configurations") {
  SimConfig c;
  c.dt = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.snapshot_stride = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.dt = 2.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
