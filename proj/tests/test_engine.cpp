#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "tmd/engine.hpp"

using namespace tmd;
using namespace tmd::test;

namespace {

SimulationPlan nve_plan(double dt) {
  SimulationPlan plan;
  plan.dt = dt;
  plan.thermostat_interval_equil = 0;
  plan.thermostat_interval_prod = 0;
  return plan;
}

double total_energy(const SystemComposition& comp, const SystemState& state) {
  return kinetic_energy_trans(comp, state) + kinetic_energy_rot(comp, state) +
         state.energy.total();
}

}  // namespace

TEST_CASE("free flight advances positions exactly") {
  auto comp = lj_fluid(1, 10.0, 1.0);
  ForceFieldOptions opts;
  opts.cutoff = 3.0;
  Engine engine(comp, opts, nve_plan(0.01), 1);

  SystemState s = engine.state();
  s.pos[0] = {5.0, 5.0, 5.0};
  s.vel[0] = {1.0, 0.0, 0.0};
  engine.set_state(s);

  engine.step();
  CHECK(engine.state().pos[0].x == 5.0 + 0.01 * 1.0);
  CHECK(engine.state().pos[0].y == 5.0);
  engine.step();
  CHECK(engine.state().pos[0].x == 5.0 + 0.01 + 0.01);
}

TEST_CASE("two-body LJ orbit conserves energy in NVE") {
  auto comp = lj_fluid(2, 20.0, 1.0);
  ForceFieldOptions opts;
  opts.cutoff = 8.0;
  Engine engine(comp, opts, nve_plan(0.001), 1);

  SystemState s = engine.state();
  s.pos[0] = {10.0, 10.0, 10.0};
  s.pos[1] = {11.2, 10.0, 10.0};
  s.vel[0] = {0.0, 0.4, 0.0};
  s.vel[1] = {0.0, -0.4, 0.0};
  engine.set_state(s);

  const double e0 = total_energy(comp, engine.state());
  double max_drift = 0.0;
  for (int i = 0; i < 10000; ++i) {
    engine.step();
    max_drift = std::max(max_drift, std::abs(total_energy(comp, engine.state()) - e0));
  }
  CHECK(max_drift / std::abs(e0) < 1e-5);
}

TEST_CASE("torque-free dumbbell conserves angular momentum") {
  SystemComposition comp;
  comp.species = {build_species(
      "dumbbell", {make_lj_site(0.5, 0, 0, 1, 1, 1), make_lj_site(-0.5, 0, 0, 1, 1, 1)})};
  comp.counts = {1};
  comp.box_length = 10.0;
  comp.temperature = 1.0;
  ForceFieldOptions opts;
  opts.cutoff = 3.0;
  Engine engine(comp, opts, nve_plan(0.001), 1);

  SystemState s = engine.state();
  s.pos[0] = {5, 5, 5};
  s.vel[0] = {0, 0, 0};
  s.orient[0] = {1, 0, 0, 0};
  s.ang_vel[0] = {0.0, 1.3, 0.7};  // axis component undefined for a linear rotor
  engine.set_state(s);

  auto lab_angular_momentum = [&](const SystemState& st) {
    const Vec3& I = comp.species[0].inertia_principal;
    const Vec3 pi{I.x * st.ang_vel[0].x, I.y * st.ang_vel[0].y, I.z * st.ang_vel[0].z};
    return rotate(st.orient[0], pi);
  };
  const Vec3 l0 = lab_angular_momentum(engine.state());
  const double e0 = total_energy(comp, engine.state());

  for (int i = 0; i < 10000; ++i) engine.step();

  const Vec3 l1 = lab_angular_momentum(engine.state());
  CHECK(std::abs(l1.x - l0.x) < 1e-8);
  CHECK(std::abs(l1.y - l0.y) < 1e-8);
  CHECK(std::abs(l1.z - l0.z) < 1e-8);
  CHECK(total_energy(comp, engine.state()) == doctest::Approx(e0).epsilon(1e-10));
  // quaternion stays normalized
  CHECK(std::abs(engine.state().orient[0].norm() - 1.0) < 1e-9);
}

TEST_CASE("rigid three-site rotor conserves energy under torques") {
  SystemComposition comp;
  comp.species = {build_species(
      "tri", {make_lj_site(0.3, 0, 0, 0.9, 0.7, 1.0), make_lj_site(-0.2, 0.25, 0, 1.0, 1.0, 1.5),
              make_lj_site(0, -0.2, 0.2, 1.1, 0.5, 0.8)})};
  comp.counts = {8};
  comp.box_length = 8.0;
  comp.temperature = 0.8;
  ForceFieldOptions opts;
  opts.cutoff = 3.5;
  Engine engine(comp, opts, nve_plan(0.0005), 3);

  // gentle start away from overlaps
  engine.set_state(random_state(comp, 12, 1.05));
  SystemState s = engine.state();
  Rng rng(4);
  for (int i = 0; i < 8; ++i) {
    s.vel[i] = {0.2 * rng.gaussian(), 0.2 * rng.gaussian(), 0.2 * rng.gaussian()};
    s.ang_vel[i] = {0.3 * rng.gaussian(), 0.3 * rng.gaussian(), 0.3 * rng.gaussian()};
  }
  engine.set_state(s);

  const double e0 = total_energy(comp, engine.state());
  for (int i = 0; i < 4000; ++i) engine.step();
  CHECK(total_energy(comp, engine.state()) == doctest::Approx(e0).epsilon(1e-5));
}

TEST_CASE("isokinetic thermostat closed forms") {
  auto comp = lj_fluid(32, 10.0, 1.5);
  ForceFieldOptions opts;
  opts.cutoff = 3.0;
  SimulationPlan plan = nve_plan(0.002);
  Engine engine(comp, opts, plan, 5);

  // state already at target: velocities unchanged to 1e-12
  SystemState before = engine.state();
  engine.apply_thermostat();
  for (int i = 0; i < 32; ++i)
    for (int k = 0; k < 3; ++k)
      CHECK(engine.state().vel[i][k] == doctest::Approx(before.vel[i][k]).epsilon(1e-12));

  // kinetic temperature 2 T -> scale 1/sqrt(2)
  SystemState hot = engine.state();
  for (auto& v : hot.vel) v *= std::sqrt(2.0);
  engine.set_state(hot);
  engine.apply_thermostat();
  for (int i = 0; i < 32; ++i)
    CHECK(engine.state().vel[i].x == doctest::Approx(hot.vel[i].x / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("thermostatted run holds the target temperature") {
  auto comp = lj_fluid(108, 5.13, 1.1);  // rho ~ 0.8
  ForceFieldOptions opts;
  opts.cutoff = 2.5;
  SimulationPlan plan;
  plan.dt = 0.002;
  plan.n_equilibration = 2000;
  plan.n_production = 20000;
  plan.thermostat_interval_equil = 1;
  plan.thermostat_interval_prod = 10;
  Engine engine(comp, opts, plan, 9);
  auto results = engine.run();
  CHECK(results.t_kin_trans.value == doctest::Approx(1.1).epsilon(1e-3));
}

TEST_CASE("zero production steps produce an empty bundle without error") {
  auto comp = lj_fluid(16, 6.0, 1.0);
  ForceFieldOptions opts;
  opts.cutoff = 2.5;
  SimulationPlan plan;
  plan.dt = 0.002;
  plan.n_equilibration = 10;
  plan.n_production = 0;
  plan.sample_massieu = true;
  Engine engine(comp, opts, plan, 3);
  auto results = engine.run();
  CHECK(results.production_steps == 0);
  CHECK(!results.massieu.has_value());
  CHECK(results.acfs.empty());
}

TEST_CASE("fixed seed, single thread: bit-identical results") {
  auto comp = lj_fluid(32, 4.0, 1.2);
  ForceFieldOptions opts;
  opts.cutoff = 2.0;
  SimulationPlan plan;
  plan.dt = 0.002;
  plan.n_equilibration = 200;
  plan.n_production = 400;
  plan.sample_massieu = true;
  plan.sample_self_diffusion = true;
  plan.n_ext = 2;
  plan.corr_length = 20;

  Engine a(comp, opts, plan, 77);
  Engine b(comp, opts, plan, 77);
  auto ra = a.run();
  auto rb = b.run();

  CHECK(ra.t_kin_trans.value == rb.t_kin_trans.value);
  CHECK(ra.u_pot_per_molecule.value == rb.u_pot_per_molecule.value);
  CHECK(ra.pressure.value == rb.pressure.value);
  REQUIRE(ra.massieu.has_value());
  for (int e = 0; e < 8; ++e)
    CHECK(ra.massieu->entries[e].value == rb.massieu->entries[e].value);
  for (int i = 0; i < 32; ++i) {
    CHECK(a.state().pos[i].x == b.state().pos[i].x);
    CHECK(a.state().vel[i].z == b.state().vel[i].z);
  }
}

TEST_CASE("samplers touch the correlation machinery exactly every n_ext-th step") {
  auto comp = lj_fluid(16, 6.0, 1.0);
  ForceFieldOptions opts;
  opts.cutoff = 2.5;
  SimulationPlan plan;
  plan.dt = 0.002;
  plan.n_equilibration = 50;
  plan.n_production = 1003;
  plan.n_ext = 5;
  plan.corr_length = 10;
  plan.sample_self_diffusion = true;
  plan.sample_massieu = true;
  Engine engine(comp, opts, plan, 21);
  engine.run();
  CHECK(engine.correlation_pushes() == 1003 / 5);
}

TEST_CASE("non-finite state is fatal with a diagnostic") {
  auto comp = lj_fluid(4, 6.0, 1.0);
  ForceFieldOptions opts;
  opts.cutoff = 2.5;
  Engine engine(comp, opts, nve_plan(0.01), 2);
  SystemState s = engine.state();
  s.vel[2] = {std::numeric_limits<double>::quiet_NaN(), 0, 0};
  CHECK_THROWS_AS(
      [&] {
        engine.set_state(s);
        engine.step();
      }(),
      NumericalError);
}

TEST_CASE("ewald + massieu sampling is rejected at engine level") {
  SystemComposition comp;
  comp.species = {build_species("cat", {make_charge_site(0, 0, 0, 1.0, 1.0)}),
                  build_species("ani", {make_charge_site(0, 0, 0, -1.0, 1.0)})};
  comp.counts = {4, 4};
  comp.box_length = 8.0;
  comp.temperature = 1.0;
  ForceFieldOptions opts;
  opts.cutoff = 3.0;
  opts.method = ElectrostaticsMethod::ewald;
  opts.ewald = ewald_tune(1e-5, 3.0, 8.0);
  SimulationPlan plan = nve_plan(0.002);
  plan.sample_massieu = true;
  CHECK_THROWS_AS(Engine(comp, opts, plan, 1), ConfigError);
}
