#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "tmd/parallel.hpp"

using namespace tmd;
using namespace tmd::test;

TEST_CASE("pair index unflattening") {
  for (int n : {2, 3, 5, 17, 100}) {
    long p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        auto [a, b] = unflatten_pair(p, n);
        CHECK(a == i);
        CHECK(b == j);
        ++p;
      }
    CHECK(p == pair_count(n));
  }
}

TEST_CASE("thread pool runs every worker exactly once per round") {
  ThreadPool pool(4);
  std::vector<int> hits(4, 0);
  for (int round = 0; round < 50; ++round)
    pool.run([&](int w) { ++hits[w]; });
  for (int w = 0; w < 4; ++w) CHECK(hits[w] == 50);
}

namespace {

SystemState evaluate_with_workers(const SystemComposition& comp, const SystemState& state,
                                  int workers) {
  ForceFieldOptions opts;
  opts.cutoff = 2.5;
  opts.workers = workers;
  ForceField ff(comp, opts);
  SystemState out = state;
  ff.evaluate(out);
  return out;
}

}  // namespace

TEST_CASE("W=1 equals the serial pair loop bit for bit") {
  auto comp = lj_fluid(64, 6.0, 1.0);
  auto state = random_state(comp, 5, 0.9);

  auto r1 = evaluate_with_workers(comp, state, 1);

  ForceFieldOptions opts;
  opts.cutoff = 2.5;
  ForceField ff(comp, opts);
  const Scene scene = build_scene(comp, state, ff.table(), true);
  EvalAccum acc;
  acc.resize(64);
  ff.evaluate_serial(scene, acc);

  for (int i = 0; i < 64; ++i)
    for (int k = 0; k < 3; ++k) CHECK(r1.force[i][k] == acc.force[i][k]);
  CHECK(r1.energy.lj == acc.u_lj);
  CHECK(r1.virial == acc.virial);
}

TEST_CASE("W=4 matches W=1 within reduction rounding on a 500-molecule fluid") {
  auto comp = lj_fluid(500, 8.5, 1.0);
  auto state = init_lattice(comp, 77);

  auto serial = evaluate_with_workers(comp, state, 1);
  auto par = evaluate_with_workers(comp, state, 4);

  double max_diff = 0.0, max_force = 0.0;
  for (int i = 0; i < 500; ++i)
    for (int k = 0; k < 3; ++k) {
      max_diff = std::max(max_diff, std::abs(par.force[i][k] - serial.force[i][k]));
      max_force = std::max(max_force, std::abs(serial.force[i][k]));
    }
  CHECK(max_diff <= 1e-12 * std::max(1.0, max_force));
  CHECK(par.energy.total() == doctest::Approx(serial.energy.total()).epsilon(1e-12));
}

TEST_CASE("repeated evaluations at fixed W are bit-identical") {
  auto comp = lj_fluid(200, 6.5, 1.0);
  auto state = random_state(comp, 9, 0.9);

  for (int w : {2, 3, 4}) {
    auto a = evaluate_with_workers(comp, state, w);
    auto b = evaluate_with_workers(comp, state, w);
    for (int i = 0; i < 200; ++i)
      for (int k = 0; k < 3; ++k) CHECK(a.force[i][k] == b.force[i][k]);
    CHECK(a.energy.lj == b.energy.lj);
    CHECK(a.energy.du_dv() == b.energy.du_dv());
  }
}

TEST_CASE("third law survives parallel reduction") {
  SystemComposition comp;
  comp.species = {build_species("dimer", {make_lj_site(0.4, 0, 0, 1, 1, 1),
                                          make_lj_site(-0.4, 0, 0, 1, 1, 1)}),
                  build_species("mono", {make_lj_site(0, 0, 0, 0.9, 1.3, 1)})};
  comp.counts = {40, 40};
  comp.box_length = 7.0;
  comp.temperature = 1.0;
  auto state = random_state(comp, 31, 0.85);

  for (int w : {1, 4}) {
    auto r = evaluate_with_workers(comp, state, w);
    Vec3 sum;
    double max_force = 1.0;
    for (int i = 0; i < 80; ++i) {
      sum += r.force[i];
      for (int k = 0; k < 3; ++k) max_force = std::max(max_force, std::abs(r.force[i][k]));
    }
    CHECK(std::abs(sum.x) < 1e-10 * max_force);
    CHECK(std::abs(sum.y) < 1e-10 * max_force);
    CHECK(std::abs(sum.z) < 1e-10 * max_force);
  }
}

TEST_CASE("more workers than pairs degenerates gracefully") {
  auto comp = lj_fluid(3, 6.0, 1.0);
  auto state = random_state(comp, 2, 0.9);
  auto a = evaluate_with_workers(comp, state, 1);
  auto b = evaluate_with_workers(comp, state, 16);
  CHECK(a.energy.total() == doctest::Approx(b.energy.total()).epsilon(1e-15));
}
