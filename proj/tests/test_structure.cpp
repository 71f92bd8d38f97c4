#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "tmd/structure.hpp"

using namespace tmd;
using namespace tmd::test;

TEST_CASE("two molecules at distance d: single count in the right bin") {
  auto comp = lj_fluid(2, 10.0, 1.0);
  RdfHistogram hist(comp, 0.05, 5.0);
  SystemState state;
  state.resize(2);
  state.box_length = 10.0;
  state.pos[0] = {2.0, 2.0, 2.0};
  state.pos[1] = {2.0, 2.0, 3.234};
  hist.accumulate(state);

  const auto tables = hist.finalize();
  REQUIRE(tables.size() == 1);
  const auto& t = tables[0];
  const int expected_bin = static_cast<int>(1.234 / 0.05);
  for (std::size_t b = 0; b < t.g.size(); ++b) {
    if (static_cast<int>(b) == expected_bin)
      CHECK(t.g[b] > 0.0);
    else
      CHECK(t.g[b] == 0.0);
  }
  // n_cum at the end counts exactly the one neighbor pair, twice over N=2
  CHECK(t.n_cum.back() == doctest::Approx(1.0));
}

TEST_CASE("single molecule: intramolecular pairs are excluded") {
  SystemComposition comp;
  comp.species = {build_species(
      "dimer", {make_lj_site(0.4, 0, 0, 1, 1, 1), make_lj_site(-0.4, 0, 0, 1, 1, 1)})};
  comp.counts = {1};
  comp.box_length = 8.0;
  comp.temperature = 1.0;
  RdfHistogram hist(comp, 0.02, 4.0);
  SystemState state;
  state.resize(1);
  state.box_length = 8.0;
  state.pos[0] = {4, 4, 4};
  hist.accumulate(state);
  for (const auto& t : hist.finalize())
    for (double g : t.g) CHECK(g == 0.0);
}

TEST_CASE("FCC lattice: first shell at a/sqrt(2) with 12 neighbors") {
  const double a = 1.5;
  const int cells = 4;
  auto comp = lj_fluid(4 * cells * cells * cells, a * cells, 1.0);
  auto state = init_lattice(comp, 3);
  // strip velocities; only geometry matters
  RdfHistogram hist(comp, 0.02, 0.5 * comp.box_length);
  hist.accumulate(state);
  const auto tables = hist.finalize();
  REQUIRE(tables.size() == 1);
  const auto& t = tables[0];

  const double nn = a / std::sqrt(2.0);
  const int nn_bin = static_cast<int>(nn / 0.02);
  double first_count = 0.0;
  int first_bin = -1;
  for (std::size_t b = 0; b < t.g.size(); ++b) {
    if (t.g[b] > 0.0) {
      first_bin = static_cast<int>(b);
      first_count = t.n_cum[b];
      break;
    }
  }
  CHECK(std::abs(first_bin - nn_bin) <= 1);
  // 12 nearest neighbors per molecule (6N unordered pairs over N molecules)
  CHECK(first_count == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("ideal gas g(r) is 1 within 2% everywhere sampled") {
  const int n = 500;
  auto comp = lj_fluid(n, 7.937, 1.0);  // rho = 1
  RdfHistogram hist(comp, 0.05, 0.5 * comp.box_length);

  Rng rng(41);
  SystemState state;
  state.resize(n);
  state.box_length = comp.box_length;
  const int snapshots = 400;
  for (int s = 0; s < snapshots; ++s) {
    for (auto& r : state.pos)
      r = {rng.uniform(0, comp.box_length), rng.uniform(0, comp.box_length),
           rng.uniform(0, comp.box_length)};
    hist.accumulate(state);
  }
  const auto t = hist.finalize()[0];
  const double half_box = 0.5 * comp.box_length;
  for (std::size_t b = 0; b < t.g.size(); ++b) {
    if (t.r_mid[b] < 0.2 * half_box || t.r_mid[b] > half_box) continue;
    CHECK(t.g[b] == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("doubling the bin width does not drift the normalization") {
  const int n = 200;
  auto comp = lj_fluid(n, 8.0, 1.0);
  RdfHistogram fine(comp, 0.02, 4.0);
  RdfHistogram coarse(comp, 0.04, 4.0);

  Rng rng(4);
  SystemState state;
  state.resize(n);
  state.box_length = 8.0;
  for (int s = 0; s < 60; ++s) {
    for (auto& r : state.pos)
      r = {rng.uniform(0, 8.0), rng.uniform(0, 8.0), rng.uniform(0, 8.0)};
    fine.accumulate(state);
    coarse.accumulate(state);
  }
  const auto tf = fine.finalize()[0];
  const auto tc = coarse.finalize()[0];
  // shell-volume weighted average of two fine bins equals the coarse bin
  for (std::size_t b = 0; b + 1 < tf.g.size() && b / 2 < tc.g.size(); b += 2) {
    const double r0 = b * 0.02, r1 = (b + 1) * 0.02, r2 = (b + 2) * 0.02;
    const double v0 = std::pow(r1, 3) - std::pow(r0, 3);
    const double v1 = std::pow(r2, 3) - std::pow(r1, 3);
    const double avg = (tf.g[b] * v0 + tf.g[b + 1] * v1) / (v0 + v1);
    CHECK(tc.g[b / 2] == doctest::Approx(avg).epsilon(1e-10));
  }
}

TEST_CASE("first_minimum on synthetic tables") {
  std::vector<double> r, g;
  for (int i = 0; i < 150; ++i) {
    const double x = 0.02 * (i + 0.5);
    r.push_back(x);
    // peak near 1.1, minimum near 1.6
    g.push_back(1.0 + 1.8 * std::exp(-30.0 * (x - 1.1) * (x - 1.1)) -
                0.6 * std::exp(-25.0 * (x - 1.6) * (x - 1.6)));
  }
  const double rmin = first_minimum(r, g);
  CHECK(rmin == doctest::Approx(1.6).epsilon(0.02 / 1.6 + 0.02));

  std::vector<double> flat(150, 1.0);
  CHECK(std::isnan(first_minimum(r, flat)));
}

TEST_CASE("solvation number closed forms and counting identity") {
  // g == 1 -> n = 4/3 pi rho r^3
  RdfTable uniform;
  uniform.bin_width = 0.05;
  for (int b = 0; b < 100; ++b) {
    uniform.r_mid.push_back((b + 0.5) * 0.05);
    uniform.g.push_back(1.0);
    uniform.n_cum.push_back(0.0);
  }
  const double rho = 0.7, rmin = 1.5;
  CHECK(solvation_number(uniform, rho, rmin) ==
        doctest::Approx(4.0 / 3.0 * std::numbers::pi * rho * rmin * rmin * rmin).epsilon(1e-12));

  // g == 0 -> n = 0
  RdfTable empty = uniform;
  std::fill(empty.g.begin(), empty.g.end(), 0.0);
  CHECK(solvation_number(empty, rho, rmin) == 0.0);

  // sampled system: integral equals direct per-snapshot neighbor counting
  const int n = 120;
  auto comp = lj_fluid(n, 6.0, 1.0);
  RdfHistogram hist(comp, 0.05, 3.0);
  Rng rng(9);
  SystemState state;
  state.resize(n);
  state.box_length = 6.0;
  double direct_neighbors = 0.0;
  const double r_shell = 1.5;  // bin boundary (30 bins)
  const int snapshots = 25;
  for (int s = 0; s < snapshots; ++s) {
    for (auto& r : state.pos)
      r = {rng.uniform(0, 6.0), rng.uniform(0, 6.0), rng.uniform(0, 6.0)};
    hist.accumulate(state);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (norm(minimum_image(state.pos[i] - state.pos[j], 6.0)) < r_shell)
          direct_neighbors += 1.0;
      }
  }
  direct_neighbors /= snapshots * n;
  const auto table = hist.finalize()[0];
  CHECK(solvation_number(table, table.partner_density, r_shell) ==
        doctest::Approx(direct_neighbors).epsilon(1e-10));
  // the cumulative column carries the same identity
  const int shell_bin = static_cast<int>(r_shell / 0.05) - 1;
  CHECK(table.n_cum[shell_bin] == doctest::Approx(direct_neighbors).epsilon(1e-10));
}

TEST_CASE("global consistency: integral of g equals pair count per molecule") {
  const int n = 80;
  auto comp = lj_fluid(n, 6.0, 1.0);
  RdfHistogram hist(comp, 0.03, 3.0);
  Rng rng(13);
  SystemState state;
  state.resize(n);
  state.box_length = 6.0;
  double pairs_within = 0.0;
  for (int s = 0; s < 20; ++s) {
    for (auto& r : state.pos)
      r = {rng.uniform(0, 6.0), rng.uniform(0, 6.0), rng.uniform(0, 6.0)};
    hist.accumulate(state);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (norm(minimum_image(state.pos[i] - state.pos[j], 6.0)) < 3.0) pairs_within += 1.0;
  }
  const auto t = hist.finalize()[0];
  // 4 pi rho_partner int r^2 g dr = 2 * pairs / (snapshots * N)
  const double lhs = solvation_number(t, t.partner_density, 3.0);
  CHECK(lhs == doctest::Approx(2.0 * pairs_within / (20.0 * n)).epsilon(1e-10));
}

TEST_CASE("dummy sites sample the RDF without changing the energy") {
  SystemComposition bare;
  bare.species = {build_species("mol", {make_lj_site(0, 0, 0, 1, 1, 1)})};
  bare.counts = {20};
  bare.box_length = 6.0;
  bare.temperature = 1.0;

  SystemComposition with_dummy = bare;
  Site dummy;
  dummy.kind = SiteKind::dummy;
  dummy.body_pos = {0.3, 0, 0};
  dummy.mass = 0.0;
  auto sites = bare.species[0].sites;
  sites.push_back(dummy);
  with_dummy.species[0] = build_species("mol", sites);

  auto state = random_state(bare, 6, 0.9);
  ForceFieldOptions opts;
  opts.cutoff = 2.5;
  const double u_bare = total_potential(bare, state, opts);

  // same centers; orientations irrelevant for the bare site
  SystemState state2 = state;
  const double u_dummy = total_potential(with_dummy, state2, opts);
  CHECK(u_dummy == doctest::Approx(u_bare).epsilon(1e-14));

  RdfHistogram hist(with_dummy, 0.05, 3.0);
  CHECK(hist.site_type_count() == 2);  // LJ site + dummy site both sample
  hist.accumulate(state2);
  CHECK(hist.finalize().size() == 3);  // 11, 12, 22 pair tables
}

TEST_CASE("charge sites are not RDF sampling centers") {
  SystemComposition comp;
  comp.species = {build_species("ion_pair", {make_charge_site(0.2, 0, 0, 0.5, 1.0),
                                             make_charge_site(-0.2, 0, 0, -0.5, 1.0),
                                             make_lj_site(0, 0, 0, 1, 1, 1)})};
  comp.counts = {4};
  comp.box_length = 8.0;
  comp.temperature = 1.0;
  RdfHistogram hist(comp, 0.05, 4.0);
  CHECK(hist.site_type_count() == 1);
}

TEST_CASE("rdf input validation") {
  auto comp = lj_fluid(10, 6.0, 1.0);
  CHECK_THROWS_AS(RdfHistogram(comp, 0.0, 3.0), ConfigError);
  CHECK_THROWS_AS(RdfHistogram(comp, 0.02, 3.5), ConfigError);  // beyond L/2
  RdfHistogram ok(comp, 0.02, 3.0);
  CHECK_THROWS_AS(ok.finalize(), Error);  // zero snapshots
}
