#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "tmd/model.hpp"

using namespace tmd;

namespace {

Site lj_site(double x, double y, double z, double sigma, double eps, double mass) {
  Site s;
  s.kind = SiteKind::lj;
  s.body_pos = {x, y, z};
  s.sigma = sigma;
  s.epsilon = eps;
  s.mass = mass;
  return s;
}

Site charge_site(double x, double y, double z, double q, double mass) {
  Site s;
  s.kind = SiteKind::charge;
  s.body_pos = {x, y, z};
  s.q = q;
  s.mass = mass;
  return s;
}

// independent oracle: eigenvalues of a symmetric 3x3 via the closed-form
// trigonometric solution of the characteristic cubic
std::array<double, 3> eigenvalues_closed_form(const Mat3& m) {
  const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
  const double q = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
  if (p1 == 0.0) {
    std::array<double, 3> v{m(0, 0), m(1, 1), m(2, 2)};
    std::sort(v.begin(), v.end());
    return v;
  }
  const double p2 = std::pow(m(0, 0) - q, 2) + std::pow(m(1, 1) - q, 2) +
                    std::pow(m(2, 2) - q, 2) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  Mat3 b;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b(i, j) = (m(i, j) - (i == j ? q : 0.0)) / p;
  const double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                      b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                      b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
  double r = detb / 2.0;
  r = std::clamp(r, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double e2 = 3.0 * q - e1 - e3;
  std::array<double, 3> v{e1, e2, e3};
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("point particle: zero inertia, zero charge") {
  auto sp = build_species("lj1", {lj_site(0, 0, 0, 1.0, 1.0, 1.0)});
  CHECK(sp.total_mass == 1.0);
  CHECK(sp.inertia_principal.x == 0.0);
  CHECK(sp.inertia_principal.y == 0.0);
  CHECK(sp.inertia_principal.z == 0.0);
  CHECK(sp.net_charge == 0.0);
  CHECK(sp.rotational_dof == 0);
}

TEST_CASE("dumbbell inertia") {
  auto sp = build_species("dumbbell", {lj_site(0.5, 0, 0, 1, 1, 1), lj_site(-0.5, 0, 0, 1, 1, 1)});
  // axis moment 0, transverse moments 2 * 1 * 0.25
  std::array<double, 3> moments{sp.inertia_principal.x, sp.inertia_principal.y,
                                sp.inertia_principal.z};
  std::sort(moments.begin(), moments.end());
  CHECK(moments[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(moments[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(moments[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sp.rotational_dof == 2);
}

TEST_CASE("water-like species matches brute-force inertia eigendecomposition") {
  std::vector<Site> sites = {lj_site(0.01, 0.02, -0.01, 0.31, 0.65, 16.0),
                             charge_site(0.095, 0.123, 0.04, 0.42, 1.0),
                             charge_site(-0.081, 0.131, -0.02, 0.42, 1.0)};
  auto sp = build_species("waterish", sites);

  // oracle: re-center by hand, build sum m (|r|^2 I - r r^T), closed-form eigenvalues
  double mass = 0.0;
  Vec3 com;
  for (const auto& s : sites) {
    mass += s.mass;
    com += s.mass * s.body_pos;
  }
  com *= 1.0 / mass;
  Mat3 inertia = Mat3::zero();
  for (const auto& s : sites) {
    const Vec3 r = s.body_pos - com;
    const double r2 = norm2(r);
    inertia(0, 0) += s.mass * (r2 - r.x * r.x);
    inertia(1, 1) += s.mass * (r2 - r.y * r.y);
    inertia(2, 2) += s.mass * (r2 - r.z * r.z);
    inertia(0, 1) -= s.mass * r.x * r.y;
    inertia(0, 2) -= s.mass * r.x * r.z;
    inertia(1, 2) -= s.mass * r.y * r.z;
  }
  inertia(1, 0) = inertia(0, 1);
  inertia(2, 0) = inertia(0, 2);
  inertia(2, 1) = inertia(1, 2);
  const auto expected = eigenvalues_closed_form(inertia);

  std::array<double, 3> got{sp.inertia_principal.x, sp.inertia_principal.y, sp.inertia_principal.z};
  std::sort(got.begin(), got.end());
  for (int k = 0; k < 3; ++k) CHECK(got[k] == doctest::Approx(expected[k]).epsilon(1e-10));

  // body frame is principal: rebuild the tensor from the stored sites,
  // off-diagonals must vanish
  Mat3 check = Mat3::zero();
  for (const auto& s : sp.sites) {
    const Vec3& r = s.body_pos;
    const double r2 = norm2(r);
    check(0, 0) += s.mass * (r2 - r.x * r.x);
    check(0, 1) -= s.mass * r.x * r.y;
    check(0, 2) -= s.mass * r.x * r.z;
    check(1, 2) -= s.mass * r.y * r.z;
  }
  CHECK(std::abs(check(0, 1)) < 1e-12);
  CHECK(std::abs(check(0, 2)) < 1e-12);
  CHECK(std::abs(check(1, 2)) < 1e-12);

  CHECK(sp.net_charge == doctest::Approx(0.84));
}

TEST_CASE("species construction is idempotent") {
  auto sp = build_species("d", {lj_site(0.7, 0, 0, 1, 1, 1), lj_site(-0.3, 0, 0, 1, 1, 3)});
  auto sp2 = build_species("d", sp.sites);
  REQUIRE(sp2.site_count() == sp.site_count());
  for (int k = 0; k < sp.site_count(); ++k) {
    CHECK(sp2.sites[k].body_pos.x == doctest::Approx(sp.sites[k].body_pos.x).epsilon(1e-14));
    CHECK(sp2.sites[k].body_pos.y == doctest::Approx(sp.sites[k].body_pos.y).epsilon(1e-14));
    CHECK(sp2.sites[k].body_pos.z == doctest::Approx(sp.sites[k].body_pos.z).epsilon(1e-14));
  }
  CHECK(sp2.inertia_principal.x == doctest::Approx(sp.inertia_principal.x));
}

TEST_CASE("model validation errors") {
  CHECK_THROWS_AS(build_species("m", {lj_site(0, 0, 0, 1, 1, 0.0)}), ModelError);
  Site bad_dummy;
  bad_dummy.kind = SiteKind::dummy;
  bad_dummy.sigma = 0.5;
  bad_dummy.mass = 1.0;
  CHECK_THROWS_AS(build_species("m", {bad_dummy}), ModelError);
  CHECK_THROWS_AS(build_species("m", {}), ModelError);
}

TEST_CASE("species file parsing") {
  const char* path = "test_species_tmp.model";
  {
    std::ofstream out(path);
    out << "# two-center model with a charge\n";
    out << "name dimer\n";
    out << "lj  0.5 0 0  1.0 1.0  1.0\n";
    out << "lj -0.5 0 0  1.0 1.0  1.0   # back site\n";
    out << "charge 0 0 0  0.0  0.0\n";
    out << "dummy 0 0.2 0  0.5\n";
  }
  auto sp = load_species_file(path);
  CHECK(sp.name == "dimer");
  CHECK(sp.site_count() == 4);
  CHECK(sp.total_mass == doctest::Approx(2.5));
  std::remove(path);

  CHECK_THROWS_AS(parse_species_text("lj 0 0 0 1 1\n", "broken"), ModelError);
  CHECK_THROWS_AS(parse_species_text("orbital 0 0 0 1\n", "broken"), ModelError);
  CHECK_THROWS_AS(load_species_file("does_not_exist.model"), IoError);
}

TEST_CASE("FCC lattice: N=4 unit cell") {
  SystemComposition comp;
  comp.species = {build_species("a", {lj_site(0, 0, 0, 1, 1, 1)})};
  comp.counts = {4};
  comp.box_length = 2.0;
  comp.temperature = 1.0;
  auto state = init_lattice(comp, 7);

  std::set<std::array<int, 3>> found;
  for (const auto& r : state.pos)
    found.insert({static_cast<int>(std::lround(r.x * 2)), static_cast<int>(std::lround(r.y * 2)),
                  static_cast<int>(std::lround(r.z * 2))});
  const std::set<std::array<int, 3>> expected = {{0, 0, 0}, {0, 2, 2}, {2, 0, 2}, {2, 2, 0}};
  CHECK(found == expected);
}

TEST_CASE("lattice initialization is deterministic and thermalized") {
  SystemComposition comp;
  comp.species = {build_species("a", {lj_site(0, 0, 0, 1, 1, 1)}),
                  build_species("b", {lj_site(0.3, 0, 0, 1, 0.5, 2), lj_site(-0.3, 0, 0, 1, 0.5, 2)})};
  comp.counts = {300, 200};
  comp.box_length = 12.0;
  comp.temperature = 2.0;

  auto s1 = init_lattice(comp, 42);
  auto s2 = init_lattice(comp, 42);
  REQUIRE(s1.molecule_count() == 500);
  for (int i = 0; i < 500; ++i) {
    CHECK(s1.pos[i].x == s2.pos[i].x);
    CHECK(s1.vel[i].y == s2.vel[i].y);
    CHECK(s1.orient[i].w == s2.orient[i].w);
    CHECK(s1.ang_vel[i].z == s2.ang_vel[i].z);
  }

  const Vec3 p = total_momentum(comp, s1);
  CHECK(std::abs(p.x) < 1e-12);
  CHECK(std::abs(p.y) < 1e-12);
  CHECK(std::abs(p.z) < 1e-12);

  // oracle: direct average of 1/2 m v^2 per translational DOF
  double ke = 0.0;
  for (int i = 0; i < 500; ++i)
    ke += 0.5 * comp.species[comp.species_of_molecule(i)].total_mass * norm2(s1.vel[i]);
  CHECK(ke / translational_dof(comp) == doctest::Approx(comp.temperature / 2.0).epsilon(1e-9));

  // rotational DOFs at T as well (only species b rotates, 2 axes each)
  CHECK(rotational_dof(comp) == 400);
  CHECK(kinetic_energy_rot(comp, s1) / 400 == doctest::Approx(1.0).epsilon(1e-9));

  for (const auto& r : s1.pos) {
    CHECK(r.x >= 0.0);
    CHECK(r.x < comp.box_length);
  }

  CHECK_THROWS_AS(init_lattice(comp, 1, 4), ModelError);  // 4 cells hold only 256
}

TEST_CASE("composition validation") {
  SystemComposition comp;
  comp.species = {build_species("ion", {charge_site(0, 0, 0, 1.0, 1.0)})};
  comp.counts = {8};
  comp.box_length = 10.0;
  comp.temperature = 1.0;
  CHECK_THROWS_AS(comp.validate(ElectrostaticsMethod::ewald), ConfigError);   // not neutral
  CHECK_THROWS_AS(comp.validate(ElectrostaticsMethod::reaction_field), ConfigError);
  CHECK_THROWS_AS(comp.validate(ElectrostaticsMethod::none), ConfigError);    // charges need a method

  comp.species.push_back(build_species("counter", {charge_site(0, 0, 0, -1.0, 1.0)}));
  comp.counts.push_back(8);
  CHECK_NOTHROW(comp.validate(ElectrostaticsMethod::ewald));
  CHECK_THROWS_AS(comp.validate(ElectrostaticsMethod::reaction_field), ConfigError);
}
