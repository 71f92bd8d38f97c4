#include "tmd/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tmd/rng.hpp"

namespace tmd {

void jacobi_eigen3(const Mat3& m, std::array<double, 3>& vals, Mat3& vecs) {
  Mat3 a = m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) vecs(i, j) = (i == j) ? 1.0 : 0.0;

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;

    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = vecs(k, p), vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // sort ascending, keeping columns in step
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });
  Mat3 sorted = vecs;
  for (int j = 0; j < 3; ++j) {
    vals[j] = a(order[j], order[j]);
    for (int i = 0; i < 3; ++i) sorted(i, j) = vecs(i, order[j]);
  }
  vecs = sorted;
}

bool MoleculeSpecies::has_charges() const {
  for (const auto& s : sites)
    if (s.q != 0.0) return true;
  return false;
}

MoleculeSpecies build_species(const std::string& name, std::vector<Site> sites) {
  if (sites.empty()) throw ModelError("species '" + name + "': no sites");

  double mass = 0.0;
  Vec3 com;
  for (const auto& s : sites) {
    if (s.kind == SiteKind::dummy && (s.sigma != 0.0 || s.epsilon != 0.0))
      throw ModelError("species '" + name + "': dummy site with nonzero sigma or epsilon");
    if (s.kind == SiteKind::lj && s.sigma <= 0.0)
      throw ModelError("species '" + name + "': LJ site with sigma <= 0");
    if (s.kind == SiteKind::lj && s.epsilon < 0.0)
      throw ModelError("species '" + name + "': LJ site with epsilon < 0");
    if (s.mass < 0.0) throw ModelError("species '" + name + "': negative site mass");
    mass += s.mass;
    com += s.mass * s.body_pos;
  }
  if (mass <= 0.0) throw ModelError("species '" + name + "': non-positive total mass");
  com *= 1.0 / mass;
  for (auto& s : sites) s.body_pos -= com;

  Mat3 inertia = Mat3::zero();
  for (const auto& s : sites) {
    const Vec3& r = s.body_pos;
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

  std::array<double, 3> moments{};
  Mat3 axes;
  jacobi_eigen3(inertia, moments, axes);

  // principal moments below this fraction of the largest are treated as zero
  // (point particles, linear molecules)
  const double scale = std::max({moments[0], moments[1], moments[2], 0.0});
  for (auto& m : moments) {
    if (m < 1e-12 * scale || m < 1e-300) m = 0.0;
  }

  MoleculeSpecies sp;
  sp.name = name;
  sp.total_mass = mass;
  sp.inertia_principal = {moments[0], moments[1], moments[2]};
  // re-express sites in the principal frame (columns of `axes` are the
  // principal directions in the old body frame)
  for (auto& s : sites) s.body_pos = mat_tvec(axes, s.body_pos);
  sp.sites = std::move(sites);
  for (const auto& s : sp.sites) {
    sp.net_charge += s.q;
    sp.max_extent = std::max(sp.max_extent, norm(s.body_pos));
  }
  for (int k = 0; k < 3; ++k)
    if (sp.inertia_principal[k] > 0.0) ++sp.rotational_dof;
  return sp;
}

MoleculeSpecies parse_species_text(const std::string& text, const std::string& fallback_name) {
  std::string name = fallback_name;
  std::vector<Site> sites;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;

    if (kind == "name") {
      if (!(ls >> name)) throw ModelError("model line " + std::to_string(lineno) + ": missing name");
      continue;
    }

    std::vector<double> nums;
    double v;
    while (ls >> v) nums.push_back(v);
    std::string trailing;
    if (ls.clear(), ls >> trailing)
      throw ModelError("model line " + std::to_string(lineno) + ": trailing junk '" + trailing + "'");

    Site s;
    auto need = [&](std::size_t n) {
      if (nums.size() != n)
        throw ModelError("model line " + std::to_string(lineno) + ": expected " +
                         std::to_string(n) + " numbers after '" + kind + "', got " +
                         std::to_string(nums.size()));
    };
    if (kind == "lj") {
      need(6);
      s.kind = SiteKind::lj;
      s.body_pos = {nums[0], nums[1], nums[2]};
      s.sigma = nums[3];
      s.epsilon = nums[4];
      s.mass = nums[5];
    } else if (kind == "charge") {
      need(5);
      s.kind = SiteKind::charge;
      s.body_pos = {nums[0], nums[1], nums[2]};
      s.q = nums[3];
      s.mass = nums[4];
    } else if (kind == "dummy") {
      if (nums.size() == 6) {
        s.sigma = nums[3];
        s.epsilon = nums[4];
        s.mass = nums[5];
      } else {
        need(4);
        s.mass = nums[3];
      }
      s.kind = SiteKind::dummy;
      s.body_pos = {nums[0], nums[1], nums[2]};
    } else {
      throw ModelError("model line " + std::to_string(lineno) + ": unknown site kind '" + kind + "'");
    }
    sites.push_back(s);
  }
  return build_species(name, std::move(sites));
}

MoleculeSpecies load_species_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open species file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();

  std::string stem = path;
  const auto slash = stem.find_last_of('/');
  if (slash != std::string::npos) stem.erase(0, slash + 1);
  const auto dot = stem.find_last_of('.');
  if (dot != std::string::npos && dot > 0) stem.erase(dot);
  return parse_species_text(buf.str(), stem);
}

int SystemComposition::molecule_count() const {
  int n = 0;
  for (int c : counts) n += c;
  return n;
}

int SystemComposition::site_count() const {
  int n = 0;
  for (std::size_t s = 0; s < species.size(); ++s)
    n += counts[s] * species[s].site_count();
  return n;
}

double SystemComposition::total_charge() const {
  double q = 0.0;
  for (std::size_t s = 0; s < species.size(); ++s) q += counts[s] * species[s].net_charge;
  return q;
}

int SystemComposition::molecule_offset(int s) const {
  int off = 0;
  for (int i = 0; i < s; ++i) off += counts[i];
  return off;
}

int SystemComposition::species_of_molecule(int mol) const {
  int off = 0;
  for (std::size_t s = 0; s < species.size(); ++s) {
    off += counts[s];
    if (mol < off) return static_cast<int>(s);
  }
  throw ModelError("molecule index out of range");
}

void SystemComposition::validate(ElectrostaticsMethod method) const {
  if (species.size() != counts.size())
    throw ConfigError("composition: species/count length mismatch");
  if (molecule_count() <= 0) throw ConfigError("composition: no molecules");
  for (int c : counts)
    if (c < 0) throw ConfigError("composition: negative molecule count");
  if (box_length <= 0.0) throw ConfigError("composition: box length must be positive");
  if (temperature <= 0.0) throw ConfigError("composition: temperature must be positive");

  if (method == ElectrostaticsMethod::ewald) {
    if (std::abs(total_charge()) > 1e-12)
      throw ConfigError("ewald requires an electro-neutral system (net charge " +
                        std::to_string(total_charge()) + ")");
  } else if (method == ElectrostaticsMethod::reaction_field) {
    for (const auto& sp : species)
      if (std::abs(sp.net_charge) > 1e-12)
        throw ConfigError("reaction_field requires neutral molecules; species '" + sp.name +
                          "' carries net charge " + std::to_string(sp.net_charge));
  } else {
    for (const auto& sp : species)
      if (sp.has_charges())
        throw ConfigError("species '" + sp.name +
                          "' has point charges; choose electrostatics = reaction_field or ewald");
  }
}

void SystemState::resize(int n) {
  pos.assign(n, {});
  orient.assign(n, {});
  vel.assign(n, {});
  ang_vel.assign(n, {});
  force.assign(n, {});
  torque.assign(n, {});
}

void SystemState::wrap() {
  const double L = box_length;
  for (auto& r : pos) {
    r.x -= L * std::floor(r.x / L);
    r.y -= L * std::floor(r.y / L);
    r.z -= L * std::floor(r.z / L);
  }
}

void SystemState::check_finite(const char* where) const {
  for (int i = 0; i < molecule_count(); ++i) {
    const bool ok = std::isfinite(pos[i].x) && std::isfinite(pos[i].y) && std::isfinite(pos[i].z) &&
                    std::isfinite(vel[i].x) && std::isfinite(vel[i].y) && std::isfinite(vel[i].z) &&
                    std::isfinite(ang_vel[i].x) && std::isfinite(ang_vel[i].y) &&
                    std::isfinite(ang_vel[i].z) && std::isfinite(orient[i].w);
    if (!ok) {
      std::ostringstream msg;
      msg << where << ": non-finite state for molecule " << i << " (pos " << pos[i].x << " "
          << pos[i].y << " " << pos[i].z << ", vel " << vel[i].x << " " << vel[i].y << " "
          << vel[i].z << ")";
      throw NumericalError(msg.str());
    }
  }
}

double kinetic_energy_trans(const SystemComposition& comp, const SystemState& state) {
  double ke = 0.0;
  for (int i = 0; i < state.molecule_count(); ++i)
    ke += 0.5 * comp.species[comp.species_of_molecule(i)].total_mass * norm2(state.vel[i]);
  return ke;
}

double kinetic_energy_rot(const SystemComposition& comp, const SystemState& state) {
  double ke = 0.0;
  for (int i = 0; i < state.molecule_count(); ++i) {
    const Vec3& I = comp.species[comp.species_of_molecule(i)].inertia_principal;
    const Vec3& w = state.ang_vel[i];
    ke += 0.5 * (I.x * w.x * w.x + I.y * w.y * w.y + I.z * w.z * w.z);
  }
  return ke;
}

int translational_dof(const SystemComposition& comp) {
  return 3 * comp.molecule_count() - 3;
}

int rotational_dof(const SystemComposition& comp) {
  int dof = 0;
  for (std::size_t s = 0; s < comp.species.size(); ++s)
    dof += comp.counts[s] * comp.species[s].rotational_dof;
  return dof;
}

Vec3 total_momentum(const SystemComposition& comp, const SystemState& state) {
  Vec3 p;
  for (int i = 0; i < state.molecule_count(); ++i)
    p += comp.species[comp.species_of_molecule(i)].total_mass * state.vel[i];
  return p;
}

namespace {

Quat random_orientation(Rng& rng) {
  // Shoemake's uniform unit quaternion
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
  return {b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3)};
}

}  // namespace

SystemState init_lattice(const SystemComposition& comp, std::uint64_t seed, int cells) {
  const int n = comp.molecule_count();
  if (n <= 0) throw ModelError("init_lattice: empty composition");

  if (cells == 0) {
    cells = 1;
    while (4 * cells * cells * cells < n) ++cells;
  }
  if (4 * cells * cells * cells < n)
    throw ModelError("init_lattice: " + std::to_string(n) + " molecules exceed lattice capacity " +
                     std::to_string(4 * cells * cells * cells));

  const double L = comp.box_length;
  const double a = L / cells;
  static const Vec3 basis[4] = {{0.0, 0.0, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}};

  SystemState state;
  state.resize(n);
  state.box_length = L;

  Rng rng(seed);

  // lattice sites in deterministic order, molecules assigned by a seeded
  // permutation so mixtures start spatially mixed
  std::vector<int> site_of(n);
  for (int i = 0; i < n; ++i) site_of[i] = i;
  rng.shuffle(site_of);

  for (int i = 0; i < n; ++i) {
    const int s = site_of[i];
    const int cell = s / 4, b = s % 4;
    const int cx = cell % cells, cy = (cell / cells) % cells, cz = cell / (cells * cells);
    state.pos[i] = {(cx + basis[b].x) * a, (cy + basis[b].y) * a, (cz + basis[b].z) * a};
  }

  for (int i = 0; i < n; ++i) {
    const auto& sp = comp.species[comp.species_of_molecule(i)];
    state.orient[i] = (sp.rotational_dof > 0) ? random_orientation(rng) : Quat{};
  }

  // Maxwell-Boltzmann draw
  const double T = comp.temperature;
  for (int i = 0; i < n; ++i) {
    const auto& sp = comp.species[comp.species_of_molecule(i)];
    const double sv = std::sqrt(T / sp.total_mass);
    state.vel[i] = {sv * rng.gaussian(), sv * rng.gaussian(), sv * rng.gaussian()};
    Vec3 w;
    for (int k = 0; k < 3; ++k)
      if (sp.inertia_principal[k] > 0.0) w[k] = std::sqrt(T / sp.inertia_principal[k]) * rng.gaussian();
    state.ang_vel[i] = w;
  }

  // remove center-of-mass drift
  Vec3 p = total_momentum(comp, state);
  double mass = 0.0;
  for (std::size_t s = 0; s < comp.species.size(); ++s)
    mass += comp.counts[s] * comp.species[s].total_mass;
  const Vec3 vdrift = p / mass;
  for (auto& v : state.vel) v -= vdrift;

  // exact rescale: KE_trans = dof_t * T / 2, KE_rot = dof_r * T / 2
  const double ket = kinetic_energy_trans(comp, state);
  const int dof_t = translational_dof(comp);
  if (ket > 0.0) {
    const double s = std::sqrt(0.5 * dof_t * T / ket);
    for (auto& v : state.vel) v *= s;
  }
  const double ker = kinetic_energy_rot(comp, state);
  const int dof_r = rotational_dof(comp);
  if (dof_r > 0 && ker > 0.0) {
    const double s = std::sqrt(0.5 * dof_r * T / ker);
    for (auto& w : state.ang_vel) w *= s;
  }

  state.wrap();
  return state;
}

}  // namespace tmd
