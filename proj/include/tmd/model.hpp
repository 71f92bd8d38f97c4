// Molecular models: interaction sites, rigid species, system composition and
// the dynamic state. Internal units are reduced Lennard-Jones units
// (sigma_ref = eps_ref = m_ref = kB = 1).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmd/energy.hpp"
#include "tmd/error.hpp"
#include "tmd/geom.hpp"

namespace tmd {

enum class SiteKind { lj, charge, dummy };

struct Site {
  SiteKind kind = SiteKind::lj;
  Vec3 body_pos;      // body frame, relative to the center of mass after build
  double sigma = 0.0;
  double epsilon = 0.0;
  double q = 0.0;
  double mass = 0.0;
};

// Rigid multi-site species. Construction re-centers the body frame on the
// center of mass and rotates it into the principal axes of inertia.
struct MoleculeSpecies {
  std::string name;
  std::vector<Site> sites;
  double total_mass = 0.0;
  Vec3 inertia_principal;   // principal moments, ascending axis order not guaranteed
  double net_charge = 0.0;
  int rotational_dof = 0;   // count of nonzero principal moments
  double max_extent = 0.0;  // largest |body_pos| over sites

  bool has_charges() const;
  int site_count() const { return static_cast<int>(sites.size()); }
};

MoleculeSpecies build_species(const std::string& name, std::vector<Site> sites);

// Plain-text model file, one site per line:
//   lj     x y z sigma epsilon mass
//   charge x y z q mass
//   dummy  x y z [sigma epsilon] mass     (sigma/epsilon must be 0 if given)
// plus optional "name <id>" and "#" comments. See docs/formats.md.
MoleculeSpecies load_species_file(const std::string& path);
MoleculeSpecies parse_species_text(const std::string& text, const std::string& fallback_name);

enum class ElectrostaticsMethod { none, reaction_field, ewald };

struct SystemComposition {
  std::vector<MoleculeSpecies> species;
  std::vector<int> counts;
  double box_length = 0.0;
  double temperature = 0.0;

  int species_count() const { return static_cast<int>(species.size()); }
  int molecule_count() const;
  int site_count() const;
  double volume() const { return box_length * box_length * box_length; }
  double total_charge() const;

  // molecules are ordered by species: [offset(s), offset(s+1)) belong to s
  int molecule_offset(int s) const;
  int species_of_molecule(int mol) const;

  // throws ConfigError on violated invariants for the chosen method
  void validate(ElectrostaticsMethod method) const;
};

// Per-molecule dynamic state plus cached force-field outputs.
struct SystemState {
  std::vector<Vec3> pos;        // molecular centers of mass, wrapped to [0, L)
  std::vector<Quat> orient;     // body -> lab
  std::vector<Vec3> vel;        // center-of-mass velocities
  std::vector<Vec3> ang_vel;    // body-frame angular velocities
  double box_length = 0.0;

  // caches, refreshed after every force evaluation
  std::vector<Vec3> force;      // lab frame, per molecule
  std::vector<Vec3> torque;     // lab frame, about the molecular center of mass
  EnergyBreakdown energy;
  double virial = 0.0;          // molecular virial sum R_ij . F_ij

  int molecule_count() const { return static_cast<int>(pos.size()); }
  void resize(int n);
  void wrap();
  void check_finite(const char* where) const;
};

// FCC lattice start: random site assignment, random orientations,
// Maxwell-Boltzmann velocities rescaled to T with zero total momentum.
// `cells` = 0 chooses the smallest lattice that fits all molecules; an
// explicit value throws ModelError if 4*cells^3 < N.
SystemState init_lattice(const SystemComposition& comp, std::uint64_t seed, int cells = 0);

// Kinetic bookkeeping (reduced units, kB = 1).
double kinetic_energy_trans(const SystemComposition& comp, const SystemState& state);
double kinetic_energy_rot(const SystemComposition& comp, const SystemState& state);
int translational_dof(const SystemComposition& comp);  // 3N - 3
int rotational_dof(const SystemComposition& comp);
Vec3 total_momentum(const SystemComposition& comp, const SystemState& state);

}  // namespace tmd
