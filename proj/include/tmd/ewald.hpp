// Ewald summation for point charges in a cubic periodic box, tin-foil
// boundary: erfc-screened real-space pairs (handled in the pair loop),
// reciprocal-space sum over integer k shells, self term, and the
// intramolecular excluded-pair correction for rigid molecules.
#pragma once

#include <complex>
#include <string>
#include <vector>

#include "tmd/potentials.hpp"

namespace tmd {

struct EwaldParams {
  double alpha = 0.0;  // inverse length
  int kmax = 0;        // integer shell radius, |n| <= kmax
};

// Chooses alpha so the real-space truncation error estimate erfc(alpha r_c)
// equals delta and kmax so the reciprocal estimate exp(-(pi n / alpha L)^2)
// is below delta.
EwaldParams ewald_tune(double delta, double cutoff, double box_length);

class Ewald {
 public:
  Ewald(const SystemComposition& comp, EwaldParams params);

  double alpha() const { return params_.alpha; }
  int kmax() const { return params_.kmax; }
  // non-empty when explicitly supplied parameters look too loose
  const std::string& warning() const { return warning_; }

  // Adds reciprocal-space forces/torques; returns the reciprocal energy and
  // the constant self + intramolecular correction.
  void evaluate(const Scene& scene, std::vector<Vec3>& force, std::vector<Vec3>& torque,
                double& u_recip, double& u_self) const;

 private:
  struct ChargedSite {
    int site_index;  // within species site list
    double q;
  };

  EwaldParams params_;
  double box_length_ = 0.0;
  double self_plus_intra_ = 0.0;
  std::vector<std::vector<ChargedSite>> charged_;  // per species
  std::string warning_;

  struct KVector {
    int nx, ny, nz;
    double kx, ky, kz;
    double coeff;  // 4 pi / V * exp(-k^2 / 4 alpha^2) / k^2  (half-space doubled)
  };
  std::vector<KVector> kvecs_;
};

}  // namespace tmd
