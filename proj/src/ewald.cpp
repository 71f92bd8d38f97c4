#include "tmd/ewald.hpp"

#include <cmath>
#include <numbers>

namespace tmd {

EwaldParams ewald_tune(double delta, double cutoff, double box_length) {
  if (!(delta > 0.0) || delta > 1e-2)
    throw ConfigError("ewald_tune: accuracy must lie in (0, 1e-2]");
  if (cutoff <= 0.0 || box_length <= 0.0) throw ConfigError("ewald_tune: bad geometry");

  // erfc(alpha rc) = delta, solved by bisection
  double lo = 1e-6 / cutoff, hi = 40.0 / cutoff;
  if (std::erfc(lo * cutoff) < delta)
    throw ConfigError("ewald_tune: accuracy infeasible for this cutoff");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::erfc(mid * cutoff) > delta ? lo : hi) = mid;
  }
  const double alpha = 0.5 * (lo + hi);

  // reciprocal tail: exp(-(pi n / (alpha L))^2) <= delta
  const double x = std::sqrt(-std::log(delta));
  int kmax = static_cast<int>(std::ceil(alpha * box_length * x / std::numbers::pi));
  if (kmax < 1) kmax = 1;
  return {alpha, kmax};
}

Ewald::Ewald(const SystemComposition& comp, EwaldParams params)
    : params_(params), box_length_(comp.box_length) {
  if (params_.alpha <= 0.0) throw ConfigError("ewald: alpha must be positive");
  if (params_.kmax < 1) throw ConfigError("ewald: kmax must be at least 1");
  if (std::abs(comp.total_charge()) > 1e-12)
    throw ConfigError("ewald: system is not electro-neutral");

  const double alpha = params_.alpha;
  const double L = box_length_;

  // reciprocal truncation sanity for explicitly supplied parameters
  const double tail = std::exp(-std::pow(std::numbers::pi * params_.kmax / (alpha * L), 2));
  if (tail > 1e-2)
    warning_ = "ewald: reciprocal truncation estimate " + std::to_string(tail) +
               " at kmax = " + std::to_string(params_.kmax) + " looks too coarse";

  charged_.resize(comp.species_count());
  double sum_q2 = 0.0;
  double intra = 0.0;
  for (int s = 0; s < comp.species_count(); ++s) {
    const auto& sites = comp.species[s].sites;
    for (int k = 0; k < static_cast<int>(sites.size()); ++k)
      if (sites[k].q != 0.0) charged_[s].push_back({k, sites[k].q});
    const long n = comp.counts[s];
    for (const auto& a : charged_[s]) sum_q2 += n * a.q * a.q;

    // excluded intramolecular pairs: the reciprocal sum implies the full
    // erf(alpha r)/r interaction between them, which must come back out;
    // rigid geometry makes this a per-species constant (limit 2 alpha/sqrt(pi)
    // for coincident sites).
    double corr = 0.0;
    for (std::size_t a = 0; a < charged_[s].size(); ++a) {
      for (std::size_t b = a + 1; b < charged_[s].size(); ++b) {
        const Vec3 d = sites[charged_[s][a].site_index].body_pos -
                       sites[charged_[s][b].site_index].body_pos;
        const double r = norm(d);
        const double qq = charged_[s][a].q * charged_[s][b].q;
        if (r < 1e-12)
          corr += qq * 2.0 * alpha / std::sqrt(std::numbers::pi);
        else
          corr += qq * std::erf(alpha * r) / r;
      }
    }
    intra += n * corr;
  }
  self_plus_intra_ = -alpha / std::sqrt(std::numbers::pi) * sum_q2 - intra;

  // k vectors over half space (kx>0) u (kx=0, ky>0) u (kx=ky=0, kz>0),
  // spherical integer cutoff |n| <= kmax
  const double two_pi_over_L = 2.0 * std::numbers::pi / L;
  const double volume = L * L * L;
  const int kmax = params_.kmax;
  for (int nx = 0; nx <= kmax; ++nx) {
    const int ny_lo = (nx == 0) ? 0 : -kmax;
    for (int ny = ny_lo; ny <= kmax; ++ny) {
      const int nz_lo = (nx == 0 && ny == 0) ? 1 : -kmax;
      for (int nz = nz_lo; nz <= kmax; ++nz) {
        const long n2 = static_cast<long>(nx) * nx + static_cast<long>(ny) * ny +
                        static_cast<long>(nz) * nz;
        if (n2 == 0 || n2 > static_cast<long>(kmax) * kmax) continue;
        KVector kv;
        kv.nx = nx;
        kv.ny = ny;
        kv.nz = nz;
        kv.kx = two_pi_over_L * nx;
        kv.ky = two_pi_over_L * ny;
        kv.kz = two_pi_over_L * nz;
        const double k2 = kv.kx * kv.kx + kv.ky * kv.ky + kv.kz * kv.kz;
        // half-space factor 2 folded in
        kv.coeff = 2.0 * (4.0 * std::numbers::pi / volume) *
                   std::exp(-k2 / (4.0 * alpha * alpha)) / k2;
        kvecs_.push_back(kv);
      }
    }
  }
}

void Ewald::evaluate(const Scene& scene, std::vector<Vec3>& force, std::vector<Vec3>& torque,
                     double& u_recip, double& u_self) const {
  using cplx = std::complex<double>;
  u_self = self_plus_intra_;
  u_recip = 0.0;

  // gather charged sites: absolute position, offset from COM, charge
  struct Entry {
    int mol;
    Vec3 pos_off;  // site offset from center
    Vec3 pos;
    double q;
  };
  std::vector<Entry> entries;
  for (int m = 0; m < scene.n_molecules; ++m) {
    const auto& ch = charged_[scene.species_of[m]];
    for (const auto& c : ch) {
      const Vec3 off = scene.site_offset[scene.site_begin[m] + c.site_index];
      entries.push_back({m, off, scene.com[m] + off, c.q});
    }
  }
  const int nq = static_cast<int>(entries.size());
  if (nq == 0) return;

  const int kmax = params_.kmax;
  const double two_pi_over_L = 2.0 * std::numbers::pi / box_length_;

  // e^{i 2 pi n x / L} tables per axis, n = 0..kmax
  std::vector<cplx> ex(static_cast<std::size_t>(nq) * (kmax + 1));
  std::vector<cplx> ey(ex.size()), ez(ex.size());
  for (int a = 0; a < nq; ++a) {
    const std::size_t base = static_cast<std::size_t>(a) * (kmax + 1);
    ex[base] = ey[base] = ez[base] = {1.0, 0.0};
    const cplx fx{std::cos(two_pi_over_L * entries[a].pos.x),
                  std::sin(two_pi_over_L * entries[a].pos.x)};
    const cplx fy{std::cos(two_pi_over_L * entries[a].pos.y),
                  std::sin(two_pi_over_L * entries[a].pos.y)};
    const cplx fz{std::cos(two_pi_over_L * entries[a].pos.z),
                  std::sin(two_pi_over_L * entries[a].pos.z)};
    for (int k = 1; k <= kmax; ++k) {
      ex[base + k] = ex[base + k - 1] * fx;
      ey[base + k] = ey[base + k - 1] * fy;
      ez[base + k] = ez[base + k - 1] * fz;
    }
  }
  auto phase = [&](int a, const KVector& kv) -> cplx {
    const std::size_t base = static_cast<std::size_t>(a) * (kmax + 1);
    cplx e = ex[base + kv.nx];
    const cplx vy = ey[base + std::abs(kv.ny)];
    e *= (kv.ny >= 0) ? vy : std::conj(vy);
    const cplx vz = ez[base + std::abs(kv.nz)];
    e *= (kv.nz >= 0) ? vz : std::conj(vz);
    return e;
  };

  std::vector<cplx> site_phase(nq);
  for (const auto& kv : kvecs_) {
    cplx S{0.0, 0.0};
    for (int a = 0; a < nq; ++a) {
      site_phase[a] = phase(a, kv);
      S += entries[a].q * site_phase[a];
    }
    u_recip += 0.5 * kv.coeff * std::norm(S);

    const Vec3 kvek{kv.kx, kv.ky, kv.kz};
    for (int a = 0; a < nq; ++a) {
      // F = q coeff k Im(e^{ikr} S*)
      const double im = site_phase[a].imag() * S.real() - site_phase[a].real() * S.imag();
      const Vec3 f = (entries[a].q * kv.coeff * im) * kvek;
      force[entries[a].mol] += f;
      torque[entries[a].mol] += cross(entries[a].pos_off, f);
    }
  }
}

}  // namespace tmd
