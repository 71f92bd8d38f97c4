#include "tmd/potentials.hpp"

#include <algorithm>

namespace tmd {

LrcTerms lj_lrc(const SystemComposition& comp, double cutoff) {
  if (cutoff <= 0.0) throw ConfigError("lj_lrc: cutoff must be positive");

  // flatten LJ site types: (species, site) with instance count = molecule count
  struct SiteType {
    double sigma, epsilon;
    long count;
  };
  std::vector<SiteType> types;
  for (int s = 0; s < comp.species_count(); ++s)
    for (const auto& site : comp.species[s].sites)
      if (site.kind != SiteKind::charge && site.epsilon > 0.0)
        types.push_back({site.sigma, site.epsilon, static_cast<long>(comp.counts[s])});

  double k = 0.0;
  for (const auto& a : types) {
    for (const auto& b : types) {
      const double sigma = 0.5 * (a.sigma + b.sigma);
      const double eps = std::sqrt(a.epsilon * b.epsilon);
      const double sr3 = sigma * sigma * sigma / (cutoff * cutoff * cutoff);
      const double sr9 = sr3 * sr3 * sr3;
      k += (8.0 * std::numbers::pi / 3.0) * static_cast<double>(a.count) *
           static_cast<double>(b.count) * eps * sigma * sigma * sigma * (sr9 / 3.0 - sr3);
    }
  }
  return {k};
}

PairTable::PairTable(const SystemComposition& comp, double cutoff, ElectrostaticsMethod method,
                     double eps_rf, double ewald_alpha)
    : n_species_(comp.species_count()), cutoff_(cutoff), method_(method), ewald_alpha_(ewald_alpha) {
  if (cutoff <= 0.0) throw ConfigError("pair table: cutoff must be positive");
  if (cutoff > 0.5 * comp.box_length + 1e-12)
    throw ConfigError("pair table: cutoff " + std::to_string(cutoff) +
                      " exceeds half the box length " + std::to_string(0.5 * comp.box_length));

  if (method == ElectrostaticsMethod::reaction_field) {
    if (!(eps_rf > 1.0) && !std::isinf(eps_rf))
      throw ConfigError("reaction field: epsilon_rf must exceed 1");
    rf_factor_ = reaction_field_factor(eps_rf);
    rf_r3inv_ = rf_factor_ / (cutoff * cutoff * cutoff);
    rf_shift_ = -(1.0 + rf_factor_) / cutoff;
  }
  if (method == ElectrostaticsMethod::ewald && ewald_alpha <= 0.0)
    throw ConfigError("pair table: ewald method requires alpha > 0");

  terms_.resize(static_cast<std::size_t>(n_species_) * n_species_);
  for (int sa = 0; sa < n_species_; ++sa) {
    for (int sb = 0; sb < n_species_; ++sb) {
      SpeciesPairTerms& t = terms_[sa * n_species_ + sb];
      const auto& A = comp.species[sa].sites;
      const auto& B = comp.species[sb].sites;
      for (int ia = 0; ia < static_cast<int>(A.size()); ++ia) {
        for (int ib = 0; ib < static_cast<int>(B.size()); ++ib) {
          const Site& a = A[ia];
          const Site& b = B[ib];
          if (a.kind != SiteKind::charge && b.kind != SiteKind::charge) {
            const double eps = std::sqrt(a.epsilon * b.epsilon);
            if (eps > 0.0) {
              const double sigma = 0.5 * (a.sigma + b.sigma);
              const double s3 = sigma * sigma * sigma;
              const double s6 = s3 * s3;
              t.lj.push_back({ia, ib, 4.0 * eps * s6 * s6, 4.0 * eps * s6});
            }
          }
          if (method != ElectrostaticsMethod::none && a.q != 0.0 && b.q != 0.0)
            t.qq.push_back({ia, ib, a.q * b.q});
        }
      }
    }
  }

  single_lj_only_ = true;
  for (const auto& sp : comp.species) {
    if (sp.site_count() != 1 || sp.sites[0].kind != SiteKind::lj) single_lj_only_ = false;
  }
}

Scene build_scene(const SystemComposition& comp, const SystemState& state, const PairTable& table,
                  bool want_volume_derivs) {
  Scene sc;
  sc.comp = &comp;
  sc.table = &table;
  sc.box_length = state.box_length;
  sc.n_molecules = state.molecule_count();
  sc.want_volume_derivs = want_volume_derivs;
  sc.com = state.pos;
  sc.species_of.resize(sc.n_molecules);
  sc.site_begin.resize(sc.n_molecules + 1);

  int total_sites = 0;
  for (int i = 0; i < sc.n_molecules; ++i) {
    const int s = comp.species_of_molecule(i);
    sc.species_of[i] = s;
    sc.site_begin[i] = total_sites;
    total_sites += comp.species[s].site_count();
  }
  sc.site_begin[sc.n_molecules] = total_sites;

  sc.site_offset.resize(total_sites);
  for (int i = 0; i < sc.n_molecules; ++i) {
    const auto& sites = comp.species[sc.species_of[i]].sites;
    const int base = sc.site_begin[i];
    if (sites.size() == 1 && norm2(sites[0].body_pos) == 0.0) {
      sc.site_offset[base] = {};
    } else {
      for (std::size_t k = 0; k < sites.size(); ++k)
        sc.site_offset[base + k] = rotate(state.orient[i], sites[k].body_pos);
    }
  }
  return sc;
}

void EvalAccum::add(const EvalAccum& o) {
  for (std::size_t i = 0; i < force.size(); ++i) {
    force[i] += o.force[i];
    torque[i] += o.torque[i];
  }
  u_lj += o.u_lj;
  u_elec_real += o.u_elec_real;
  u_rf += o.u_rf;
  s1 += o.s1;
  s2 += o.s2;
  virial += o.virial;
}

std::pair<int, int> unflatten_pair(long p, int n) {
  // row base(i) = i*n - i*(i+1)/2
  auto base = [n](long i) { return i * n - i * (i + 1) / 2; };
  long i = static_cast<long>(n - 2 -
                             std::floor((std::sqrt(8.0 * (pair_count(n) - 1 - p) + 1.0) - 1.0) / 2.0));
  if (i < 0) i = 0;
  while (i > 0 && base(i) > p) --i;
  while (base(i + 1) <= p) ++i;
  const int j = static_cast<int>(p - base(i)) + static_cast<int>(i) + 1;
  return {static_cast<int>(i), j};
}

namespace {

// single LJ site per molecule: site == center, no torques
void evaluate_range_single_site(const Scene& sc, long first, long last, EvalAccum& acc) {
  const int n = sc.n_molecules;
  const double box = sc.box_length;
  const double rc2 = sc.table->cutoff2();
  const bool vderiv = sc.want_volume_derivs;
  auto [i, j] = unflatten_pair(first, n);

  for (long p = first; p < last; ++p) {
    const Vec3 rv = minimum_image(sc.com[i] - sc.com[j], box);
    const double r2 = norm2(rv);
    if (r2 < rc2) {
      const auto& t = sc.table->terms(sc.species_of[i], sc.species_of[j]).lj[0];
      const double inv_r2 = 1.0 / r2;
      const double ir6 = inv_r2 * inv_r2 * inv_r2;
      const double a12 = t.c12 * ir6 * ir6;
      const double a6 = t.c6 * ir6;
      acc.u_lj += a12 - a6;
      const double du_r = -12.0 * a12 + 6.0 * a6;  // u'(r) * r
      const double fscale = -du_r * inv_r2;
      const Vec3 f = fscale * rv;
      acc.force[i] += f;
      acc.force[j] -= f;
      acc.virial += dot(rv, f);
      if (vderiv) {
        acc.s1 += du_r;
        acc.s2 += 156.0 * a12 - 42.0 * a6;  // u''(r) * r^2
      }
    }
    if (++j == n) {
      ++i;
      j = i + 1;
    }
  }
}

}  // namespace

void evaluate_pair_range(const Scene& sc, long first, long last, EvalAccum& acc) {
  if (first >= last) return;
  const PairTable& table = *sc.table;
  if (table.single_lj_only() && table.method() != ElectrostaticsMethod::ewald) {
    evaluate_range_single_site(sc, first, last, acc);
    return;
  }

  const int n = sc.n_molecules;
  const double box = sc.box_length;
  const double rc2 = table.cutoff2();
  const double rc = table.cutoff();
  const bool vderiv = sc.want_volume_derivs;
  const ElectrostaticsMethod method = table.method();
  const double alpha = table.ewald_alpha();
  const double two_alpha_over_sqrt_pi = 2.0 * alpha / std::sqrt(std::numbers::pi);

  // species-pair reach for the early centre-distance reject
  const auto& comp = *sc.comp;
  std::vector<double> reach(comp.species_count());
  for (int s = 0; s < comp.species_count(); ++s) reach[s] = comp.species[s].max_extent;

  auto [i, j] = unflatten_pair(first, n);
  for (long p = first; p < last; ++p) {
    const Vec3 R = minimum_image(sc.com[i] - sc.com[j], box);
    const double R2 = norm2(R);
    const int si = sc.species_of[i], sj = sc.species_of[j];
    const double rmax = rc + reach[si] + reach[sj];
    if (R2 < rmax * rmax) {
      const auto& terms = table.terms(si, sj);
      const int base_i = sc.site_begin[i], base_j = sc.site_begin[j];
      double s1_pair = 0.0, s2_pair = 0.0;

      for (const auto& t : terms.lj) {
        const Vec3 da = sc.site_offset[base_i + t.site_a];
        const Vec3 db = sc.site_offset[base_j + t.site_b];
        const Vec3 rv = R + da - db;
        const double r2 = norm2(rv);
        if (r2 >= rc2) continue;
        const double inv_r2 = 1.0 / r2;
        const double ir6 = inv_r2 * inv_r2 * inv_r2;
        const double a12 = t.c12 * ir6 * ir6;
        const double a6 = t.c6 * ir6;
        acc.u_lj += a12 - a6;
        const double du_r = -12.0 * a12 + 6.0 * a6;
        const double d2u_r2 = 156.0 * a12 - 42.0 * a6;
        const Vec3 f = (-du_r * inv_r2) * rv;
        acc.force[i] += f;
        acc.force[j] -= f;
        acc.torque[i] += cross(da, f);
        acc.torque[j] -= cross(db, f);
        acc.virial += dot(R, f);
        if (vderiv) {
          const double arr = dot(rv, R) * inv_r2;  // a / r
          s1_pair += du_r * arr;
          s2_pair += d2u_r2 * arr * arr + du_r * inv_r2 * (R2 - dot(rv, R) * arr);
        }
      }

      for (const auto& t : terms.qq) {
        const Vec3 da = sc.site_offset[base_i + t.site_a];
        const Vec3 db = sc.site_offset[base_j + t.site_b];
        const Vec3 rv = R + da - db;
        const double r2 = norm2(rv);
        if (r2 >= rc2) continue;
        const double inv_r2 = 1.0 / r2;
        const double r = std::sqrt(r2);
        double u, du_r, d2u_r2;
        if (method == ElectrostaticsMethod::ewald) {
          const double e = std::erfc(alpha * r) * t.qq / r;
          const double g = t.qq * two_alpha_over_sqrt_pi * std::exp(-alpha * alpha * r2);
          u = e;
          du_r = -(e + g);
          d2u_r2 = 0.0;  // volume derivatives are not defined for ewald runs
          acc.u_elec_real += u;
        } else {
          u = t.qq / r;
          du_r = -u;
          d2u_r2 = 2.0 * u;
          acc.u_elec_real += u;
          if (method == ElectrostaticsMethod::reaction_field) {
            const double rf = t.qq * table.rf_r3inv() * r2;
            acc.u_rf += rf + t.qq * table.rf_shift();
            du_r += 2.0 * rf;
            d2u_r2 += 2.0 * rf;
          }
        }
        const Vec3 f = (-du_r * inv_r2) * rv;
        acc.force[i] += f;
        acc.force[j] -= f;
        acc.torque[i] += cross(da, f);
        acc.torque[j] -= cross(db, f);
        acc.virial += dot(R, f);
        if (vderiv && method != ElectrostaticsMethod::ewald) {
          const double arr = dot(rv, R) * inv_r2;
          s1_pair += du_r * arr;
          s2_pair += d2u_r2 * arr * arr + du_r * inv_r2 * (R2 - dot(rv, R) * arr);
        }
      }

      acc.s1 += s1_pair;
      acc.s2 += s2_pair;
    }
    if (++j == n) {
      ++i;
      j = i + 1;
    }
  }
}

}  // namespace tmd
