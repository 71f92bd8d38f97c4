#include "tmd/structure.hpp"

#include <cmath>
#include <numbers>

#include "tmd/checkpoint.hpp"

namespace tmd {

RdfHistogram::RdfHistogram(const SystemComposition& comp, double bin_width, double r_max)
    : comp_(&comp), bin_width_(bin_width), r_max_(r_max) {
  if (bin_width <= 0.0) throw ConfigError("rdf: bin width must be positive");
  if (r_max > 0.5 * comp.box_length + 1e-12)
    throw ConfigError("rdf: r_max exceeds half the box length");
  bins_ = static_cast<int>(std::ceil(r_max / bin_width));

  species_type_begin_.resize(comp.species_count() + 1, 0);
  for (int s = 0; s < comp.species_count(); ++s) {
    species_type_begin_[s] = static_cast<int>(type_of_site_.size());
    const auto& sp = comp.species[s];
    for (int k = 0; k < sp.site_count(); ++k) {
      if (sp.sites[k].kind == SiteKind::charge) {
        type_of_site_.push_back(-1);
      } else {
        type_of_site_.push_back(static_cast<int>(types_.size()));
        types_.push_back({s, k, sp.name + std::to_string(k + 1)});
      }
    }
  }
  species_type_begin_[comp.species_count()] = static_cast<int>(type_of_site_.size());

  const int t = static_cast<int>(types_.size());
  counts_.assign(t * (t + 1) / 2, std::vector<std::uint64_t>(bins_, 0));
}

void RdfHistogram::accumulate(const SystemState& state) {
  const auto& comp = *comp_;
  const int n = state.molecule_count();
  const double r_max2 = r_max_ * r_max_;

  // lab-frame sampling positions for RDF-eligible sites
  std::vector<Vec3> site_pos;
  std::vector<int> site_type;
  std::vector<int> mol_begin(n + 1, 0);
  for (int m = 0; m < n; ++m) {
    mol_begin[m] = static_cast<int>(site_pos.size());
    const int s = comp.species_of_molecule(m);
    const auto& sp = comp.species[s];
    for (int k = 0; k < sp.site_count(); ++k) {
      const int t = type_of_site_[species_type_begin_[s] + k];
      if (t < 0) continue;
      site_pos.push_back(state.pos[m] + rotate(state.orient[m], sp.sites[k].body_pos));
      site_type.push_back(t);
    }
  }
  mol_begin[n] = static_cast<int>(site_pos.size());

  // intermolecular pairs only: rigid intramolecular distances are constant
  for (int mi = 0; mi < n; ++mi) {
    for (int mj = mi + 1; mj < n; ++mj) {
      for (int a = mol_begin[mi]; a < mol_begin[mi + 1]; ++a) {
        for (int b = mol_begin[mj]; b < mol_begin[mj + 1]; ++b) {
          const Vec3 d = minimum_image(site_pos[a] - site_pos[b], state.box_length);
          const double d2 = norm2(d);
          if (d2 >= r_max2) continue;
          const int bin = static_cast<int>(std::sqrt(d2) / bin_width_);
          if (bin >= bins_) continue;
          const int ta = std::min(site_type[a], site_type[b]);
          const int tb = std::max(site_type[a], site_type[b]);
          ++counts_[pair_index(ta, tb)][bin];
        }
      }
    }
  }
  ++snapshots_;
}

std::vector<RdfTable> RdfHistogram::finalize() const {
  if (snapshots_ < 1) throw Error("rdf: no snapshots accumulated");
  const auto& comp = *comp_;
  const double volume = comp.volume();

  std::vector<RdfTable> tables;
  const int t = static_cast<int>(types_.size());
  for (int ta = 0; ta < t; ++ta) {
    for (int tb = ta; tb < t; ++tb) {
      const auto& A = types_[ta];
      const auto& B = types_[tb];
      const double n_a = comp.counts[A.species];
      const double n_b = comp.counts[B.species];

      double norm_pairs;
      if (A.species != B.species)
        norm_pairs = n_a * n_b;
      else if (ta != tb)
        norm_pairs = n_a * (n_a - 1.0);
      else
        norm_pairs = n_a * (n_a - 1.0) / 2.0;
      if (norm_pairs <= 0.0) continue;

      RdfTable tab;
      tab.label_a = A.label;
      tab.label_b = B.label;
      tab.species_a = A.species;
      tab.species_b = B.species;
      tab.bin_width = bin_width_;
      tab.snapshots = snapshots_;
      tab.partner_density = (A.species == B.species ? n_b - 1.0 : n_b) / volume;

      const auto& cnt = counts_[pair_index(ta, tb)];
      double cum_pairs = 0.0;
      const double center_count = n_a;
      const double multiplicity = (ta == tb) ? 2.0 : 1.0;
      for (int bin = 0; bin < bins_; ++bin) {
        const double r_lo = bin * bin_width_;
        const double r_hi = std::min((bin + 1) * bin_width_, r_max_);
        const double shell =
            4.0 * std::numbers::pi / 3.0 * (r_hi * r_hi * r_hi - r_lo * r_lo * r_lo);
        const double mean_count = static_cast<double>(cnt[bin]) / static_cast<double>(snapshots_);
        tab.r_mid.push_back(0.5 * (r_lo + r_hi));
        tab.g.push_back(mean_count * volume / (norm_pairs * shell));
        cum_pairs += mean_count;
        tab.n_cum.push_back(cum_pairs * multiplicity / center_count);
      }
      tables.push_back(std::move(tab));
    }
  }
  return tables;
}

void RdfHistogram::serialize(ByteWriter& w) const {
  w.f64(bin_width_);
  w.f64(r_max_);
  w.u32(static_cast<std::uint32_t>(bins_));
  w.i64(snapshots_);
  w.u64(counts_.size());
  for (const auto& c : counts_) {
    w.u64(c.size());
    for (auto v : c) w.u64(v);
  }
}

void RdfHistogram::deserialize(ByteReader& r) {
  bin_width_ = r.f64();
  r_max_ = r.f64();
  bins_ = static_cast<int>(r.u32());
  snapshots_ = r.i64();
  const std::uint64_t np = r.u64();
  if (np != counts_.size()) throw IoError("rdf: checkpoint does not match the composition");
  for (auto& c : counts_) {
    const std::uint64_t nb = r.u64();
    if (nb != c.size()) throw IoError("rdf: corrupted bin count");
    for (auto& v : c) v = r.u64();
  }
}

double first_minimum(const std::vector<double>& r_mid, const std::vector<double>& g) {
  const int n = static_cast<int>(g.size());
  if (n < 5) return std::nan("");

  std::vector<double> smooth(n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - 1), hi = std::min(n - 1, i + 1);
    double s = 0.0;
    for (int k = lo; k <= hi; ++k) s += g[k];
    smooth[i] = s / (hi - lo + 1);
  }

  int peak = -1;
  for (int i = 1; i + 1 < n; ++i) {
    if (smooth[i] > 1.0 && smooth[i] >= smooth[i - 1] && smooth[i] > smooth[i + 1]) {
      peak = i;
      break;
    }
  }
  if (peak < 0) return std::nan("");

  for (int i = peak + 1; i + 1 < n; ++i) {
    if (smooth[i] <= smooth[i - 1] && smooth[i] < smooth[i + 1]) return r_mid[i];
  }
  return std::nan("");
}

double solvation_number(const RdfTable& table, double partner_density, double r_min) {
  double n = 0.0;
  for (std::size_t bin = 0; bin < table.g.size(); ++bin) {
    const double r_lo = bin * table.bin_width;
    const double r_hi = std::min((bin + 1) * table.bin_width, r_min);
    if (r_hi <= r_lo) break;
    const double shell = 4.0 * std::numbers::pi / 3.0 * (r_hi * r_hi * r_hi - r_lo * r_lo * r_lo);
    n += partner_density * table.g[bin] * shell;
  }
  return n;
}

}  // namespace tmd
