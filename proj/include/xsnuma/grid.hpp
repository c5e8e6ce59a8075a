#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "xsnuma/rng.hpp"

// Cross-section data model: per-nuclide pointwise grids, the material table,
// and the unionized energy grid with its per-nuclide index table.

namespace xsnuma {

inline constexpr int kXsChannels = 5;  // total, elastic, absorption, fission, nu-fission

struct NuclideGridPoint {
  double energy;
  double xs[kXsChannels];
};
static_assert(sizeof(NuclideGridPoint) == 48, "layout drives the footprint math");

struct DatasetConfig {
  std::uint32_t n_nuclides = 355;
  std::uint32_t gridpoints_per_nuclide = 11303;
  std::uint32_t n_materials = 12;
  std::uint64_t rng_seed = 42;
};

inline void validate(const DatasetConfig& cfg) {
  if (cfg.n_nuclides == 0) throw std::invalid_argument("dataset needs at least one nuclide");
  if (cfg.gridpoints_per_nuclide < 2)
    throw std::invalid_argument("interpolation needs at least two gridpoints per nuclide");
  if (cfg.n_materials == 0) throw std::invalid_argument("dataset needs at least one material");
}

// ------------------------------------------------------------------ footprints

constexpr std::uint64_t footprint_nuclide_grids_bytes(std::uint64_t n, std::uint64_t m) noexcept {
  return n * m * (1 + kXsChannels) * 8;  // energy + 5 xs values, 8 B each
}

// Unionized grid: n*m energies at 8 B plus an (n*m) x n index table of
// 32-bit entries.
constexpr std::uint64_t footprint_unionized_bytes(std::uint64_t n, std::uint64_t m) noexcept {
  return n * m * (8 + 4 * n);
}

// ------------------------------------------------------------------ containers

// All nuclide grids share one gridpoint count, stored flat: nuclide k owns
// points [k*m, (k+1)*m). Flat storage keeps the allocation byte count equal
// to the footprint formula and gives the placement layer one contiguous
// region to work with.
class NuclideGrids {
 public:
  NuclideGrids() = default;
  NuclideGrids(std::uint32_t n_nuclides, std::uint32_t gridpoints,
               std::vector<NuclideGridPoint> points)
      : n_(n_nuclides), m_(gridpoints), points_(std::move(points)) {
    if (points_.size() != std::size_t(n_) * m_)
      throw std::invalid_argument("nuclide grid storage size mismatch");
    refresh_fingerprint();
  }

  std::uint32_t n_nuclides() const noexcept { return n_; }
  std::uint32_t gridpoints() const noexcept { return m_; }

  std::span<const NuclideGridPoint> nuclide(std::uint32_t k) const {
    if (k >= n_) throw std::out_of_range("nuclide id out of range");
    return {points_.data() + std::size_t(k) * m_, m_};
  }

  std::span<const NuclideGridPoint> flat() const noexcept { return points_; }

  // Identifies the grid data a unionized grid was built from.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  std::uint64_t allocation_bytes() const noexcept {
    return points_.size() * sizeof(NuclideGridPoint);
  }

 private:
  void refresh_fingerprint() {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the raw bytes
    const auto* p = reinterpret_cast<const unsigned char*>(points_.data());
    const std::size_t bytes = points_.size() * sizeof(NuclideGridPoint);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
    fingerprint_ = mix64(h ^ (std::uint64_t(n_) << 32 ^ m_));
  }

  std::uint32_t n_ = 0, m_ = 0;
  std::vector<NuclideGridPoint> points_;
  std::uint64_t fingerprint_ = 0;
};

struct MaterialTable {
  std::vector<std::vector<std::uint32_t>> nuclides;  // per-material nuclide ids
  std::vector<double> selection_weights;             // nonnegative, sums to ~1

  std::size_t n_materials() const noexcept { return nuclides.size(); }

  // Inverse-CDF material pick from a uniform in (0,1).
  std::size_t sample(double u) const noexcept {
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < selection_weights.size(); ++i) {
      cum += selection_weights[i];
      if (u < cum) return i;
    }
    return selection_weights.empty() ? 0 : selection_weights.size() - 1;
  }
};

inline void validate(const MaterialTable& mats, std::uint32_t n_nuclides) {
  if (mats.nuclides.empty()) throw std::invalid_argument("material table is empty");
  if (mats.nuclides.size() != mats.selection_weights.size())
    throw std::invalid_argument("material table weight count mismatch");
  double sum = 0.0;
  for (double w : mats.selection_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative material selection weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("material selection weights do not sum to 1");
  for (const auto& ids : mats.nuclides) {
    if (ids.empty()) throw std::invalid_argument("material with no nuclides");
    for (auto id : ids)
      if (id >= n_nuclides) throw std::invalid_argument("material references unknown nuclide");
  }
}

struct Dataset {
  DatasetConfig config;
  NuclideGrids grids;
  MaterialTable materials;
};

// Unionized energy grid: the sorted union of all nuclide energies plus, per
// union entry, the interpolation index into every nuclide's grid. Row-major
// with stride n_nuclides so one lookup reads one row.
struct UnionizedGrid {
  std::vector<double> energies;       // n*m entries
  std::vector<std::uint32_t> index;   // energies.size() * stride entries
  std::uint32_t stride = 0;           // == n_nuclides
  std::uint64_t source_fingerprint = 0;

  std::uint64_t allocation_bytes() const noexcept {
    return energies.size() * sizeof(double) + index.size() * sizeof(std::uint32_t);
  }
};

// ------------------------------------------------------------------ generation

namespace detail {
inline constexpr std::uint64_t kTagEnergies = 0x656e6572ull;   // per-nuclide grid stream
inline constexpr std::uint64_t kTagMaterials = 0x6d617473ull;  // material table stream

// m strictly ascending energies in (0,1): draw, sort, nudge duplicates up.
inline void fill_nuclide(std::span<NuclideGridPoint> pts, std::uint64_t seed,
                         std::uint32_t nuclide_id) {
  Splitmix64 rng = seeded_stream(seed, kTagEnergies, nuclide_id);
  for (auto& p : pts) p.energy = u64_to_open_unit(rng.next());
  std::sort(pts.begin(), pts.end(),
            [](const NuclideGridPoint& a, const NuclideGridPoint& b) { return a.energy < b.energy; });
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].energy > pts[i - 1].energy))
      pts[i].energy = std::nextafter(pts[i - 1].energy, 1.0);
  for (auto& p : pts)
    for (auto& x : p.xs) x = u64_to_open_unit(rng.next());
}
}  // namespace detail

// Deterministic material table: uniform selection weights, each material a
// duplicate-free random subset of >= 1 nuclides (materials may overlap).
inline MaterialTable generate_materials(const DatasetConfig& cfg) {
  validate(cfg);
  MaterialTable mats;
  mats.nuclides.resize(cfg.n_materials);
  mats.selection_weights.assign(cfg.n_materials, 1.0 / cfg.n_materials);
  Splitmix64 rng = seeded_stream(cfg.rng_seed, detail::kTagMaterials);
  std::vector<std::uint32_t> pool(cfg.n_nuclides);
  for (std::uint32_t mat = 0; mat < cfg.n_materials; ++mat) {
    const std::uint32_t size = 1 + std::uint32_t(rng.next() % cfg.n_nuclides);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::uint32_t i = 0; i < size; ++i) {  // partial Fisher-Yates
      const std::uint32_t j = i + std::uint32_t(rng.next() % (cfg.n_nuclides - i));
      std::swap(pool[i], pool[j]);
    }
    mats.nuclides[mat].assign(pool.begin(), pool.begin() + size);
  }
  return mats;
}

inline Dataset generate_dataset(const DatasetConfig& cfg) {
  validate(cfg);
  std::vector<NuclideGridPoint> points(std::size_t(cfg.n_nuclides) * cfg.gridpoints_per_nuclide);
  for (std::uint32_t k = 0; k < cfg.n_nuclides; ++k)
    detail::fill_nuclide({points.data() + std::size_t(k) * cfg.gridpoints_per_nuclide,
                          cfg.gridpoints_per_nuclide},
                         cfg.rng_seed, k);
  Dataset ds{cfg, NuclideGrids(cfg.n_nuclides, cfg.gridpoints_per_nuclide, std::move(points)),
             generate_materials(cfg)};
  validate(ds.materials, cfg.n_nuclides);
  return ds;
}

// ------------------------------------------------------------------ unionized build

namespace detail {
// Largest i with energies[i] <= e, or -1 when e precedes everything. Ties
// resolve to the last duplicate.
template <class Seq, class Get>
std::ptrdiff_t last_leq(const Seq& seq, double e, Get get) {
  std::ptrdiff_t lo = 0, hi = std::ptrdiff_t(seq.size());
  while (lo < hi) {  // first index with value > e
    const std::ptrdiff_t mid = lo + (hi - lo) / 2;
    if (get(seq[mid]) <= e)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo - 1;
}
}  // namespace detail

// Build the unionized grid. The per-entry work is independent, so it can be
// spread over workers; the result is identical for any worker count.
inline UnionizedGrid build_unionized(const NuclideGrids& grids, unsigned n_workers = 1) {
  const std::uint32_t n = grids.n_nuclides();
  const std::uint32_t m = grids.gridpoints();
  if (n == 0 || m < 2) throw std::invalid_argument("unionized build needs populated grids");

  UnionizedGrid ug;
  ug.stride = n;
  ug.source_fingerprint = grids.fingerprint();
  ug.energies.reserve(std::size_t(n) * m);
  for (const auto& p : grids.flat()) ug.energies.push_back(p.energy);
  std::stable_sort(ug.energies.begin(), ug.energies.end());

  const std::size_t entries = ug.energies.size();
  ug.index.resize(entries * n);
  auto fill_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      const double energy = ug.energies[e];
      std::uint32_t* row = ug.index.data() + e * n;
      for (std::uint32_t k = 0; k < n; ++k) {
        const auto pts = grids.nuclide(k);
        std::ptrdiff_t idx = detail::last_leq(pts, energy,
                                              [](const NuclideGridPoint& p) { return p.energy; });
        idx = std::clamp<std::ptrdiff_t>(idx, 0, std::ptrdiff_t(m) - 2);
        row[k] = std::uint32_t(idx);
      }
    }
  };

  if (n_workers <= 1) {
    fill_range(0, entries);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (entries + n_workers - 1) / n_workers;
    for (unsigned w = 0; w < n_workers; ++w) {
      const std::size_t b = std::min(entries, w * chunk);
      const std::size_t e = std::min(entries, b + chunk);
      if (b < e) pool.emplace_back(fill_range, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return ug;
}

}  // namespace xsnuma
