#pragma once

#include <array>
#include <atomic>
#include <barrier>
#include <bit>
#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "xsnuma/grid.hpp"
#include "xsnuma/rng.hpp"

// The lookup kernel: energy search, interpolation, macroscopic cross-section
// accumulation, and the multithreaded driver with its order-independent
// verification checksum.

namespace xsnuma {

using XsVector = std::array<double, kXsChannels>;

enum class Algorithm { basic, unionized };

// ------------------------------------------------------------------ search

// Interpolation segment for energy e: largest i with energies[i] <= e,
// clamped into [0, len-2]. Anything below the grid maps to segment 0,
// anything at/above the top to the last segment; duplicate energies resolve
// to the last duplicate. Requires len >= 2.
inline std::size_t find_interval(std::span<const double> energies, double e) {
  if (energies.size() < 2) throw std::invalid_argument("find_interval needs >= 2 energies");
  std::ptrdiff_t idx = detail::last_leq(energies, e, [](double v) { return v; });
  return std::size_t(std::clamp<std::ptrdiff_t>(idx, 0, std::ptrdiff_t(energies.size()) - 2));
}

inline std::size_t find_interval(std::span<const NuclideGridPoint> pts, double e) {
  if (pts.size() < 2) throw std::invalid_argument("find_interval needs >= 2 gridpoints");
  std::ptrdiff_t idx = detail::last_leq(pts, e, [](const NuclideGridPoint& p) { return p.energy; });
  return std::size_t(std::clamp<std::ptrdiff_t>(idx, 0, std::ptrdiff_t(pts.size()) - 2));
}

// ------------------------------------------------------------------ interpolation

// Componentwise linear interpolation on segment idx. e == lower endpoint
// reproduces that point's values exactly; energies outside the grid
// extrapolate with the edge segment's slope; a zero-width segment returns
// its lower endpoint.
inline XsVector interpolate(std::span<const NuclideGridPoint> pts, std::size_t idx, double e) {
  const NuclideGridPoint& lo = pts[idx];
  const NuclideGridPoint& hi = pts[idx + 1];
  XsVector out;
  if (hi.energy == lo.energy) {
    for (int c = 0; c < kXsChannels; ++c) out[c] = lo.xs[c];
    return out;
  }
  const double f = (e - lo.energy) / (hi.energy - lo.energy);
  for (int c = 0; c < kXsChannels; ++c) out[c] = lo.xs[c] + f * (hi.xs[c] - lo.xs[c]);
  return out;
}

// ------------------------------------------------------------------ dataset view

// Non-owning pointers into (possibly placed/replicated) dataset storage.
// Each worker resolves its own view so replicated structures can point at
// the socket-local copy.
struct DatasetView {
  const NuclideGridPoint* grid_points = nullptr;  // flat, nuclide k at [k*m, (k+1)*m)
  std::uint32_t n_nuclides = 0;
  std::uint32_t gridpoints = 0;
  std::uint64_t grids_fingerprint = 0;

  const double* union_energies = nullptr;       // null when running basic only
  const std::uint32_t* union_index = nullptr;   // row-major, stride n_nuclides
  std::size_t union_entries = 0;
  std::uint64_t union_source_fingerprint = 0;

  const MaterialTable* materials = nullptr;

  std::span<const NuclideGridPoint> nuclide(std::uint32_t k) const noexcept {
    return {grid_points + std::size_t(k) * gridpoints, gridpoints};
  }
  bool has_unionized() const noexcept { return union_energies != nullptr; }
};

inline DatasetView make_view(const Dataset& ds, const UnionizedGrid* ug = nullptr) {
  DatasetView v;
  v.grid_points = ds.grids.flat().data();
  v.n_nuclides = ds.grids.n_nuclides();
  v.gridpoints = ds.grids.gridpoints();
  v.grids_fingerprint = ds.grids.fingerprint();
  v.materials = &ds.materials;
  if (ug) {
    v.union_energies = ug->energies.data();
    v.union_index = ug->index.data();
    v.union_entries = ug->energies.size();
    v.union_source_fingerprint = ug->source_fingerprint;
  }
  return v;
}

// ------------------------------------------------------------------ macroscopic xs

struct LookupCounters {
  std::uint64_t interval_searches = 0;  // binary searches issued
  std::uint64_t lookups = 0;
};

// Sum of interpolated cross sections over the material's nuclides, in table
// order. One binary search per nuclide.
inline XsVector macro_xs_basic(const DatasetView& v, double p_energy, std::size_t material,
                               LookupCounters* counters = nullptr) {
  const auto& ids = v.materials->nuclides[material];
  XsVector acc{};
  for (std::uint32_t id : ids) {
    const auto pts = v.nuclide(id);
    const std::size_t idx = find_interval(pts, p_energy);
    if (counters) ++counters->interval_searches;
    const XsVector xs = interpolate(pts, idx, p_energy);
    for (int c = 0; c < kXsChannels; ++c) acc[c] += xs[c];
  }
  if (counters) ++counters->lookups;
  return acc;
}

// Same sum via one search on the unionized energies plus the precomputed
// per-nuclide index row. Bit-identical to macro_xs_basic by construction:
// the union contains every grid energy, so the row holds exactly the index
// the per-nuclide search would find, and interpolation/summation match.
inline XsVector macro_xs_unionized(const DatasetView& v, double p_energy, std::size_t material,
                                   LookupCounters* counters = nullptr) {
  if (!v.has_unionized()) throw std::invalid_argument("no unionized grid attached");
  if (v.union_source_fingerprint != v.grids_fingerprint)
    throw std::runtime_error("unionized grid does not match the nuclide grids");
  const std::size_t entry =
      find_interval(std::span<const double>(v.union_energies, v.union_entries), p_energy);
  if (counters) ++counters->interval_searches;
  const std::uint32_t* row = v.union_index + entry * v.n_nuclides;
  const auto& ids = v.materials->nuclides[material];
  XsVector acc{};
  for (std::uint32_t id : ids) {
    const auto pts = v.nuclide(id);
    const XsVector xs = interpolate(pts, row[id], p_energy);
    for (int c = 0; c < kXsChannels; ++c) acc[c] += xs[c];
  }
  if (counters) ++counters->lookups;
  return acc;
}

// Struct-level convenience wrappers.
inline XsVector macro_xs_basic(const Dataset& ds, double p_energy, std::size_t material) {
  return macro_xs_basic(make_view(ds), p_energy, material);
}
inline XsVector macro_xs_unionized(const Dataset& ds, const UnionizedGrid& ug, double p_energy,
                                   std::size_t material) {
  return macro_xs_unionized(make_view(ds, &ug), p_energy, material);
}

// ------------------------------------------------------------------ checksum

// Per-lookup digest folded into an XOR accumulator: XOR commutes, so the
// checksum is independent of how lookups are partitioned across workers.
inline std::uint64_t checksum_lookup(std::uint64_t lookup_index, const XsVector& xs) noexcept {
  std::uint64_t h = lookup_index;
  for (double v : xs) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

// ------------------------------------------------------------------ driver

struct RunLookupsOptions {
  std::uint64_t n_lookups = 0;
  unsigned n_threads = 1;
  std::uint64_t seed = 42;
  Algorithm algorithm = Algorithm::unionized;
  // 0 disables clamping; the harness passes the active topology's CPU count.
  unsigned cpu_budget = 0;
  // Called once per worker before the timed region (pinning hook).
  std::function<void(unsigned worker)> on_worker_start;
};

struct RunLookupsResult {
  double lookups_per_s = 0.0;
  std::uint64_t checksum = 0;
  LookupCounters counters;
  unsigned threads_used = 0;
  bool clamped = false;
};

// Runs n_lookups lookups split into contiguous index ranges per worker.
// The view factory resolves each worker's (possibly replica-local) view.
inline RunLookupsResult run_lookups(const std::function<DatasetView(unsigned)>& view_for_worker,
                                    const RunLookupsOptions& opt) {
  if (opt.n_lookups == 0) throw std::invalid_argument("n_lookups must be positive");
  if (opt.n_threads == 0) throw std::invalid_argument("n_threads must be positive");
  RunLookupsResult res;
  res.threads_used = opt.n_threads;
  if (opt.cpu_budget != 0 && opt.n_threads > opt.cpu_budget) {
    res.threads_used = opt.cpu_budget;
    res.clamped = true;
  }
  const unsigned nt = res.threads_used;

  std::vector<std::uint64_t> sums(nt, 0);
  std::vector<LookupCounters> counters(nt);
  std::barrier start_line(nt + 1);
  std::chrono::steady_clock::time_point t0, t1;

  auto worker = [&](unsigned w) {
    if (opt.on_worker_start) opt.on_worker_start(w);
    const DatasetView view = view_for_worker(w);
    const std::uint64_t lo = opt.n_lookups * w / nt;
    const std::uint64_t hi = opt.n_lookups * (w + 1) / nt;
    start_line.arrive_and_wait();  // everyone set up before the clock starts
    std::uint64_t acc = 0;
    LookupCounters& cnt = counters[w];
    for (std::uint64_t i = lo; i < hi; ++i) {
      const LookupDraw draw = rng_lookup(opt.seed, i);
      const std::size_t mat = view.materials->sample(draw.material_u);
      const XsVector xs = (opt.algorithm == Algorithm::unionized)
                              ? macro_xs_unionized(view, draw.p_energy, mat, &cnt)
                              : macro_xs_basic(view, draw.p_energy, mat, &cnt);
      acc ^= checksum_lookup(i, xs);
    }
    sums[w] = acc;
  };

  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (unsigned w = 0; w < nt; ++w) pool.emplace_back(worker, w);
  start_line.arrive_and_wait();
  t0 = std::chrono::steady_clock::now();
  for (auto& t : pool) t.join();
  t1 = std::chrono::steady_clock::now();

  for (unsigned w = 0; w < nt; ++w) {
    res.checksum ^= sums[w];
    res.counters.interval_searches += counters[w].interval_searches;
    res.counters.lookups += counters[w].lookups;
  }
  const double secs = std::chrono::duration<double>(t1 - t0).count();
  res.lookups_per_s = secs > 0 ? double(opt.n_lookups) / secs : 0.0;
  return res;
}

inline RunLookupsResult run_lookups(const Dataset& ds, const UnionizedGrid* ug,
                                    const RunLookupsOptions& opt) {
  const DatasetView v = make_view(ds, ug);
  return run_lookups([v](unsigned) { return v; }, opt);
}

}  // namespace xsnuma
