#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "placement.hpp"

// Analytic cost model for the lookup kernel on a multi-domain machine.
// Predicts throughput, scaling efficiency, per-domain traffic and modeled
// energy for each placement preset, so policy effects can be studied on
// hosts that have no second memory domain.
//
// Model, per lookup: fixed compute time plus, per data structure, a number
// of memory touches. Each touch pays local or remote latency according to
// the fraction of the structure's pages on the reader's domain, plus an
// expected TLB-refill cost from the structure's working-set size. Domains
// whose demanded access rate approaches the bandwidth cap slow all their
// readers by a smooth convex multiplier 1 + (demand/cap)^gamma; demand is
// taken one-shot from the uncontended rates.

namespace xsnuma {

struct SimParams {
  double t_cpu_ns = 50.0;     // compute per lookup
  double t_local_ns = 10.0;   // same-domain memory access
  double t_remote_ns = 12.0;  // cross-domain access (calibrated; > local)
  double t_tlb_refill_ns = 30.0;
  double bandwidth_cap = 0.67178020839889052;  // accesses/ns one domain sustains (calibrated)
  double contention_exponent = 2.0;
  int tlb_entries_base = 64;   // data-TLB entries at base page size
  int tlb_entries_huge = 32;   // data-TLB entries at huge page size
  double base_page_bytes = 4096.0;
  double huge_page_bytes = 2.0 * 1024 * 1024;
  double cpu_watts = 90.0;            // modeled package power per domain
  double dram_nj_per_access = 10.0;   // modeled DRAM energy per access

  // t_tlb_refill may be zero and t_remote may equal t_local: both give the
  // degenerate flat-memory model, useful as a baseline.
  void validate() const {
    const double positive[] = {t_cpu_ns,       t_local_ns,
                               bandwidth_cap,  contention_exponent,
                               double(tlb_entries_base), double(tlb_entries_huge),
                               base_page_bytes, huge_page_bytes};
    for (double f : positive)
      if (!(f > 0.0)) throw std::invalid_argument("sim parameters must be positive");
    if (t_tlb_refill_ns < 0.0) throw std::invalid_argument("negative TLB refill cost");
    if (!(t_remote_ns >= t_local_ns))
      throw std::invalid_argument("remote latency must be >= local");
  }
};

// Expected fraction of accesses that miss the TLB when a working set is
// touched uniformly at random: zero once the TLB covers it, else the
// fraction of the set beyond the TLB's reach.
inline double tlb_miss_rate(double working_set_bytes, double page_bytes, int entries) {
  const double reach = page_bytes * entries;
  if (working_set_bytes <= reach) return 0.0;
  return 1.0 - reach / working_set_bytes;
}

// Per-lookup touch counts and working-set sizes of the three structures a
// unionized lookup walks: the energy knots (binary search), one index-table
// row, and two bracketing points per listed nuclide.
struct AccessProfile {
  double search_touches = 0;       // ceil(log2(n*m)) energy-array reads
  double index_row_reads = 0;      // mean nuclides per material
  double grid_point_reads = 0;     // 2 * mean nuclides per material
  double ws_union_energies = 0;    // bytes
  double ws_union_index = 0;
  double ws_grids = 0;
  double mean_nuclides_per_material = 0;
};

inline AccessProfile derive_access_profile(const DatasetConfig& cfg,
                                           const MaterialTable& materials) {
  validate(cfg);
  validate(materials, cfg.n_nuclides);
  double wsum = 0.0, ksum = 0.0;
  for (std::size_t m = 0; m < materials.nuclides.size(); ++m) {
    wsum += materials.selection_weights[m];
    ksum += materials.selection_weights[m] * double(materials.nuclides[m].size());
  }
  const double kbar = ksum / wsum;
  const double nm = double(cfg.n_nuclides) * double(cfg.gridpoints_per_nuclide);

  AccessProfile p;
  p.mean_nuclides_per_material = kbar;
  p.search_touches = std::ceil(std::log2(nm));
  p.index_row_reads = kbar;
  p.grid_point_reads = 2.0 * kbar;
  p.ws_union_energies = nm * 8.0;
  p.ws_union_index = nm * 4.0 * double(cfg.n_nuclides);
  p.ws_grids = nm * 48.0;
  return p;
}

struct SimPoint {
  int threads = 0;
  double lookups_per_ns = 0;
  double remote_fraction = 0;          // of all memory touches
  double tlb_refills_per_lookup = 0;
  std::vector<double> domain_accesses_per_lookup;
  std::vector<double> contention;      // multiplier per domain
  std::vector<double> cpu_j;           // modeled package energy per domain
  std::vector<double> dram_j;          // modeled DRAM energy per domain
  double makespan_s = 0;

  double lookups_per_s() const { return lookups_per_ns * 1e9; }
};

namespace detail {

enum class StreamPlacement { master_local, interleaved, replicated };

struct Stream {
  double touches;
  double working_set;
  StreamPlacement placement;
  bool huge;
};

inline std::vector<Stream> preset_streams(const AccessProfile& p, PolicyPreset preset) {
  const bool grids_rep = preset == PolicyPreset::replicate_grids ||
                         preset == PolicyPreset::replicate_grids_huge;
  const bool grids_huge = preset == PolicyPreset::replicate_grids_huge;
  const auto union_pl = preset == PolicyPreset::first_touch ? StreamPlacement::master_local
                                                            : StreamPlacement::interleaved;
  const auto grid_pl = grids_rep ? StreamPlacement::replicated
                     : preset == PolicyPreset::first_touch ? StreamPlacement::master_local
                                                           : StreamPlacement::interleaved;
  return {
      {p.search_touches, p.ws_union_energies, union_pl, false},
      {p.index_row_reads, p.ws_union_index, union_pl, false},
      {p.grid_point_reads, p.ws_grids, grid_pl, grids_huge},
  };
}

// Fraction of a stream's pages on domain d, for a reader on thread_domain.
// Interleaving hands page i to domain i % n, so low domains get the
// remainder pages.
inline double domain_fraction(const Stream& s, double page_bytes, int thread_domain, int d,
                              int n_domains) {
  if (n_domains == 1) return d == 0 ? 1.0 : 0.0;
  switch (s.placement) {
    case StreamPlacement::master_local:
      return d == 0 ? 1.0 : 0.0;
    case StreamPlacement::replicated:
      return d == thread_domain ? 1.0 : 0.0;
    case StreamPlacement::interleaved: {
      const double pages = std::max(1.0, std::ceil(s.working_set / page_bytes));
      const double whole = std::floor(pages / n_domains);
      const double extra = d < int(pages - whole * n_domains + 0.5) ? 1.0 : 0.0;
      return (whole + extra) / pages;
    }
  }
  return 0.0;
}

}  // namespace detail

// One model evaluation. n_lookups only scales the modeled energy figures.
inline SimPoint simulate_point(const SimParams& prm, const AccessProfile& profile,
                               PolicyPreset preset, int n_domains, int n_threads,
                               double n_lookups = 0.0) {
  prm.validate();
  if (n_domains < 1) throw std::invalid_argument("need at least one domain");
  if (n_threads < 1) throw std::invalid_argument("need at least one thread");

  const auto streams = detail::preset_streams(profile, preset);
  const auto page_of = [&](const detail::Stream& s) {
    return s.huge ? prm.huge_page_bytes : prm.base_page_bytes;
  };
  const auto entries_of = [&](const detail::Stream& s) {
    return s.huge ? prm.tlb_entries_huge : prm.tlb_entries_base;
  };

  // Threads spread round-robin across domains, like the harness pins them.
  std::vector<int> tdom(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) tdom[std::size_t(t)] = t % n_domains;

  // Uncontended per-lookup time per thread.
  const auto uncontended = [&](int t) {
    double time = prm.t_cpu_ns;
    for (const auto& s : streams) {
      const double miss = tlb_miss_rate(s.working_set, page_of(s), entries_of(s));
      for (int d = 0; d < n_domains; ++d) {
        const double f = detail::domain_fraction(s, page_of(s), tdom[std::size_t(t)], d, n_domains);
        const double lat = (d == tdom[std::size_t(t)] ? prm.t_local_ns : prm.t_remote_ns) +
                           miss * prm.t_tlb_refill_ns;
        time += s.touches * f * lat;
      }
    }
    return time;
  };

  std::vector<double> T(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) T[std::size_t(t)] = uncontended(t);

  // One-shot demand per domain from the uncontended rates, then the smooth
  // convex contention multiplier.
  std::vector<double> demand(static_cast<std::size_t>(n_domains), 0.0);
  for (int t = 0; t < n_threads; ++t)
    for (const auto& s : streams)
      for (int d = 0; d < n_domains; ++d)
        demand[std::size_t(d)] +=
            s.touches *
            detail::domain_fraction(s, page_of(s), tdom[std::size_t(t)], d, n_domains) /
            T[std::size_t(t)];

  std::vector<double> mult(static_cast<std::size_t>(n_domains));
  for (int d = 0; d < n_domains; ++d)
    mult[std::size_t(d)] =
        1.0 + std::pow(demand[std::size_t(d)] / prm.bandwidth_cap, prm.contention_exponent);

  // Contended times and the diagnostics.
  SimPoint out;
  out.threads = n_threads;
  out.contention = mult;
  out.domain_accesses_per_lookup.assign(std::size_t(n_domains), 0.0);

  std::vector<double> T2(static_cast<std::size_t>(n_threads));
  double touches_total = 0.0, touches_remote = 0.0, refills = 0.0;
  for (int t = 0; t < n_threads; ++t) {
    double time = prm.t_cpu_ns;
    for (const auto& s : streams) {
      const double miss = tlb_miss_rate(s.working_set, page_of(s), entries_of(s));
      for (int d = 0; d < n_domains; ++d) {
        const double f = detail::domain_fraction(s, page_of(s), tdom[std::size_t(t)], d, n_domains);
        const double lat = (d == tdom[std::size_t(t)] ? prm.t_local_ns : prm.t_remote_ns) +
                           miss * prm.t_tlb_refill_ns;
        time += s.touches * f * lat * mult[std::size_t(d)];
      }
    }
    T2[std::size_t(t)] = time;
  }

  double rate_sum = 0.0;
  for (double t2 : T2) rate_sum += 1.0 / t2;
  out.lookups_per_ns = rate_sum;

  // Aggregate traffic weighted by each thread's share of the lookups.
  for (int t = 0; t < n_threads; ++t) {
    const double share = (1.0 / T2[std::size_t(t)]) / rate_sum;
    for (const auto& s : streams) {
      const double miss = tlb_miss_rate(s.working_set, page_of(s), entries_of(s));
      refills += share * s.touches * miss;
      touches_total += share * s.touches;
      for (int d = 0; d < n_domains; ++d) {
        const double f = detail::domain_fraction(s, page_of(s), tdom[std::size_t(t)], d, n_domains);
        out.domain_accesses_per_lookup[std::size_t(d)] += share * s.touches * f;
        if (d != tdom[std::size_t(t)]) touches_remote += share * s.touches * f;
      }
    }
  }
  out.remote_fraction = touches_total > 0 ? touches_remote / touches_total : 0.0;
  out.tlb_refills_per_lookup = refills;

  if (n_lookups > 0) {
    out.makespan_s = n_lookups / out.lookups_per_ns * 1e-9;
    out.cpu_j.assign(std::size_t(n_domains), prm.cpu_watts * out.makespan_s);
    out.dram_j.resize(std::size_t(n_domains));
    for (int d = 0; d < n_domains; ++d)
      out.dram_j[std::size_t(d)] = out.domain_accesses_per_lookup[std::size_t(d)] * n_lookups *
                                   prm.dram_nj_per_access * 1e-9;
  } else {
    out.cpu_j.assign(std::size_t(n_domains), 0.0);
    out.dram_j.assign(std::size_t(n_domains), 0.0);
  }
  return out;
}

inline double simulate_throughput(const SimParams& prm, const AccessProfile& profile,
                                  PolicyPreset preset, int n_domains, int n_threads) {
  return simulate_point(prm, profile, preset, n_domains, n_threads).lookups_per_ns;
}

struct SimSweep {
  PolicyPreset preset;
  std::vector<SimPoint> points;
  std::vector<double> efficiency_pct;  // vs this preset's 1-thread rate
};

inline SimSweep simulate_sweep(const SimParams& prm, const AccessProfile& profile,
                               PolicyPreset preset, int n_domains,
                               std::span<const int> thread_counts, double n_lookups = 0.0) {
  SimSweep sweep;
  sweep.preset = preset;
  const double base = simulate_throughput(prm, profile, preset, n_domains, 1);
  for (int n : thread_counts) {
    sweep.points.push_back(simulate_point(prm, profile, preset, n_domains, n, n_lookups));
    sweep.efficiency_pct.push_back(sweep.points.back().lookups_per_ns / (base * n) * 100.0);
  }
  return sweep;
}

// ---- Calibration -----------------------------------------------------------

// One efficiency target: preset at a thread count should reach this percent
// of linear scaling over the master-local single-thread rate.
struct CalibrationTarget {
  PolicyPreset preset;
  int threads;
  double target_pct;
};

struct CalibrationResult {
  SimParams params;
  std::vector<double> achieved_pct;  // per target, in order
  double objective = 0;              // sum of squared errors
  bool ordering_satisfied = false;   // strict preset ordering held on the grid point
};

namespace detail {

inline bool ordering_strict(const SimParams& prm, const AccessProfile& profile, int n_domains,
                            int max_threads) {
  for (int n = 2; n <= max_threads; ++n) {
    const double ft = simulate_throughput(prm, profile, PolicyPreset::first_touch, n_domains, n);
    const double il = simulate_throughput(prm, profile, PolicyPreset::interleave_all, n_domains, n);
    const double rep =
        simulate_throughput(prm, profile, PolicyPreset::replicate_grids, n_domains, n);
    if (!(ft < il && il < rep)) return false;
  }
  return true;
}

}  // namespace detail

// Fits (t_remote, bandwidth_cap) by grid search to the given efficiency
// targets, preferring grid points that also keep the placement-preset
// ordering strict for every thread count up to the largest target. The
// search is deterministic: remote/local ratio 1.01..2.00 in steps of 0.01,
// cap at 2^(j/4) times the one-thread all-local demand for j = 0..40.
inline CalibrationResult calibrate(const AccessProfile& profile,
                                   std::span<const CalibrationTarget> targets,
                                   int n_domains = 2, SimParams base = SimParams{}) {
  if (targets.empty()) throw std::invalid_argument("calibrate: no targets");
  if (n_domains < 2) throw std::invalid_argument("calibrate: need >= 2 domains");

  // Reference demand: one thread, everything local, base pages.
  const double touches = profile.search_touches + profile.index_row_reads +
                         profile.grid_point_reads;
  double t_ref = base.t_cpu_ns;
  const double ws[] = {profile.ws_union_energies, profile.ws_union_index, profile.ws_grids};
  const double k[] = {profile.search_touches, profile.index_row_reads, profile.grid_point_reads};
  for (int i = 0; i < 3; ++i)
    t_ref += k[i] * (base.t_local_ns +
                     tlb_miss_rate(ws[i], base.base_page_bytes, base.tlb_entries_base) *
                         base.t_tlb_refill_ns);
  const double u_ref = touches / t_ref;

  int max_threads = 2;
  for (const auto& t : targets) max_threads = std::max(max_threads, t.threads);

  const auto evaluate = [&](const SimParams& prm) {
    std::vector<double> achieved;
    const double base_rate =
        simulate_throughput(prm, profile, PolicyPreset::first_touch, n_domains, 1);
    double err = 0.0;
    for (const auto& tgt : targets) {
      const double rate = simulate_throughput(prm, profile, tgt.preset, n_domains, tgt.threads);
      const double pct = rate / (base_rate * tgt.threads) * 100.0;
      achieved.push_back(pct);
      err += (pct - tgt.target_pct) * (pct - tgt.target_pct);
    }
    return std::pair(achieved, err);
  };

  CalibrationResult best_ordered, best_any;
  best_ordered.objective = best_any.objective = std::numeric_limits<double>::infinity();

  for (int i = 0; i < 100; ++i) {
    const double ratio = 1.01 + 0.01 * i;
    for (int j = 0; j <= 40; ++j) {
      SimParams prm = base;
      prm.t_remote_ns = prm.t_local_ns * ratio;
      prm.bandwidth_cap = u_ref * std::pow(2.0, j / 4.0);
      auto [achieved, err] = evaluate(prm);

      if (err < best_any.objective) {
        best_any = {prm, achieved, err, false};
      }
      if (err < best_ordered.objective &&
          detail::ordering_strict(prm, profile, n_domains, max_threads)) {
        best_ordered = {prm, achieved, err, true};
      }
    }
  }

  return std::isfinite(best_ordered.objective) ? best_ordered : best_any;
}

inline CalibrationResult calibrate_default(const AccessProfile& profile) {
  const CalibrationTarget targets[] = {
      {PolicyPreset::first_touch, 16, 70.0},
      {PolicyPreset::replicate_grids, 16, 95.0},
  };
  return calibrate(profile, targets);
}

}  // namespace xsnuma
