#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "backend.hpp"
#include "dataset_io.hpp"
#include "energy.hpp"
#include "grid.hpp"
#include "lookup.hpp"
#include "placement.hpp"
#include "sim.hpp"
#include "topology.hpp"

// Experiment harness: sweeps placement presets and thread counts over the
// lookup kernel, measured on this machine or predicted by the analytic
// model, and emits plot-ready reports.

namespace xsnuma {

// Scaling efficiency: throughput at n threads against n times the
// single-thread throughput of the same setup, in percent.
inline double efficiency_pct(double p_n, double p_1, int n) {
  if (!(p_1 > 0.0)) throw std::invalid_argument("baseline throughput must be positive");
  if (n < 1) throw std::invalid_argument("thread count must be >= 1");
  return p_n / (p_1 * double(n)) * 100.0;
}

// Cross-policy variant: normalized by the default policy's single-thread
// throughput, so different placements are comparable on one scale.
inline double relative_efficiency_pct(double p_n, double p_default_1, int n) {
  return efficiency_pct(p_n, p_default_1, n);
}

enum class BenchMode { measure, simulate };
enum class InitMode { generate, file };
enum class PinOrder { spread, compact };  // round-robin across domains vs fill-first

inline const char* to_string(BenchMode m) {
  return m == BenchMode::measure ? "measure" : "simulate";
}
inline const char* to_string(InitMode m) { return m == InitMode::generate ? "generate" : "file"; }
inline const char* to_string(Algorithm a) { return a == Algorithm::basic ? "basic" : "unionized"; }
inline const char* to_string(PinOrder p) { return p == PinOrder::spread ? "spread" : "compact"; }

inline BenchMode parse_bench_mode(const std::string& s) {
  if (s == "measure") return BenchMode::measure;
  if (s == "simulate") return BenchMode::simulate;
  throw std::invalid_argument("unknown mode '" + s + "' (expected measure or simulate)");
}
inline InitMode parse_init_mode(const std::string& s) {
  if (s == "generate") return InitMode::generate;
  if (s == "file") return InitMode::file;
  throw std::invalid_argument("unknown init mode '" + s + "' (expected file or generate)");
}
inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "basic") return Algorithm::basic;
  if (s == "unionized") return Algorithm::unionized;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected basic or unionized)");
}
inline PinOrder parse_pin_order(const std::string& s) {
  if (s == "spread") return PinOrder::spread;
  if (s == "compact") return PinOrder::compact;
  throw std::invalid_argument("unknown pin order '" + s + "' (expected spread or compact)");
}

// Full-scale runs default to 15M lookups; smaller datasets are sampled
// proportionally to their share of the full grid, floored at 10^4.
inline std::uint64_t default_lookups(const DatasetConfig& cfg) {
  const double full = 355.0 * 11303.0;
  const double frac = double(cfg.n_nuclides) * double(cfg.gridpoints_per_nuclide) / full;
  const double scaled = 15'000'000.0 * frac;
  return std::uint64_t(std::max(10'000.0, std::min(scaled, 15'000'000.0)));
}

struct RunConfig {
  DatasetConfig dataset;
  Algorithm algorithm = Algorithm::unionized;
  std::vector<PolicyPreset> policies = {PolicyPreset::first_touch};
  std::vector<int> thread_counts = {1};
  std::uint64_t n_lookups = 15'000'000;
  InitMode init = InitMode::generate;
  std::filesystem::path dataset_file;  // required when init == file
  BenchMode mode = BenchMode::measure;

  SimParams sim;           // simulate mode: model parameters
  int sim_domains = 2;     // simulate mode: fake machine shape
  int sim_cpus_per_domain = 8;

  bool pin_threads = true;  // measure mode: pin workers to CPUs
  PinOrder pin_order = PinOrder::spread;  // compact fills one domain before the next
  std::uint64_t warmup_divisor = 10;  // warm-up pass of n_lookups/divisor, 0 = none
};

inline void validate(const RunConfig& cfg) {
  validate(cfg.dataset);
  if (cfg.policies.empty()) throw std::invalid_argument("no placement policies selected");
  if (cfg.thread_counts.empty()) throw std::invalid_argument("no thread counts selected");
  for (int n : cfg.thread_counts)
    if (n < 1) throw std::invalid_argument("thread counts must be >= 1");
  if (cfg.n_lookups == 0) throw std::invalid_argument("n_lookups must be positive");
  if (cfg.init == InitMode::file && cfg.dataset_file.empty())
    throw std::invalid_argument("init mode 'file' needs --dataset-file");
  if (cfg.mode == BenchMode::simulate) {
    cfg.sim.validate();
    if (cfg.sim_domains < 1 || cfg.sim_cpus_per_domain < 1)
      throw std::invalid_argument("simulated topology must have >= 1 domain and CPU");
  }
}

struct BenchRow {
  std::string policy;
  int threads = 0;            // threads actually run (after any clamp)
  int requested_threads = 0;  // threads asked for
  bool ok = true;
  std::string error;
  double lookups_per_s = std::numeric_limits<double>::quiet_NaN();
  double efficiency_pct = std::numeric_limits<double>::quiet_NaN();
  double rel_efficiency_pct = std::numeric_limits<double>::quiet_NaN();
  bool has_checksum = false;  // simulate rows carry none
  std::uint64_t checksum = 0;
  std::map<std::string, double> energy_j;  // cpu0, cpu1, dram0, dram1 (as available)
  double uj_per_lookup = std::numeric_limits<double>::quiet_NaN();
  double wall_s = std::numeric_limits<double>::quiet_NaN();
};

struct BenchReport {
  DatasetConfig dataset;
  Algorithm algorithm = Algorithm::unionized;
  BenchMode mode = BenchMode::measure;
  InitMode init = InitMode::generate;
  std::uint64_t n_lookups = 0;
  std::string numa_balancing = "unknown";  // host state, reported never changed
  std::string governor = "unknown";
  std::vector<std::string> warnings;
  std::vector<BenchRow> rows;
};

namespace detail {

inline bool nan_or_equal(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace detail

inline bool operator==(const BenchRow& a, const BenchRow& b) {
  return a.policy == b.policy && a.threads == b.threads &&
         a.requested_threads == b.requested_threads && a.ok == b.ok && a.error == b.error &&
         detail::nan_or_equal(a.lookups_per_s, b.lookups_per_s) &&
         detail::nan_or_equal(a.efficiency_pct, b.efficiency_pct) &&
         detail::nan_or_equal(a.rel_efficiency_pct, b.rel_efficiency_pct) &&
         a.has_checksum == b.has_checksum && a.checksum == b.checksum &&
         a.energy_j == b.energy_j && detail::nan_or_equal(a.uj_per_lookup, b.uj_per_lookup) &&
         detail::nan_or_equal(a.wall_s, b.wall_s);
}

inline bool operator==(const BenchReport& a, const BenchReport& b) {
  return a.dataset.n_nuclides == b.dataset.n_nuclides &&
         a.dataset.gridpoints_per_nuclide == b.dataset.gridpoints_per_nuclide &&
         a.dataset.n_materials == b.dataset.n_materials &&
         a.dataset.rng_seed == b.dataset.rng_seed && a.algorithm == b.algorithm &&
         a.mode == b.mode && a.init == b.init && a.n_lookups == b.n_lookups &&
         a.numa_balancing == b.numa_balancing && a.governor == b.governor &&
         a.warnings == b.warnings && a.rows == b.rows;
}

// ------------------------------------------------------------------ reports

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string checksum_hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_host_line(const char* path) {
  std::ifstream in(path);
  std::string s;
  if (!in || !std::getline(in, s) || s.empty()) return "unknown";
  return s;
}

}  // namespace detail

// Fixed, documented column set; one row per (policy, threads) point. Failed
// rows carry no numbers and are reported in the JSON form only.
inline std::string emit_csv(const BenchReport& r) {
  std::string out =
      "policy,threads,lookups_per_s,efficiency_pct,rel_efficiency_pct,checksum_hex,"
      "cpu0_j,cpu1_j,dram0_j,dram1_j,uj_per_lookup\n";
  const auto zone = [](const BenchRow& row, const char* label) {
    const auto it = row.energy_j.find(label);
    return it == row.energy_j.end() ? std::string() : detail::format_double(it->second);
  };
  for (const auto& row : r.rows) {
    if (!row.ok) continue;
    out += row.policy;
    out += ',' + std::to_string(row.threads);
    out += ',' + detail::format_double(row.lookups_per_s);
    out += ',' + detail::format_double(row.efficiency_pct);
    out += ',' + detail::format_double(row.rel_efficiency_pct);
    out += ',' + (row.has_checksum ? detail::checksum_hex(row.checksum) : std::string());
    out += ',' + zone(row, "cpu0");
    out += ',' + zone(row, "cpu1");
    out += ',' + zone(row, "dram0");
    out += ',' + zone(row, "dram1");
    out += ',' + detail::format_double(row.uj_per_lookup);
    out += '\n';
  }
  return out;
}

inline std::string emit_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = {{"n_nuclides", r.dataset.n_nuclides},
                  {"gridpoints_per_nuclide", r.dataset.gridpoints_per_nuclide},
                  {"n_materials", r.dataset.n_materials},
                  {"rng_seed", r.dataset.rng_seed}};
  j["algorithm"] = to_string(r.algorithm);
  j["mode"] = to_string(r.mode);
  j["init"] = to_string(r.init);
  j["n_lookups"] = r.n_lookups;
  j["host"] = {{"numa_balancing", r.numa_balancing}, {"governor", r.governor}};
  j["warnings"] = r.warnings;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json rj;
    rj["policy"] = row.policy;
    rj["threads"] = row.threads;
    rj["requested_threads"] = row.requested_threads;
    rj["ok"] = row.ok;
    if (!row.ok) rj["error"] = row.error;
    const auto put = [&rj](const char* key, double v) {
      if (!std::isnan(v)) rj[key] = v;
    };
    put("lookups_per_s", row.lookups_per_s);
    put("efficiency_pct", row.efficiency_pct);
    put("rel_efficiency_pct", row.rel_efficiency_pct);
    if (row.has_checksum) rj["checksum_hex"] = detail::checksum_hex(row.checksum);
    if (!row.energy_j.empty()) rj["energy_j"] = row.energy_j;
    put("uj_per_lookup", row.uj_per_lookup);
    put("wall_s", row.wall_s);
    j["rows"].push_back(std::move(rj));
  }
  return j.dump(2) + "\n";
}

inline BenchReport parse_report_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BenchReport r;
  r.dataset.n_nuclides = j.at("dataset").at("n_nuclides").get<std::uint32_t>();
  r.dataset.gridpoints_per_nuclide =
      j.at("dataset").at("gridpoints_per_nuclide").get<std::uint32_t>();
  r.dataset.n_materials = j.at("dataset").at("n_materials").get<std::uint32_t>();
  r.dataset.rng_seed = j.at("dataset").at("rng_seed").get<std::uint64_t>();
  r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  r.mode = parse_bench_mode(j.at("mode").get<std::string>());
  r.init = parse_init_mode(j.at("init").get<std::string>());
  r.n_lookups = j.at("n_lookups").get<std::uint64_t>();
  r.numa_balancing = j.at("host").at("numa_balancing").get<std::string>();
  r.governor = j.at("host").at("governor").get<std::string>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& rj : j.at("rows")) {
    BenchRow row;
    row.policy = rj.at("policy").get<std::string>();
    row.threads = rj.at("threads").get<int>();
    row.requested_threads = rj.at("requested_threads").get<int>();
    row.ok = rj.at("ok").get<bool>();
    if (rj.contains("error")) row.error = rj.at("error").get<std::string>();
    const auto num = [&rj](const char* key) {
      return rj.contains(key) ? rj.at(key).get<double>()
                              : std::numeric_limits<double>::quiet_NaN();
    };
    row.lookups_per_s = num("lookups_per_s");
    row.efficiency_pct = num("efficiency_pct");
    row.rel_efficiency_pct = num("rel_efficiency_pct");
    if (rj.contains("checksum_hex")) {
      row.has_checksum = true;
      row.checksum = std::stoull(rj.at("checksum_hex").get<std::string>(), nullptr, 16);
    }
    if (rj.contains("energy_j"))
      row.energy_j = rj.at("energy_j").get<std::map<std::string, double>>();
    row.uj_per_lookup = num("uj_per_lookup");
    row.wall_s = num("wall_s");
    r.rows.push_back(std::move(row));
  }
  return r;
}

// ------------------------------------------------------------------ experiment

// Injectable seams so experiments run against fixture topologies and the
// simulated page backend in tests; null members fall back to the real host.
struct ExperimentEnv {
  const Topology* topology = nullptr;
  PageBackend* backend = nullptr;
  const EnergyMeter* meter = nullptr;
  std::ostream* warn = nullptr;
};

namespace detail {

// The two big structures typed over placed bytes, plus per-domain material
// copies for the replication presets (the table is small; reading it from a
// local copy mirrors how the big replicas are used).
struct PlacedDataset {
  PlacedRegion grids;
  PlacedRegion union_energies;
  PlacedRegion union_index;
  std::vector<MaterialTable> materials;  // one entry, or one per domain
};

inline void fill_region(PlacedRegion& region, std::span<const std::byte> src, InitMode init,
                        const Topology& topo, PageBackend& backend) {
  if (region.policy().kind == PolicyKind::replicate) {
    populate_replicas(region, src, topo, backend);
  } else if (region.policy().kind == PolicyKind::first_touch && init == InitMode::generate) {
    populate_spread(region, src, topo, backend);
  } else {
    // File init: one master reads and first-touches everything. Bound and
    // interleaved regions are placed already; the writer does not matter.
    populate_from_cpu(region, src, topo.master_cpu(0), topo, backend);
  }
}

inline PlacedDataset place_dataset(const Dataset& src, const UnionizedGrid* ug,
                                   PolicyPreset preset, InitMode init, const Topology& topo,
                                   PageBackend& backend, std::vector<std::string>& warnings) {
  PlacedDataset placed;
  placed.grids = alloc_placed(backend, topo, src.grids.allocation_bytes(),
                              preset_grid_policy(preset));
  fill_region(placed.grids, std::as_bytes(src.grids.flat()), init, topo, backend);

  if (ug) {
    placed.union_energies = alloc_placed(backend, topo, ug->energies.size() * sizeof(double),
                                         preset_union_policy(preset));
    fill_region(placed.union_energies, std::as_bytes(std::span(ug->energies)), init, topo,
                backend);
    placed.union_index = alloc_placed(backend, topo, ug->index.size() * sizeof(std::uint32_t),
                                      preset_union_policy(preset));
    fill_region(placed.union_index, std::as_bytes(std::span(ug->index)), init, topo, backend);
  }

  const bool replicate_materials = preset == PolicyPreset::replicate_grids ||
                                   preset == PolicyPreset::replicate_grids_huge;
  if (replicate_materials) {
    placed.materials.resize(std::size_t(topo.n_domains()));
    std::vector<std::thread> writers;
    for (int d = 0; d < topo.n_domains(); ++d)
      writers.emplace_back([&, d] {
        backend.set_affinity(topo.master_cpu(d));
        placed.materials[std::size_t(d)] = src.materials;  // copy = local first touch
      });
    for (auto& t : writers) t.join();
  } else {
    placed.materials.push_back(src.materials);
  }

  for (const auto* region : {&placed.grids, &placed.union_energies, &placed.union_index})
    for (const auto& w : region->warnings())
      warnings.push_back(std::string(to_string(preset)) + ": " + w);
  return placed;
}

inline DatasetView placed_view(const PlacedDataset& placed, const Dataset& src,
                               const UnionizedGrid* ug, const Topology& topo, int cpu) {
  DatasetView v;
  v.grid_points = reinterpret_cast<const NuclideGridPoint*>(
      placed.grids.readable_for_cpu(cpu, topo).data());
  v.n_nuclides = src.grids.n_nuclides();
  v.gridpoints = src.grids.gridpoints();
  v.grids_fingerprint = src.grids.fingerprint();
  if (ug) {
    v.union_energies =
        reinterpret_cast<const double*>(placed.union_energies.readable().data());
    v.union_index =
        reinterpret_cast<const std::uint32_t*>(placed.union_index.readable().data());
    v.union_entries = ug->energies.size();
    v.union_source_fingerprint = ug->source_fingerprint;
  }
  const std::size_t mat_slot =
      placed.materials.size() > 1 ? std::size_t(topo.domain_of(cpu)) : 0;
  v.materials = &placed.materials[mat_slot];
  return v;
}

inline BenchRow simulate_row(const RunConfig& cfg, const AccessProfile& profile,
                             PolicyPreset preset, int threads, double p1, double pd1) {
  const auto pt = simulate_point(cfg.sim, profile, preset, cfg.sim_domains, threads,
                                 double(cfg.n_lookups));
  BenchRow row;
  row.policy = to_string(preset);
  row.threads = row.requested_threads = threads;
  row.lookups_per_s = pt.lookups_per_s();
  row.efficiency_pct = efficiency_pct(pt.lookups_per_ns, p1, threads);
  row.rel_efficiency_pct = relative_efficiency_pct(pt.lookups_per_ns, pd1, threads);
  double total_j = 0.0;
  for (int d = 0; d < cfg.sim_domains; ++d) {
    row.energy_j["cpu" + std::to_string(d)] = pt.cpu_j[std::size_t(d)];
    row.energy_j["dram" + std::to_string(d)] = pt.dram_j[std::size_t(d)];
    total_j += pt.cpu_j[std::size_t(d)] + pt.dram_j[std::size_t(d)];
  }
  row.uj_per_lookup = total_j * 1e6 / double(cfg.n_lookups);
  row.wall_s = pt.makespan_s;
  return row;
}

}  // namespace detail

inline BenchReport run_experiment(const RunConfig& cfg, const ExperimentEnv& env = {}) {
  validate(cfg);
  std::ostream& warn = env.warn ? *env.warn : std::cerr;

  BenchReport report;
  report.dataset = cfg.dataset;
  report.algorithm = cfg.algorithm;
  report.mode = cfg.mode;
  report.init = cfg.init;
  report.n_lookups = cfg.n_lookups;
  report.numa_balancing = detail::read_host_line("/proc/sys/kernel/numa_balancing");
  report.governor =
      detail::read_host_line("/sys/devices/system/cpu/cpu0/cpufreq/scaling_governor");

  if (cfg.mode == BenchMode::simulate) {
    const auto materials = generate_materials(cfg.dataset);
    const auto profile = derive_access_profile(cfg.dataset, materials);
    const double pd1 =
        simulate_throughput(cfg.sim, profile, PolicyPreset::first_touch, cfg.sim_domains, 1);
    for (const auto preset : cfg.policies) {
      const double p1 = simulate_throughput(cfg.sim, profile, preset, cfg.sim_domains, 1);
      for (const int n : cfg.thread_counts)
        report.rows.push_back(detail::simulate_row(cfg, profile, preset, n, p1, pd1));
    }
    return report;
  }

  // ---- measure mode ----
  Topology discovered;
  if (!env.topology) discovered = discover_topology(warn);
  const Topology& topo = env.topology ? *env.topology : discovered;
  OsBackend os_backend;
  PageBackend& backend = env.backend ? *env.backend : os_backend;
  EnergyMeter discovered_meter;
  if (!env.meter) discovered_meter = EnergyMeter::discover();
  const EnergyMeter& meter = env.meter ? *env.meter : discovered_meter;

  const Dataset source = cfg.init == InitMode::file ? read_dataset(cfg.dataset_file)
                                                    : generate_dataset(cfg.dataset);
  std::optional<UnionizedGrid> ug;
  if (cfg.algorithm == Algorithm::unionized)
    ug.emplace(build_unionized(source.grids, unsigned(topo.n_cpus())));
  const UnionizedGrid* ugp = ug ? &*ug : nullptr;

  std::vector<int> cpu_order;
  if (cfg.pin_order == PinOrder::spread) {
    cpu_order = topo.spread_cpu_order();
  } else {
    for (int d = 0; d < topo.n_domains(); ++d)
      for (int cpu : topo.domain_cpus(d)) cpu_order.push_back(cpu);
  }

  for (const auto preset : cfg.policies) {
    std::optional<detail::PlacedDataset> placed;
    std::string setup_error;
    try {
      placed = detail::place_dataset(source, ugp, preset, cfg.init, topo, backend,
                                     report.warnings);
    } catch (const std::exception& e) {
      setup_error = e.what();
      warn << "xsnuma: placement for " << to_string(preset) << " failed: " << e.what() << "\n";
    }

    for (const int requested : cfg.thread_counts) {
      BenchRow row;
      row.policy = to_string(preset);
      row.requested_threads = requested;
      if (!placed) {
        row.ok = false;
        row.threads = requested;
        row.error = "placement failed: " + setup_error;
        report.rows.push_back(std::move(row));
        continue;
      }

      int used = requested;
      if (cfg.pin_threads && requested > topo.n_cpus()) {
        used = topo.n_cpus();
        const std::string w = std::string(to_string(preset)) + ": clamped " +
                              std::to_string(requested) + " threads to " + std::to_string(used) +
                              " CPUs";
        report.warnings.push_back(w);
        warn << "xsnuma: " << w << "\n";
      }
      row.threads = used;

      const auto worker_cpu = [&](unsigned w) {
        return cpu_order[std::size_t(w) % cpu_order.size()];
      };
      RunLookupsOptions opt;
      opt.n_lookups = cfg.n_lookups;
      opt.n_threads = unsigned(used);
      opt.seed = cfg.dataset.rng_seed;
      opt.algorithm = cfg.algorithm;
      if (cfg.pin_threads)
        opt.on_worker_start = [&](unsigned w) { backend.set_affinity(worker_cpu(w)); };
      const auto view_for_worker = [&](unsigned w) {
        return detail::placed_view(*placed, source, ugp, topo, worker_cpu(w));
      };

      try {
        if (cfg.warmup_divisor > 0 && cfg.n_lookups >= cfg.warmup_divisor) {
          RunLookupsOptions warm = opt;
          warm.n_lookups = cfg.n_lookups / cfg.warmup_divisor;
          run_lookups(view_for_worker, warm);
        }
        std::optional<EnergySample> before;
        if (meter.available()) before = meter.read_sample();
        const auto res = run_lookups(view_for_worker, opt);
        if (before) {
          const auto after = meter.read_sample();
          const auto breakdown = meter.delta(*before, after, cfg.n_lookups);
          for (std::size_t z = 0; z < breakdown.labels.size(); ++z)
            row.energy_j[breakdown.labels[z]] = breakdown.joules[z];
          row.uj_per_lookup = breakdown.uj_per_lookup;
        }
        row.lookups_per_s = res.lookups_per_s;
        row.has_checksum = true;
        row.checksum = res.checksum;
        row.wall_s = double(cfg.n_lookups) / res.lookups_per_s;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        warn << "xsnuma: run failed (" << row.policy << ", " << used
             << " threads): " << e.what() << "\n";
      }
      report.rows.push_back(std::move(row));
    }
  }

  // Efficiency columns need the 1-thread baselines; fill where they exist.
  const auto baseline = [&](const std::string& policy) -> double {
    for (const auto& row : report.rows)
      if (row.ok && row.policy == policy && row.threads == 1) return row.lookups_per_s;
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double pd1 = baseline(to_string(PolicyPreset::first_touch));
  for (auto& row : report.rows) {
    if (!row.ok) continue;
    const double p1 = baseline(row.policy);
    if (p1 > 0) row.efficiency_pct = efficiency_pct(row.lookups_per_s, p1, row.threads);
    if (pd1 > 0) row.rel_efficiency_pct = relative_efficiency_pct(row.lookups_per_s, pd1, row.threads);
  }
  return report;
}

}  // namespace xsnuma
