#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Cumulative energy counters from the powercap sysfs tree (RAPL). Hosts
// without the tree degrade to "unavailable": runs proceed, reports just omit
// the energy columns.

namespace xsnuma {

inline constexpr const char* kPowercapRootEnv = "XSNUMA_POWERCAP_ROOT";
inline constexpr const char* kDefaultPowercapRoot = "/sys/class/powercap";

// Strict cumulative-microjoule format: decimal digits only (plus trailing
// whitespace). Negative or malformed values are rejected.
inline std::uint64_t parse_uj(const std::string& text) {
  std::size_t end = text.size();
  while (end > 0 && (text[end - 1] == '\n' || text[end - 1] == ' ')) --end;
  if (end == 0) throw std::runtime_error("empty energy counter");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < end; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9')
      throw std::runtime_error("malformed energy counter: '" + text.substr(0, end) + "'");
    v = v * 10 + std::uint64_t(c - '0');
  }
  return v;
}

struct EnergyZone {
  std::string label;  // cpu0, cpu1, ... then dram0, dram1, ...
  std::filesystem::path energy_file;
  std::uint64_t wrap_range_uj = 0;
};

struct EnergySample {
  std::vector<std::uint64_t> energy_uj;  // parallel to the meter's zones
  std::chrono::nanoseconds timestamp{};
};

struct EnergyBreakdown {
  std::vector<std::string> labels;
  std::vector<double> joules;
  double total_j = 0;
  double uj_per_lookup = 0;  // zero when no lookup count was given
};

class EnergyMeter {
 public:
  // Scans <root>/intel-rapl:N (package zones, in enumeration order) and
  // their dram sub-zones. XSNUMA_POWERCAP_ROOT overrides the system path.
  static EnergyMeter discover() {
    namespace fs = std::filesystem;
    const char* env = std::getenv(kPowercapRootEnv);
    const fs::path root = env ? fs::path(env) : fs::path(kDefaultPowercapRoot);

    const auto read_text = [](const fs::path& p) {
      std::ifstream in(p);
      std::string s;
      std::getline(in, s);
      return s;
    };
    const auto is_digits = [](const std::string& s) {
      return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
    };

    // Package zones first, ordered by their id.
    std::map<int, fs::path> packages;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
      const std::string name = entry.path().filename().string();
      const std::string prefix = "intel-rapl:";
      if (name.rfind(prefix, 0) != 0) continue;
      const std::string id = name.substr(prefix.size());
      if (!is_digits(id)) continue;  // sub-zones handled below
      if (read_text(entry.path() / "name").rfind("package", 0) != 0) continue;
      packages.emplace(std::stoi(id), entry.path());
    }

    EnergyMeter meter;
    std::vector<EnergyZone> drams;
    int index = 0;
    for (const auto& [id, dir] : packages) {
      EnergyZone cpu;
      cpu.label = "cpu" + std::to_string(index);
      cpu.energy_file = dir / "energy_uj";
      cpu.wrap_range_uj = parse_uj(read_text(dir / "max_energy_range_uj"));
      meter.zones_.push_back(std::move(cpu));

      // Sub-zones of this package: intel-rapl:<id>:<k> with name "dram".
      for (int k = 0;; ++k) {
        const fs::path sub = root / ("intel-rapl:" + std::to_string(id) + ":" + std::to_string(k));
        if (!fs::exists(sub)) break;
        if (read_text(sub / "name") != "dram") continue;
        EnergyZone dram;
        dram.label = "dram" + std::to_string(index);
        dram.energy_file = sub / "energy_uj";
        dram.wrap_range_uj = parse_uj(read_text(sub / "max_energy_range_uj"));
        drams.push_back(std::move(dram));
      }
      ++index;
    }
    for (auto& z : drams) meter.zones_.push_back(std::move(z));
    return meter;
  }

  // Assemble a meter from explicit zones — lets tests exercise wrap handling
  // without a sysfs tree. discover() is the production path.
  static EnergyMeter from_zones(std::vector<EnergyZone> zones) {
    EnergyMeter m;
    m.zones_ = std::move(zones);
    return m;
  }

  bool available() const noexcept { return !zones_.empty(); }
  const std::vector<EnergyZone>& zones() const noexcept { return zones_; }

  EnergySample read_sample() const {
    if (!available()) throw std::logic_error("no energy zones detected");
    EnergySample s;
    s.energy_uj.reserve(zones_.size());
    for (const auto& z : zones_) {
      std::ifstream in(z.energy_file);
      std::string text;
      std::getline(in, text);
      const std::uint64_t v = parse_uj(text);
      if (v > z.wrap_range_uj)
        throw std::runtime_error(z.label + " counter exceeds its wrap range");
      s.energy_uj.push_back(v);
    }
    s.timestamp = std::chrono::steady_clock::now().time_since_epoch();
    return s;
  }

  // Energy consumed between two samples, assuming at most one counter wrap
  // per zone (fine for benchmark-scale intervals).
  EnergyBreakdown delta(const EnergySample& a, const EnergySample& b,
                        std::uint64_t lookups = 0) const {
    if (a.energy_uj.size() != zones_.size() || b.energy_uj.size() != zones_.size())
      throw std::invalid_argument("sample does not match this meter's zones");
    if (b.timestamp <= a.timestamp) throw std::invalid_argument("samples out of order");
    EnergyBreakdown out;
    for (std::size_t i = 0; i < zones_.size(); ++i) {
      const std::uint64_t ea = a.energy_uj[i], eb = b.energy_uj[i];
      const std::uint64_t uj = eb >= ea ? eb - ea : zones_[i].wrap_range_uj - ea + eb;
      out.labels.push_back(zones_[i].label);
      out.joules.push_back(double(uj) * 1e-6);
      out.total_j += out.joules.back();
    }
    if (lookups > 0) out.uj_per_lookup = out.total_j * 1e6 / double(lookups);
    return out;
  }

 private:
  std::vector<EnergyZone> zones_;
};

}  // namespace xsnuma
