#pragma once

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

// Machine topology: NUMA domains and the CPUs they own, read from the
// kernel's node directory layout (or injected directly in tests).

namespace xsnuma {

inline constexpr const char* kNodeRootEnv = "XSNUMA_NODE_ROOT";
inline constexpr const char* kDefaultNodeRoot = "/sys/devices/system/node";

class Topology {
 public:
  Topology() = default;

  static Topology from_domains(std::vector<std::vector<int>> domains, long page_size = 4096,
                               long huge_page_size = 2l * 1024 * 1024) {
    Topology t;
    t.page_size_ = page_size;
    t.huge_page_size_ = huge_page_size;
    t.domains_ = std::move(domains);
    if (t.domains_.empty()) throw std::invalid_argument("topology needs at least one domain");
    for (std::size_t d = 0; d < t.domains_.size(); ++d) {
      auto& cpus = t.domains_[d];
      if (cpus.empty()) throw std::invalid_argument("topology domain without CPUs");
      std::sort(cpus.begin(), cpus.end());
      for (int cpu : cpus) {
        if (cpu < 0) throw std::invalid_argument("negative CPU id");
        if (!t.cpu_domain_.emplace(cpu, int(d)).second)
          throw std::invalid_argument("CPU listed in two domains");
      }
    }
    return t;
  }

  int n_domains() const noexcept { return int(domains_.size()); }
  int n_cpus() const noexcept { return int(cpu_domain_.size()); }
  long page_size() const noexcept { return page_size_; }
  long huge_page_size() const noexcept { return huge_page_size_; }
  const std::vector<std::vector<int>>& domains() const noexcept { return domains_; }

  int domain_of(int cpu) const {
    const auto it = cpu_domain_.find(cpu);
    if (it == cpu_domain_.end()) throw std::out_of_range("CPU not in any domain");
    return it->second;
  }

  const std::vector<int>& domain_cpus(int domain) const {
    if (domain < 0 || domain >= n_domains()) throw std::out_of_range("unknown domain");
    return domains_[domain];
  }

  // Lowest-numbered CPU of a domain acts as that domain's master.
  int master_cpu(int domain) const { return domain_cpus(domain).front(); }

  bool is_domain_master(int cpu) const { return master_cpu(domain_of(cpu)) == cpu; }

  // Worker-to-CPU order that spreads threads round-robin across domains:
  // d0[0], d1[0], ..., d0[1], d1[1], ...
  std::vector<int> spread_cpu_order() const {
    std::vector<int> order;
    order.reserve(cpu_domain_.size());
    for (std::size_t i = 0; order.size() < cpu_domain_.size(); ++i)
      for (const auto& cpus : domains_)
        if (i < cpus.size()) order.push_back(cpus[i]);
    return order;
  }

 private:
  std::vector<std::vector<int>> domains_;
  std::map<int, int> cpu_domain_;
  long page_size_ = 4096;
  long huge_page_size_ = 2l * 1024 * 1024;
};

// "0-3,8,10-11" -> {0,1,2,3,8,10,11}
inline std::vector<int> parse_cpulist(const std::string& text) {
  std::vector<int> cpus;
  std::string tok;
  std::stringstream ss(text);
  while (std::getline(ss, tok, ',')) {
    while (!tok.empty() && (tok.back() == '\n' || tok.back() == ' ')) tok.pop_back();
    if (tok.empty()) continue;
    const auto dash = tok.find('-');
    try {
      if (dash == std::string::npos) {
        cpus.push_back(std::stoi(tok));
      } else {
        const int lo = std::stoi(tok.substr(0, dash));
        const int hi = std::stoi(tok.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument("descending range");
        for (int c = lo; c <= hi; ++c) cpus.push_back(c);
      }
    } catch (const std::exception&) {
      throw std::runtime_error("malformed cpulist: '" + text + "'");
    }
  }
  return cpus;
}

// Reads node<d>/cpulist under the node root (XSNUMA_NODE_ROOT overrides the
// default system path). Hosts without the layout get a single-domain
// fallback covering all hardware threads, with a warning.
inline Topology discover_topology(std::ostream& warn = std::cerr) {
  namespace fs = std::filesystem;
  const char* env = std::getenv(kNodeRootEnv);
  const fs::path root = env ? fs::path(env) : fs::path(kDefaultNodeRoot);

  std::map<int, std::vector<int>> nodes;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("node", 0) != 0) continue;
    const std::string idtext = name.substr(4);
    if (idtext.empty() || idtext.find_first_not_of("0123456789") != std::string::npos) continue;
    std::ifstream in(entry.path() / "cpulist");
    if (!in) continue;
    std::string line;
    std::getline(in, line);
    auto cpus = parse_cpulist(line);
    if (!cpus.empty()) nodes.emplace(std::stoi(idtext), std::move(cpus));
  }

  if (nodes.empty()) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    warn << "xsnuma: no NUMA node layout under " << root
         << "; assuming one domain with " << hw << " CPU(s)\n";
    std::vector<int> cpus(hw);
    for (unsigned i = 0; i < hw; ++i) cpus[i] = int(i);
    return Topology::from_domains({std::move(cpus)});
  }

  std::vector<std::vector<int>> domains;
  domains.reserve(nodes.size());
  for (auto& [id, cpus] : nodes) domains.push_back(std::move(cpus));
  long page = 4096;
#ifdef _SC_PAGESIZE
  if (const long sys = sysconf(_SC_PAGESIZE); sys > 0) page = sys;
#endif
  return Topology::from_domains(std::move(domains), page);
}

}  // namespace xsnuma
