#pragma once

#include <algorithm>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "backend.hpp"
#include "topology.hpp"

// Memory-placement policies for large read-mostly arrays, and the placed
// region wrapper that owns the resulting allocations.

namespace xsnuma {

enum class PolicyKind { first_touch, bind, interleave, replicate };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::first_touch: return "first_touch";
    case PolicyKind::bind: return "bind";
    case PolicyKind::interleave: return "interleave";
    case PolicyKind::replicate: return "replicate";
  }
  return "?";
}

struct PlacementPolicy {
  PolicyKind kind = PolicyKind::first_touch;
  std::vector<int> domains;  // empty = all domains of the topology
  bool huge_pages = false;

  static PlacementPolicy first_touch() { return {PolicyKind::first_touch, {}, false}; }
  static PlacementPolicy bind(int domain) { return {PolicyKind::bind, {domain}, false}; }
  static PlacementPolicy interleave(std::vector<int> domains = {}) {
    return {PolicyKind::interleave, std::move(domains), false};
  }
  static PlacementPolicy replicate(std::vector<int> domains = {}) {
    return {PolicyKind::replicate, std::move(domains), false};
  }

  PlacementPolicy with_huge_pages(bool on = true) const {
    PlacementPolicy p = *this;
    p.huge_pages = on;
    return p;
  }
};

// One logical array placed under a policy. Replication keeps one physical
// copy per domain; every other policy keeps exactly one. Regions are
// populated once, then frozen; readers pick their copy by CPU.
class PlacedRegion {
 public:
  PlacedRegion() = default;
  PlacedRegion(const PlacedRegion&) = delete;
  PlacedRegion& operator=(const PlacedRegion&) = delete;
  PlacedRegion(PlacedRegion&& other) noexcept { swap(other); }
  PlacedRegion& operator=(PlacedRegion&& other) noexcept {
    if (this != &other) {
      release();
      swap(other);
    }
    return *this;
  }
  ~PlacedRegion() { release(); }

  std::size_t bytes() const noexcept { return bytes_; }
  const PlacementPolicy& policy() const noexcept { return policy_; }
  int n_replicas() const noexcept { return int(replicas_.size()); }
  bool frozen() const noexcept { return frozen_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  bool huge_granted() const { return alloc_at(0).huge_granted; }
  std::size_t page_bytes() const { return alloc_at(0).page_bytes; }
  std::size_t n_pages() const { return alloc_at(0).n_pages(); }

  // Domain a replica was placed for; -1 for the single copy of an
  // unreplicated region.
  int replica_home(int replica) const { return rep_at(replica).home; }

  std::span<std::byte> writable(int replica = 0) {
    if (frozen_) throw std::logic_error("region is frozen");
    return {rep_at(replica).alloc.ptr, bytes_};
  }

  std::span<const std::byte> readable(int replica = 0) const {
    return {rep_at(replica).alloc.ptr, bytes_};
  }

  // The copy a thread on `cpu` should read: its domain's replica when
  // replicated, the single copy otherwise.
  std::span<const std::byte> readable_for_cpu(int cpu, const Topology& topo) const {
    return readable(replica_index_for_cpu(cpu, topo));
  }

  int replica_index_for_cpu(int cpu, const Topology& topo) const {
    if (policy_.kind != PolicyKind::replicate) return 0;
    const int domain = topo.domain_of(cpu);
    for (std::size_t i = 0; i < replicas_.size(); ++i)
      if (replicas_[i].home == domain) return int(i);
    throw std::runtime_error("no replica on domain " + std::to_string(domain));
  }

  std::optional<int> page_domain(int replica, std::size_t page_index) const {
    return backend_->page_domain(rep_at(replica).alloc, page_index);
  }

  // Report a first-touch write of [offset, offset+len) performed by a thread
  // on `cpu`. Meaningful only for the simulated backend; harmless elsewhere.
  void note_first_touch(std::size_t offset, std::size_t len, int cpu, const Topology& topo) {
    backend_->note_touch(rep_at(0).alloc, offset, len, topo.domain_of(cpu));
  }

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }
  void freeze() noexcept { frozen_ = true; }

 private:
  friend PlacedRegion alloc_placed(PageBackend&, const Topology&, std::size_t, PlacementPolicy);

  struct Replica {
    PageAllocation alloc;
    int home = -1;
  };

  const Replica& rep_at(int i) const {
    if (i < 0 || std::size_t(i) >= replicas_.size()) throw std::out_of_range("replica index");
    return replicas_[std::size_t(i)];
  }
  Replica& rep_at(int i) {
    return const_cast<Replica&>(std::as_const(*this).rep_at(i));
  }
  const PageAllocation& alloc_at(int i) const { return rep_at(i).alloc; }

  void release() noexcept {
    if (backend_)
      for (auto& r : replicas_) backend_->deallocate(r.alloc);
    replicas_.clear();
    backend_ = nullptr;
  }

  void swap(PlacedRegion& other) noexcept {
    std::swap(backend_, other.backend_);
    std::swap(policy_, other.policy_);
    std::swap(bytes_, other.bytes_);
    std::swap(replicas_, other.replicas_);
    std::swap(frozen_, other.frozen_);
    std::swap(warnings_, other.warnings_);
  }

  PageBackend* backend_ = nullptr;
  PlacementPolicy policy_;
  std::size_t bytes_ = 0;
  std::vector<Replica> replicas_;
  bool frozen_ = false;
  std::vector<std::string> warnings_;
};

// Allocates `bytes` under the policy. Domain lists are deduplicated and
// sorted ascending, so interleaving starts at the lowest requested domain
// and replica order matches domain order. Huge-page requests that the host
// cannot satisfy fall back to base pages with a warning on the region.
inline PlacedRegion alloc_placed(PageBackend& backend, const Topology& topo, std::size_t bytes,
                                 PlacementPolicy policy) {
  if (bytes == 0) throw std::invalid_argument("alloc_placed: zero bytes");

  std::vector<int> domains = policy.domains;
  if (domains.empty())
    for (int d = 0; d < topo.n_domains(); ++d) domains.push_back(d);
  std::sort(domains.begin(), domains.end());
  domains.erase(std::unique(domains.begin(), domains.end()), domains.end());
  for (int d : domains)
    if (d < 0 || d >= topo.n_domains())
      throw std::out_of_range("placement domain " + std::to_string(d) + " not in topology");
  if (policy.kind == PolicyKind::bind && domains.size() != 1)
    throw std::invalid_argument("bind takes exactly one domain");
  policy.domains = domains;

  PlacedRegion region;
  region.backend_ = &backend;
  region.policy_ = policy;
  region.bytes_ = bytes;

  const auto add_replica = [&](int home) -> PageAllocation& {
    PlacedRegion::Replica r;
    r.alloc = backend.allocate(bytes, policy.huge_pages);
    r.home = home;
    if (policy.huge_pages && !r.alloc.huge_granted)
      region.add_warning("huge pages unavailable; using " +
                         std::to_string(r.alloc.page_bytes) + "-byte pages");
    region.replicas_.push_back(std::move(r));
    return region.replicas_.back().alloc;
  };

  switch (policy.kind) {
    case PolicyKind::first_touch:
      add_replica(-1);
      break;
    case PolicyKind::bind: {
      auto& a = add_replica(domains.front());
      if (!backend.bind_range(a, 0, a.bytes, RangeBinding::bind, domains))
        region.add_warning("bind to domain " + std::to_string(domains.front()) +
                           " failed; pages stay first-touch");
      break;
    }
    case PolicyKind::interleave: {
      auto& a = add_replica(-1);
      if (!backend.bind_range(a, 0, a.bytes, RangeBinding::interleave, domains))
        region.add_warning("interleave binding failed; pages stay first-touch");
      break;
    }
    case PolicyKind::replicate: {
      for (int d : domains) {
        auto& a = add_replica(d);
        std::vector<int> one{d};
        if (!backend.bind_range(a, 0, a.bytes, RangeBinding::bind, one))
          region.add_warning("replica bind to domain " + std::to_string(d) +
                             " failed; pages stay first-touch");
      }
      break;
    }
  }
  return region;
}

// Named placement presets for the benchmark's two big structures: the
// nuclide grids (read hardest) and the unionized tables (energies + index).
enum class PolicyPreset { first_touch, interleave_all, replicate_grids, replicate_grids_huge };

inline constexpr const char* kPresetNames[] = {"default", "interleave-all", "numag",
                                               "numag-hugetlb"};

inline const char* to_string(PolicyPreset p) { return kPresetNames[int(p)]; }

inline PolicyPreset parse_preset(const std::string& name) {
  for (int i = 0; i < 4; ++i)
    if (name == kPresetNames[i]) return PolicyPreset(i);
  throw std::invalid_argument("unknown policy '" + name +
                              "' (expected default, interleave-all, numag, numag-hugetlb)");
}

// Placement of the nuclide grids under a preset.
inline PlacementPolicy preset_grid_policy(PolicyPreset p) {
  switch (p) {
    case PolicyPreset::first_touch: return PlacementPolicy::first_touch();
    case PolicyPreset::interleave_all: return PlacementPolicy::interleave();
    case PolicyPreset::replicate_grids: return PlacementPolicy::replicate();
    case PolicyPreset::replicate_grids_huge:
      return PlacementPolicy::replicate().with_huge_pages();
  }
  throw std::logic_error("bad preset");
}

// Placement of the unionized energies / index table under a preset. They are
// written once and read by everyone, so the replication presets spread them.
inline PlacementPolicy preset_union_policy(PolicyPreset p) {
  return p == PolicyPreset::first_touch ? PlacementPolicy::first_touch()
                                        : PlacementPolicy::interleave();
}

// Copies `src` into every replica, each copy performed by a thread pinned to
// the replica's home-domain master so first-touch agrees with the binding,
// then freezes the region.
inline void populate_replicas(PlacedRegion& region, std::span<const std::byte> src,
                              const Topology& topo, PageBackend& backend) {
  if (src.size() != region.bytes()) throw std::invalid_argument("source size mismatch");
  std::vector<std::thread> writers;
  writers.reserve(std::size_t(region.n_replicas()));
  for (int i = 0; i < region.n_replicas(); ++i) {
    writers.emplace_back([&, i] {
      const int home = region.replica_home(i);
      const int cpu = home >= 0 ? topo.master_cpu(home) : topo.master_cpu(0);
      backend.set_affinity(cpu);
      auto dst = region.writable(i);
      std::memcpy(dst.data(), src.data(), src.size());
      if (region.policy().kind == PolicyKind::first_touch)
        region.note_first_touch(0, src.size(), cpu, topo);
    });
  }
  for (auto& t : writers) t.join();
  region.freeze();
}

// Copies `src` into a single-copy region from one thread pinned to `cpu`
// (the whole array first-touched from one place), then freezes.
inline void populate_from_cpu(PlacedRegion& region, std::span<const std::byte> src, int cpu,
                              const Topology& topo, PageBackend& backend) {
  if (src.size() != region.bytes()) throw std::invalid_argument("source size mismatch");
  if (region.n_replicas() != 1) throw std::logic_error("use populate_replicas");
  std::thread writer([&] {
    backend.set_affinity(cpu);
    auto dst = region.writable(0);
    std::memcpy(dst.data(), src.data(), src.size());
    region.note_first_touch(0, src.size(), cpu, topo);
  });
  writer.join();
  region.freeze();
}

// Copies `src` into a single-copy region with one writer per domain, each
// pinned to its domain master and touching a contiguous slice — the usual
// parallel-initialization pattern that spreads first-touch pages.
inline void populate_spread(PlacedRegion& region, std::span<const std::byte> src,
                            const Topology& topo, PageBackend& backend) {
  if (src.size() != region.bytes()) throw std::invalid_argument("source size mismatch");
  if (region.n_replicas() != 1) throw std::logic_error("use populate_replicas");
  const int k = topo.n_domains();
  const std::size_t pages = region.n_pages();
  const std::size_t page = region.page_bytes();
  std::vector<std::thread> writers;
  writers.reserve(std::size_t(k));
  for (int d = 0; d < k; ++d) {
    // Page-aligned slices so no page is first-touched by two writers.
    const std::size_t lo = std::min(region.bytes(), pages * std::size_t(d) / std::size_t(k) * page);
    const std::size_t hi =
        d + 1 == k ? region.bytes()
                   : std::min(region.bytes(), pages * std::size_t(d + 1) / std::size_t(k) * page);
    if (lo >= hi) continue;
    writers.emplace_back([&, d, lo, hi] {
      const int cpu = topo.master_cpu(d);
      backend.set_affinity(cpu);
      auto dst = region.writable(0);
      std::memcpy(dst.data() + lo, src.data() + lo, hi - lo);
      region.note_first_touch(lo, hi - lo, cpu, topo);
    });
  }
  for (auto& t : writers) t.join();
  region.freeze();
}

}  // namespace xsnuma
