#pragma once

#include <numaif.h>
#include <sched.h>
#include <sys/mman.h>
#include <unistd.h>

#include <cerrno>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <map>
#include <mutex>
#include <new>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "topology.hpp"

// Narrow seam between placement logic and the operating system: page-granular
// allocation, range binding, page-residency queries, and thread affinity.
// Everything above this interface is testable on any machine via SimBackend.

namespace xsnuma {

struct PageAllocation {
  std::byte* ptr = nullptr;
  std::size_t bytes = 0;       // rounded up to a page multiple
  std::size_t page_bytes = 0;  // granularity actually granted
  bool huge_requested = false;
  bool huge_granted = false;
  std::uint64_t id = 0;  // backend bookkeeping handle

  std::size_t n_pages() const noexcept { return page_bytes ? bytes / page_bytes : 0; }
};

enum class RangeBinding { bind, interleave };

class PageBackend {
 public:
  virtual ~PageBackend() = default;

  virtual PageAllocation allocate(std::size_t bytes, bool huge) = 0;
  virtual void deallocate(PageAllocation& alloc) noexcept = 0;

  // Pins pages in [offset, offset+len) to the given domains. bind uses every
  // listed domain as one membership set; interleave assigns page i of the
  // allocation to domains[i % k]. Returns false when the host cannot bind.
  virtual bool bind_range(PageAllocation& alloc, std::size_t offset, std::size_t len,
                          RangeBinding binding, std::span<const int> domains) = 0;

  // Domain currently holding the page, or nullopt when unknown / not yet
  // faulted in.
  virtual std::optional<int> page_domain(const PageAllocation& alloc, std::size_t page_index) = 0;

  // First-touch notification: the caller wrote [offset, offset+len) from a
  // thread on `domain`. The real kernel does this implicitly on page fault;
  // the simulated backend records it here.
  virtual void note_touch(PageAllocation& alloc, std::size_t offset, std::size_t len,
                          int domain) = 0;

  virtual bool set_affinity(int cpu) = 0;
  virtual std::optional<int> current_affinity() = 0;
};

// In-memory model of page placement for single-machine tests: ordinary heap
// storage plus an explicit page->domain table per allocation.
class SimBackend final : public PageBackend {
 public:
  explicit SimBackend(Topology topo) : topo_(std::move(topo)) {}

  void set_huge_pages_available(bool available) { huge_available_ = available; }
  const Topology& topology() const noexcept { return topo_; }

  PageAllocation allocate(std::size_t bytes, bool huge) override {
    if (bytes == 0) throw std::invalid_argument("allocate: zero bytes");
    PageAllocation a;
    a.huge_requested = huge;
    a.huge_granted = huge && huge_available_;
    a.page_bytes = std::size_t(a.huge_granted ? topo_.huge_page_size() : topo_.page_size());
    a.bytes = round_up(bytes, a.page_bytes);
    a.ptr = new std::byte[a.bytes];

    std::scoped_lock lock(mu_);
    a.id = next_id_++;
    pages_.emplace(a.id, std::vector<int>(a.n_pages(), kUnplaced));
    return a;
  }

  void deallocate(PageAllocation& a) noexcept override {
    delete[] a.ptr;
    std::scoped_lock lock(mu_);
    pages_.erase(a.id);
    a = PageAllocation{};
  }

  bool bind_range(PageAllocation& a, std::size_t offset, std::size_t len, RangeBinding binding,
                  std::span<const int> domains) override {
    check_domains(domains);
    std::scoped_lock lock(mu_);
    auto& table = pages_.at(a.id);
    const auto [first, last] = page_span(a, offset, len);
    for (std::size_t p = first; p < last; ++p)
      table[p] = binding == RangeBinding::bind ? domains.front()
                                               : domains[p % domains.size()];
    return true;
  }

  std::optional<int> page_domain(const PageAllocation& a, std::size_t page_index) override {
    std::scoped_lock lock(mu_);
    const auto& table = pages_.at(a.id);
    if (page_index >= table.size()) throw std::out_of_range("page index");
    if (table[page_index] == kUnplaced) return std::nullopt;
    return table[page_index];
  }

  void note_touch(PageAllocation& a, std::size_t offset, std::size_t len, int domain) override {
    check_domains(std::span(&domain, 1));
    std::scoped_lock lock(mu_);
    auto& table = pages_.at(a.id);
    const auto [first, last] = page_span(a, offset, len);
    for (std::size_t p = first; p < last; ++p)
      if (table[p] == kUnplaced) table[p] = domain;  // only the first touch places
  }

  bool set_affinity(int cpu) override {
    try {
      topo_.domain_of(cpu);
    } catch (const std::out_of_range&) {
      return false;
    }
    std::scoped_lock lock(mu_);
    affinity_[std::this_thread::get_id()] = cpu;
    return true;
  }

  std::optional<int> current_affinity() override {
    std::scoped_lock lock(mu_);
    const auto it = affinity_.find(std::this_thread::get_id());
    if (it == affinity_.end()) return std::nullopt;
    return it->second;
  }

 private:
  static constexpr int kUnplaced = -1;

  static std::size_t round_up(std::size_t v, std::size_t unit) {
    return (v + unit - 1) / unit * unit;
  }

  static std::pair<std::size_t, std::size_t> page_span(const PageAllocation& a, std::size_t offset,
                                                       std::size_t len) {
    if (offset + len > a.bytes) throw std::out_of_range("range outside allocation");
    if (len == 0) return {0, 0};
    return {offset / a.page_bytes, (offset + len - 1) / a.page_bytes + 1};
  }

  void check_domains(std::span<const int> domains) const {
    if (domains.empty()) throw std::invalid_argument("empty domain list");
    for (int d : domains)
      if (d < 0 || d >= topo_.n_domains()) throw std::out_of_range("unknown domain");
  }

  Topology topo_;
  bool huge_available_ = true;
  std::mutex mu_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, std::vector<int>> pages_;
  std::map<std::thread::id, int> affinity_;
};

// Real Linux backend: mmap + mbind + move_pages + sched_setaffinity.
class OsBackend final : public PageBackend {
 public:
  explicit OsBackend(long page_size = 0, long huge_page_size = 2l * 1024 * 1024)
      : page_size_(page_size > 0 ? page_size : sysconf(_SC_PAGESIZE)),
        huge_page_size_(huge_page_size) {}

  PageAllocation allocate(std::size_t bytes, bool huge) override {
    if (bytes == 0) throw std::invalid_argument("allocate: zero bytes");
    PageAllocation a;
    a.huge_requested = huge;
    const int base_flags = MAP_PRIVATE | MAP_ANONYMOUS;
    if (huge) {
      a.page_bytes = std::size_t(huge_page_size_);
      a.bytes = round_up(bytes, a.page_bytes);
      void* p = mmap(nullptr, a.bytes, PROT_READ | PROT_WRITE, base_flags | MAP_HUGETLB, -1, 0);
      if (p != MAP_FAILED) {
        a.ptr = static_cast<std::byte*>(p);
        a.huge_granted = true;
        return a;
      }
      // No huge pages on this host: fall through to base pages.
    }
    a.page_bytes = std::size_t(page_size_);
    a.bytes = round_up(bytes, a.page_bytes);
    void* p = mmap(nullptr, a.bytes, PROT_READ | PROT_WRITE, base_flags, -1, 0);
    if (p == MAP_FAILED) throw std::bad_alloc();
    a.ptr = static_cast<std::byte*>(p);
    a.huge_granted = false;
    return a;
  }

  void deallocate(PageAllocation& a) noexcept override {
    if (a.ptr) munmap(a.ptr, a.bytes);
    a = PageAllocation{};
  }

  bool bind_range(PageAllocation& a, std::size_t offset, std::size_t len, RangeBinding binding,
                  std::span<const int> domains) override {
    if (domains.empty()) throw std::invalid_argument("empty domain list");
    if (offset % a.page_bytes != 0) throw std::invalid_argument("unaligned bind offset");
    int max_node = 0;
    for (int d : domains) max_node = std::max(max_node, d);
    std::vector<unsigned long> mask(std::size_t(max_node) / (8 * sizeof(unsigned long)) + 1, 0ul);
    for (int d : domains)
      mask[std::size_t(d) / (8 * sizeof(unsigned long))] |=
          1ul << (std::size_t(d) % (8 * sizeof(unsigned long)));
    const int mode = binding == RangeBinding::bind ? MPOL_BIND : MPOL_INTERLEAVE;
    return mbind(a.ptr + offset, len, mode, mask.data(), mask.size() * 8 * sizeof(unsigned long) + 1,
                 0) == 0;
  }

  std::optional<int> page_domain(const PageAllocation& a, std::size_t page_index) override {
    if (page_index >= a.n_pages()) throw std::out_of_range("page index");
    void* addr = a.ptr + page_index * a.page_bytes;
    int status = -1;
    if (move_pages(0, 1, &addr, nullptr, &status, 0) != 0) return std::nullopt;
    if (status < 0) return std::nullopt;  // e.g. not yet faulted in
    return status;
  }

  void note_touch(PageAllocation&, std::size_t, std::size_t, int) override {
    // The kernel places pages on fault; nothing to record.
  }

  bool set_affinity(int cpu) override {
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(cpu, &set);
    return sched_setaffinity(0, sizeof(set), &set) == 0;
  }

  std::optional<int> current_affinity() override {
    cpu_set_t set;
    CPU_ZERO(&set);
    if (sched_getaffinity(0, sizeof(set), &set) != 0) return std::nullopt;
    int only = -1;
    for (int c = 0; c < CPU_SETSIZE; ++c) {
      if (!CPU_ISSET(c, &set)) continue;
      if (only >= 0) return std::nullopt;  // more than one CPU allowed
      only = c;
    }
    if (only < 0) return std::nullopt;
    return only;
  }

 private:
  static std::size_t round_up(std::size_t v, std::size_t unit) {
    return (v + unit - 1) / unit * unit;
  }

  long page_size_;
  long huge_page_size_;
};

}  // namespace xsnuma
