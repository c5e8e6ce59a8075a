#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <future>
#include <random>
#include <thread>
#include <vector>

#include "xsnuma/backend.hpp"
#include "xsnuma/placement.hpp"
#include "xsnuma/topology.hpp"

using namespace xsnuma;

namespace {

// Tiny page sizes keep the page-map tests readable.
Topology small_topo() { return Topology::from_domains({{0, 1, 2, 3}, {4, 5, 6, 7}}, 64, 256); }

std::vector<std::byte> pattern(std::size_t n) {
  std::vector<std::byte> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::byte(i * 37 + 11);
  return v;
}

std::vector<int> page_map(const PlacedRegion& r, int replica = 0) {
  std::vector<int> m;
  for (std::size_t p = 0; p < r.n_pages(); ++p)
    m.push_back(r.page_domain(replica, p).value_or(-1));
  return m;
}

}  // namespace

TEST_CASE("interleave assigns pages round-robin from the lowest domain", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  auto region = alloc_placed(backend, topo, 8 * 64, PlacementPolicy::interleave());
  CHECK(region.n_replicas() == 1);
  CHECK(region.n_pages() == 8);
  CHECK(page_map(region) == std::vector<int>{0, 1, 0, 1, 0, 1, 0, 1});

  // Domain order in the request does not matter.
  auto swapped = alloc_placed(backend, topo, 8 * 64, PlacementPolicy::interleave({1, 0}));
  CHECK(page_map(swapped) == std::vector<int>{0, 1, 0, 1, 0, 1, 0, 1});

  // Interleaving over one domain degenerates to binding.
  auto single = alloc_placed(backend, topo, 4 * 64, PlacementPolicy::interleave({1}));
  CHECK(page_map(single) == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("bind pins every page to the chosen domain", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  auto region = alloc_placed(backend, topo, 5 * 64, PlacementPolicy::bind(1));
  CHECK(region.replica_home(0) == 1);
  CHECK(page_map(region) == std::vector<int>{1, 1, 1, 1, 1});
}

TEST_CASE("replicate keeps one bound copy per domain", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  auto region = alloc_placed(backend, topo, 3 * 64, PlacementPolicy::replicate());
  REQUIRE(region.n_replicas() == 2);
  CHECK(region.replica_home(0) == 0);
  CHECK(region.replica_home(1) == 1);
  CHECK(page_map(region, 0) == std::vector<int>{0, 0, 0});
  CHECK(page_map(region, 1) == std::vector<int>{1, 1, 1});

  // Readers resolve to the copy on their own domain.
  CHECK(region.replica_index_for_cpu(2, topo) == 0);
  CHECK(region.replica_index_for_cpu(5, topo) == 1);
  const auto src = pattern(region.bytes());
  populate_replicas(region, src, topo, backend);
  CHECK(region.frozen());
  const auto near5 = region.readable_for_cpu(5, topo);
  CHECK(near5.data() == region.readable(1).data());
  CHECK(std::memcmp(near5.data(), src.data(), src.size()) == 0);
  CHECK(std::memcmp(region.readable(0).data(), src.data(), src.size()) == 0);

  // Partial replication leaves distant domains without a copy.
  auto partial = alloc_placed(backend, topo, 64, PlacementPolicy::replicate({0}));
  CHECK(partial.replica_index_for_cpu(3, topo) == 0);
  CHECK_THROWS_AS(partial.replica_index_for_cpu(4, topo), std::runtime_error);
}

TEST_CASE("first-touch places pages where they are written, once", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  auto region = alloc_placed(backend, topo, 4 * 64, PlacementPolicy::first_touch());
  CHECK(page_map(region) == std::vector<int>{-1, -1, -1, -1});

  region.note_first_touch(0, 3 * 64, /*cpu=*/4, topo);  // domain 1 writes pages 0..2
  CHECK(page_map(region) == std::vector<int>{1, 1, 1, -1});

  region.note_first_touch(0, 4 * 64, /*cpu=*/0, topo);  // later touch cannot move pages
  CHECK(page_map(region) == std::vector<int>{1, 1, 1, 0});
}

TEST_CASE("single-CPU population lands the whole array on one domain", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  auto region = alloc_placed(backend, topo, 6 * 64, PlacementPolicy::first_touch());
  const auto src = pattern(region.bytes());
  populate_from_cpu(region, src, /*cpu=*/5, topo, backend);
  CHECK(page_map(region) == std::vector<int>{1, 1, 1, 1, 1, 1});
  CHECK(std::memcmp(region.readable().data(), src.data(), src.size()) == 0);
  CHECK(region.frozen());
  CHECK_THROWS_AS(region.writable(), std::logic_error);
}

TEST_CASE("spread population splits first-touch across domains", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  auto region = alloc_placed(backend, topo, 8 * 64, PlacementPolicy::first_touch());
  const auto src = pattern(region.bytes());
  populate_spread(region, src, topo, backend);
  CHECK(page_map(region) == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1});
  CHECK(std::memcmp(region.readable().data(), src.data(), src.size()) == 0);

  // Odd page counts split on a page boundary.
  auto odd = alloc_placed(backend, topo, 5 * 64, PlacementPolicy::first_touch());
  const auto src5 = pattern(odd.bytes());
  populate_spread(odd, src5, topo, backend);
  CHECK(page_map(odd) == std::vector<int>{0, 0, 1, 1, 1});
}

TEST_CASE("huge pages are honored when available and fall back loudly", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);

  auto huge = alloc_placed(backend, topo, 300, PlacementPolicy::bind(0).with_huge_pages());
  CHECK(huge.huge_granted());
  CHECK(huge.page_bytes() == 256);
  CHECK(huge.n_pages() == 2);  // 300 B rounds up to two 256 B pages
  CHECK(huge.warnings().empty());

  backend.set_huge_pages_available(false);
  auto fallback = alloc_placed(backend, topo, 300, PlacementPolicy::bind(0).with_huge_pages());
  CHECK_FALSE(fallback.huge_granted());
  CHECK(fallback.page_bytes() == 64);
  REQUIRE_FALSE(fallback.warnings().empty());
  CHECK(fallback.warnings().front().find("huge pages unavailable") != std::string::npos);
}

TEST_CASE("placement argument validation", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  CHECK_THROWS_AS(alloc_placed(backend, topo, 0, PlacementPolicy::first_touch()),
                  std::invalid_argument);
  CHECK_THROWS_AS(alloc_placed(backend, topo, 64, PlacementPolicy::interleave({7})),
                  std::out_of_range);
  CHECK_THROWS_AS(alloc_placed(backend, topo, 64, PlacementPolicy::bind(-1)), std::out_of_range);
  PlacementPolicy two_domain_bind{PolicyKind::bind, {0, 1}, false};
  CHECK_THROWS_AS(alloc_placed(backend, topo, 64, two_domain_bind), std::invalid_argument);
  CHECK_THROWS_AS(backend.allocate(0, false), std::invalid_argument);
}

TEST_CASE("simulated affinity is per-thread", "[placement]") {
  const auto topo = small_topo();
  SimBackend backend(topo);
  CHECK_FALSE(backend.current_affinity().has_value());
  CHECK(backend.set_affinity(3));
  CHECK(backend.current_affinity() == 3);
  CHECK_FALSE(backend.set_affinity(42));
  CHECK(backend.current_affinity() == 3);  // failed pin leaves affinity alone

  std::vector<std::future<int>> seen;
  for (int cpu = 0; cpu < 8; ++cpu)
    seen.push_back(std::async(std::launch::async, [&backend, cpu] {
      backend.set_affinity(cpu);
      return backend.current_affinity().value_or(-1);
    }));
  for (int cpu = 0; cpu < 8; ++cpu) CHECK(seen[std::size_t(cpu)].get() == cpu);
}

TEST_CASE("randomized placements keep every page inside the policy's domains",
          "[placement][property]") {
  std::mt19937 rng(20260816);
  for (int trial = 0; trial < 60; ++trial) {
    const int n_domains = 1 + int(rng() % 4);
    std::vector<std::vector<int>> cpus(static_cast<std::size_t>(n_domains));
    int next_cpu = 0;
    for (auto& d : cpus)
      for (int i = 0, n = 1 + int(rng() % 3); i < n; ++i) d.push_back(next_cpu++);
    const auto topo = Topology::from_domains(cpus, 32, 128);
    SimBackend backend(topo);

    std::vector<int> requested;
    for (int d = 0; d < n_domains; ++d)
      if (rng() % 2 || d == n_domains - 1) requested.push_back(d);
    const std::size_t bytes = 32 * (1 + rng() % 23);

    const int kind = int(rng() % 3);
    PlacementPolicy policy = kind == 0   ? PlacementPolicy::bind(requested.front())
                             : kind == 1 ? PlacementPolicy::interleave(requested)
                                         : PlacementPolicy::replicate(requested);
    auto region = alloc_placed(backend, topo, bytes, policy);

    if (kind == 0) {
      for (int v : page_map(region)) CHECK(v == requested.front());
    } else if (kind == 1) {
      const auto map = page_map(region);
      for (std::size_t p = 0; p < map.size(); ++p)
        CHECK(map[p] == requested[p % requested.size()]);
    } else {
      REQUIRE(region.n_replicas() == int(requested.size()));
      for (int r = 0; r < region.n_replicas(); ++r) {
        CHECK(region.replica_home(r) == requested[std::size_t(r)]);
        for (int v : page_map(region, r)) CHECK(v == requested[std::size_t(r)]);
      }
    }
  }
}

TEST_CASE("OS backend smoke: allocate, touch, query, pin", "[placement][os]") {
  OsBackend backend;
  auto alloc = backend.allocate(4 * 4096, false);
  REQUIRE(alloc.ptr != nullptr);
  CHECK(alloc.page_bytes == std::size_t(sysconf(_SC_PAGESIZE)));

  // Untouched anonymous pages have no residency yet.
  CHECK_FALSE(backend.page_domain(alloc, 0).has_value());
  std::memset(alloc.ptr, 0x5a, alloc.bytes);
  const auto home = backend.page_domain(alloc, 0);
  REQUIRE(home.has_value());
  CHECK(*home >= 0);

  // Binding to the page's own node must be accepted.
  const int node = *home;
  CHECK(backend.bind_range(alloc, 0, alloc.bytes, RangeBinding::bind, std::span(&node, 1)));
  backend.deallocate(alloc);
  CHECK(alloc.ptr == nullptr);

  // A huge-page request either succeeds or falls back to base pages.
  auto huge = backend.allocate(1, true);
  REQUIRE(huge.ptr != nullptr);
  CHECK(huge.huge_requested);
  if (!huge.huge_granted) CHECK(huge.page_bytes == std::size_t(sysconf(_SC_PAGESIZE)));
  backend.deallocate(huge);

  std::thread pinned([&backend] {
    if (backend.set_affinity(0)) CHECK(backend.current_affinity() == 0);
  });
  pinned.join();
}
