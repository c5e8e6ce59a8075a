#include <catch2/catch_amalgamated.hpp>

#include "xsnuma/lookup.hpp"

#include <bit>
#include <cstring>
#include <vector>

using namespace xsnuma;

namespace {

// Linear-scan reference for the interval search.
std::size_t oracle_interval(std::span<const double> e, double probe) {
  long best = -1;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (e[i] <= probe) best = long(i);
  if (best < 0) best = 0;
  if (best > long(e.size()) - 2) best = long(e.size()) - 2;
  return std::size_t(best);
}

// Reference macroscopic lookup: linear-scan search plus the same linear
// interpolation formula, written independently of the kernel.
XsVector oracle_macro_xs(const Dataset& ds, double p_energy, std::size_t material) {
  XsVector acc{};
  for (std::uint32_t id : ds.materials.nuclides[material]) {
    const auto pts = ds.grids.nuclide(id);
    std::vector<double> e;
    for (const auto& p : pts) e.push_back(p.energy);
    const std::size_t i = oracle_interval(e, p_energy);
    const double e0 = pts[i].energy, e1 = pts[i + 1].energy;
    for (int c = 0; c < kXsChannels; ++c) {
      double v;
      if (e1 == e0)
        v = pts[i].xs[c];
      else
        v = pts[i].xs[c] + (p_energy - e0) / (e1 - e0) * (pts[i + 1].xs[c] - pts[i].xs[c]);
      acc[c] += v;
    }
  }
  return acc;
}

bool bitwise_equal(const XsVector& a, const XsVector& b) {
  return std::memcmp(a.data(), b.data(), sizeof(a)) == 0;
}

std::vector<NuclideGridPoint> ramp_points(std::vector<double> energies) {
  std::vector<NuclideGridPoint> pts;
  for (double e : energies) {
    NuclideGridPoint p{};
    p.energy = e;
    for (int c = 0; c < kXsChannels; ++c) p.xs[c] = 10.0 * e;
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("interval search boundary behaviour", "[lookup]") {
  const std::vector<double> e{0.2, 0.5, 0.9};
  CHECK(find_interval(e, 0.05) == 0);  // below the grid
  CHECK(find_interval(e, 0.2) == 0);   // exact hit on a knot
  CHECK(find_interval(e, 0.3) == 0);
  CHECK(find_interval(e, 0.5) == 1);
  CHECK(find_interval(e, 0.9) == 1);   // top entry clamps to len-2
  CHECK(find_interval(e, 2.0) == 1);

  const std::vector<double> dup{0.1, 0.3, 0.3, 0.7};
  CHECK(find_interval(dup, 0.3) == 2);  // last duplicate wins
  CHECK(find_interval(dup, 0.31) == 2);
  CHECK(find_interval(dup, 0.1) == 0);

  CHECK_THROWS_AS(find_interval(std::vector<double>{1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("interval search matches the linear-scan oracle", "[lookup]") {
  Splitmix64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t len = 2 + rng.next() % 63;
    std::vector<double> e;
    for (std::size_t i = 0; i < len; ++i) e.push_back(u64_to_open_unit(rng.next()));
    std::sort(e.begin(), e.end());
    if (trial % 3 == 0 && len > 3) e[len / 2] = e[len / 2 + 1];  // inject a duplicate
    for (int probe = 0; probe < 200; ++probe) {
      const double p = u64_to_open_unit(rng.next()) * 1.2 - 0.1;  // spill past both edges
      REQUIRE(find_interval(e, p) == oracle_interval(e, p));
    }
    for (double knot : e) REQUIRE(find_interval(e, knot) == oracle_interval(e, knot));
  }
}

TEST_CASE("interpolation worked examples", "[lookup]") {
  const auto pts = ramp_points({0.0, 1.0});
  XsVector v = interpolate(pts, 0, 0.25);
  for (double x : v) CHECK(x == 2.5);
  v = interpolate(pts, 0, 1.2);  // extrapolates with the edge slope
  for (double x : v) CHECK(x == 12.0);
  v = interpolate(pts, 0, 0.0);  // exact left endpoint, bit-exact
  for (int c = 0; c < kXsChannels; ++c) CHECK(v[c] == pts[0].xs[c]);

  // Zero-width segment returns its lower endpoint.
  auto dup = ramp_points({0.5, 0.5});
  dup[0].xs[0] = 7.0;
  v = interpolate(dup, 0, 0.5);
  CHECK(v[0] == 7.0);
}

TEST_CASE("basic macroscopic lookup matches the reference", "[lookup]") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Dataset ds = generate_dataset({6, 24, 4, seed});
    const DatasetView view = make_view(ds);
    Splitmix64 rng(seed * 77);
    for (int i = 0; i < 500; ++i) {
      const double e = u64_to_open_unit(rng.next());
      const std::size_t mat = rng.next() % 4;
      REQUIRE(bitwise_equal(macro_xs_basic(view, e, mat), oracle_macro_xs(ds, e, mat)));
    }
  }
}

TEST_CASE("unionized lookup is bit-exact with the basic algorithm", "[lookup]") {
  for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
    const Dataset ds = generate_dataset({5, 16, 3, seed});
    const UnionizedGrid ug = build_unionized(ds.grids);
    const DatasetView view = make_view(ds, &ug);
    Splitmix64 rng(seed);
    for (int i = 0; i < 2000; ++i) {
      const double e = u64_to_open_unit(rng.next()) * 1.1 - 0.05;
      const std::size_t mat = rng.next() % 3;
      REQUIRE(bitwise_equal(macro_xs_unionized(view, e, mat), macro_xs_basic(view, e, mat)));
    }
    // Every union knot as probe: ties must not break the equivalence.
    for (double knot : ug.energies)
      for (std::size_t mat = 0; mat < 3; ++mat)
        REQUIRE(bitwise_equal(macro_xs_unionized(view, knot, mat), macro_xs_basic(view, knot, mat)));
  }
}

TEST_CASE("unionized lookup rejects a mismatched grid", "[lookup]") {
  const Dataset ds = generate_dataset({3, 8, 2, 10});
  const Dataset other = generate_dataset({3, 8, 2, 11});
  const UnionizedGrid ug = build_unionized(other.grids);
  const DatasetView view = make_view(ds, &ug);
  CHECK_THROWS_AS(macro_xs_unionized(view, 0.5, 0), std::runtime_error);
}

TEST_CASE("search counters expose the per-lookup cost gap", "[lookup]") {
  const Dataset ds = generate_dataset({12, 16, 3, 21});
  const UnionizedGrid ug = build_unionized(ds.grids);
  const DatasetView view = make_view(ds, &ug);
  LookupCounters basic_cnt, union_cnt;
  std::size_t expected_basic = 0;
  for (int i = 0; i < 100; ++i) {
    const auto draw = rng_lookup(3, i);
    const std::size_t mat = ds.materials.sample(draw.material_u);
    macro_xs_basic(view, draw.p_energy, mat, &basic_cnt);
    macro_xs_unionized(view, draw.p_energy, mat, &union_cnt);
    expected_basic += ds.materials.nuclides[mat].size();
  }
  CHECK(basic_cnt.interval_searches == expected_basic);  // one search per material nuclide
  CHECK(union_cnt.interval_searches == 100);             // exactly one per lookup
  CHECK(basic_cnt.lookups == 100);
  CHECK(union_cnt.lookups == 100);
}

TEST_CASE("run_lookups checksum is independent of thread count and algorithm", "[lookup]") {
  const Dataset ds = generate_dataset({8, 32, 4, 2718});
  const UnionizedGrid ug = build_unionized(ds.grids);
  RunLookupsOptions opt;
  opt.n_lookups = 20000;
  opt.seed = 1;
  opt.algorithm = Algorithm::unionized;

  opt.n_threads = 1;
  const auto r1 = run_lookups(ds, &ug, opt);
  opt.n_threads = 3;
  const auto r3 = run_lookups(ds, &ug, opt);
  opt.n_threads = 8;
  const auto r8 = run_lookups(ds, &ug, opt);
  CHECK(r1.checksum == r3.checksum);
  CHECK(r1.checksum == r8.checksum);
  CHECK(r8.threads_used == 8);

  opt.algorithm = Algorithm::basic;
  opt.n_threads = 2;
  CHECK(run_lookups(ds, &ug, opt).checksum == r1.checksum);
}

TEST_CASE("run_lookups validates its inputs and honours the cpu budget", "[lookup]") {
  const Dataset ds = generate_dataset({2, 4, 1, 5});
  const UnionizedGrid ug = build_unionized(ds.grids);
  RunLookupsOptions opt;
  opt.n_lookups = 0;
  CHECK_THROWS_AS(run_lookups(ds, &ug, opt), std::invalid_argument);

  opt.n_lookups = 100;
  opt.n_threads = 0;
  CHECK_THROWS_AS(run_lookups(ds, &ug, opt), std::invalid_argument);

  opt.n_threads = 16;
  opt.cpu_budget = 4;
  const auto r = run_lookups(ds, &ug, opt);
  CHECK(r.clamped);
  CHECK(r.threads_used == 4);

  // Clamping must not change the checksum.
  RunLookupsOptions plain = opt;
  plain.n_threads = 1;
  plain.cpu_budget = 0;
  CHECK(run_lookups(ds, &ug, plain).checksum == r.checksum);
}

TEST_CASE("checksum digest separates index and value changes", "[lookup]") {
  XsVector xs{1.0, 2.0, 3.0, 4.0, 5.0};
  const auto h = checksum_lookup(0, xs);
  CHECK(h == checksum_lookup(0, xs));
  CHECK(h != checksum_lookup(1, xs));
  XsVector other = xs;
  other[4] = std::nextafter(other[4], 6.0);
  CHECK(h != checksum_lookup(0, other));
}
