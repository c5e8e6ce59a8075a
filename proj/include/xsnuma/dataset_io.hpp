#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

// Dataset files: little-endian, fixed layout, checksummed. The unionized
// grid is never stored — it is deterministic to rebuild, and where it lives
// is exactly what the experiments vary.
//
//   bytes 0..3    magic "XSBD"
//   bytes 4..7    format version (1)
//   bytes 8..19   n_nuclides, gridpoints_per_nuclide, n_materials (u32 each)
//   bytes 20..27  rng seed (u64)
//   bytes 28..35  FNV-1a of the payload (u64)
//   payload       per nuclide, per point: energy + 5 xs values (f64 each);
//                 then per material: count (u32), ids (u32 each), weight (f64)

namespace xsnuma {

struct DatasetIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagicError : DatasetIoError {
  using DatasetIoError::DatasetIoError;
};
struct BadVersionError : DatasetIoError {
  using DatasetIoError::DatasetIoError;
};
struct BadChecksumError : DatasetIoError {
  using DatasetIoError::DatasetIoError;
};
struct TruncatedFileError : DatasetIoError {
  using DatasetIoError::DatasetIoError;
};
struct FileAccessError : DatasetIoError {
  using DatasetIoError::DatasetIoError;
};

inline constexpr char kDatasetMagic[4] = {'X', 'S', 'B', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 36;

namespace detail {

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put_f64(std::vector<std::uint8_t>& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct Cursor {
  const std::uint8_t* p;
  std::size_t left;

  void need(std::size_t n) const {
    if (left < n) throw TruncatedFileError("dataset file ends mid-record");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

inline std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_dataset(const Dataset& ds) {
  validate(ds.config);
  validate(ds.materials, ds.config.n_nuclides);

  std::vector<std::uint8_t> payload;
  payload.reserve(ds.grids.flat().size() * 48 + ds.materials.nuclides.size() * 64);
  for (const auto& pt : ds.grids.flat()) {
    detail::put_f64(payload, pt.energy);
    for (double x : pt.xs) detail::put_f64(payload, x);
  }
  for (std::size_t m = 0; m < ds.materials.nuclides.size(); ++m) {
    detail::put_u32(payload, std::uint32_t(ds.materials.nuclides[m].size()));
    for (std::uint32_t id : ds.materials.nuclides[m]) detail::put_u32(payload, id);
    detail::put_f64(payload, ds.materials.selection_weights[m]);
  }

  std::vector<std::uint8_t> out;
  out.reserve(kDatasetHeaderBytes + payload.size());
  for (char c : kDatasetMagic) out.push_back(std::uint8_t(c));
  detail::put_u32(out, kDatasetVersion);
  detail::put_u32(out, ds.config.n_nuclides);
  detail::put_u32(out, ds.config.gridpoints_per_nuclide);
  detail::put_u32(out, ds.config.n_materials);
  detail::put_u64(out, ds.config.rng_seed);
  detail::put_u64(out, detail::fnv1a(payload.data(), payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline Dataset deserialize_dataset(const std::uint8_t* bytes, std::size_t size) {
  if (size < kDatasetHeaderBytes) throw TruncatedFileError("shorter than the header");
  if (std::memcmp(bytes, kDatasetMagic, 4) != 0) throw BadMagicError("not a dataset file");

  detail::Cursor cur{bytes + 4, size - 4};
  const std::uint32_t version = cur.u32();
  if (version != kDatasetVersion)
    throw BadVersionError("unsupported format version " + std::to_string(version));

  DatasetConfig cfg;
  cfg.n_nuclides = cur.u32();
  cfg.gridpoints_per_nuclide = cur.u32();
  cfg.n_materials = cur.u32();
  cfg.rng_seed = cur.u64();
  const std::uint64_t want = cur.u64();
  if (detail::fnv1a(cur.p, cur.left) != want)
    throw BadChecksumError("payload checksum mismatch");
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw TruncatedFileError(std::string("inconsistent header counts: ") + e.what());
  }

  // Length-check before allocating anything sized by header fields.
  cur.need(std::size_t(cfg.n_nuclides) * cfg.gridpoints_per_nuclide * 48);
  std::vector<NuclideGridPoint> points(std::size_t(cfg.n_nuclides) *
                                       cfg.gridpoints_per_nuclide);
  for (auto& pt : points) {
    pt.energy = cur.f64();
    for (double& x : pt.xs) x = cur.f64();
  }

  MaterialTable mats;
  for (std::uint32_t m = 0; m < cfg.n_materials; ++m) {
    const std::uint32_t count = cur.u32();
    cur.need(std::size_t(count) * 4 + 8);
    std::vector<std::uint32_t> ids(count);
    for (auto& id : ids) id = cur.u32();
    mats.nuclides.push_back(std::move(ids));
    mats.selection_weights.push_back(cur.f64());
  }
  if (cur.left != 0) throw TruncatedFileError("trailing bytes after the material table");
  validate(mats, cfg.n_nuclides);

  return Dataset{cfg, NuclideGrids(cfg.n_nuclides, cfg.gridpoints_per_nuclide, std::move(points)),
                 std::move(mats)};
}

inline void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  const auto bytes = serialize_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileAccessError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw FileAccessError("short write to " + path.string());
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FileAccessError("cannot open " + path.string());
  const auto size = std::size_t(in.tellg());
  std::vector<std::uint8_t> bytes(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(size));
  if (!in) throw FileAccessError("short read from " + path.string());
  return deserialize_dataset(bytes.data(), bytes.size());
}

}  // namespace xsnuma
