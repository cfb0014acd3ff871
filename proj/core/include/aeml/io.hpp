#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "aeml/errors.hpp"
#include "aeml/field.hpp"
#include "aeml/grid.hpp"
#include "aeml/mlp.hpp"

namespace aeml {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FormatError("cannot open file for writing: " + path.string());
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), std::streamsize(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { bytes(&v, 2); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i64(std::int64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open file for reading: " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), std::streamsize(n));
    if (in_.gcount() != std::streamsize(n)) throw FormatError("unexpected end of file");
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint16_t u16() { std::uint16_t v; bytes(&v, 2); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  std::int64_t i64() { std::int64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  bool at_eof() { return in_.peek() == std::ifstream::traits_type::eof(); }

 private:
  std::ifstream in_;
};

/// Flat binary field: magic "AEFD", u32 dim, u32 nodes per axis, f64 payload.
void write_field(const std::filesystem::path& path, const Grid& grid, const Field& field);
Field read_field(const std::filesystem::path& path, std::array<int, 2>* nodes_out = nullptr);

/// Training dataset shard: header {magic "AETD", version u32, N_in u32,
/// scheme u8} followed by packed records {offset f64, scale f64, payload
/// N_in x f32}.
struct Dataset {
  int n_in = 0;
  std::uint8_t scheme = 0;
  std::vector<float> payload;            // count x n_in, normalized
  std::vector<NormalizationMeta> meta;   // per record

  int count() const { return static_cast<int>(meta.size()); }
  std::span<const float> record(int i) const {
    return {payload.data() + std::size_t(i) * n_in, std::size_t(n_in)};
  }
};

class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, int n_in, std::uint8_t scheme);
  void append(const NormalizationMeta& meta, std::span<const float> payload);
  int written() const { return written_; }

 private:
  BinaryWriter writer_;
  int n_in_;
  int written_ = 0;
};

Dataset read_dataset(const std::filesystem::path& path);
/// Concatenates shards; all must agree on N_in and scheme.
Dataset read_dataset(const std::vector<std::filesystem::path>& paths);

}  // namespace aeml
