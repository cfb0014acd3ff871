#include "aeml/io.hpp"

#include <cstring>

namespace aeml {

namespace {
constexpr char kFieldMagic[4] = {'A', 'E', 'F', 'D'};
constexpr char kDatasetMagic[4] = {'A', 'E', 'T', 'D'};
}  // namespace

void write_field(const std::filesystem::path& path, const Grid& grid, const Field& field) {
  if (static_cast<int>(field.size()) != grid.node_count())
    throw ShapeError("field does not match grid");
  BinaryWriter wr(path);
  wr.bytes(kFieldMagic, 4);
  wr.u32(static_cast<std::uint32_t>(grid.dim));
  for (int a = 0; a < grid.dim; ++a) wr.u32(static_cast<std::uint32_t>(grid.nodes[a]));
  wr.bytes(field.data(), field.size() * sizeof(double));
}

Field read_field(const std::filesystem::path& path, std::array<int, 2>* nodes_out) {
  BinaryReader rd(path);
  char magic[4];
  rd.bytes(magic, 4);
  if (std::memcmp(magic, kFieldMagic, 4) != 0) throw FormatError("not a field file");
  const int dim = static_cast<int>(rd.u32());
  if (dim != 1 && dim != 2) throw FormatError("field file: bad dimension");
  std::array<int, 2> nodes = {1, 1};
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) {
    nodes[a] = static_cast<int>(rd.u32());
    n *= std::size_t(nodes[a]);
  }
  if (nodes_out) *nodes_out = nodes;
  Field f(n);
  rd.bytes(f.data(), n * sizeof(double));
  return f;
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path, int n_in, std::uint8_t scheme)
    : writer_(path), n_in_(n_in) {
  writer_.bytes(kDatasetMagic, 4);
  writer_.u32(1);  // version
  writer_.u32(static_cast<std::uint32_t>(n_in));
  writer_.u8(scheme);
}

void DatasetWriter::append(const NormalizationMeta& meta, std::span<const float> payload) {
  if (static_cast<int>(payload.size()) != n_in_) throw DataError("dataset record length mismatch");
  writer_.f64(meta.offset);
  writer_.f64(meta.scale);
  writer_.bytes(payload.data(), payload.size() * sizeof(float));
  ++written_;
}

Dataset read_dataset(const std::filesystem::path& path) {
  BinaryReader rd(path);
  char magic[4];
  rd.bytes(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw FormatError("not a dataset shard");
  if (rd.u32() != 1) throw FormatError("unsupported dataset version");
  Dataset ds;
  ds.n_in = static_cast<int>(rd.u32());
  ds.scheme = rd.u8();
  if (ds.n_in <= 0) throw FormatError("dataset shard: bad record length");
  while (!rd.at_eof()) {
    NormalizationMeta meta;
    meta.offset = rd.f64();
    meta.scale = rd.f64();
    const std::size_t base = ds.payload.size();
    ds.payload.resize(base + std::size_t(ds.n_in));
    rd.bytes(ds.payload.data() + base, std::size_t(ds.n_in) * sizeof(float));
    ds.meta.push_back(meta);
  }
  return ds;
}

Dataset read_dataset(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw DataError("no dataset shards given");
  Dataset all = read_dataset(paths[0]);
  for (std::size_t i = 1; i < paths.size(); ++i) {
    Dataset ds = read_dataset(paths[i]);
    if (ds.n_in != all.n_in || ds.scheme != all.scheme)
      throw DataError("dataset shards disagree on record shape");
    all.payload.insert(all.payload.end(), ds.payload.begin(), ds.payload.end());
    all.meta.insert(all.meta.end(), ds.meta.begin(), ds.meta.end());
  }
  return all;
}

}  // namespace aeml
