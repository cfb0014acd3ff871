#include "aeml/codec_store.hpp"

#include <cstring>
#include <fstream>

#include "aeml/io.hpp"

namespace aeml {

std::vector<std::uint8_t> MlpVectorCodec::encode(std::span<const double> y_norm) const {
  if (static_cast<int>(y_norm.size()) != codec_->input_dim())
    throw ShapeError("codec store: consolidated length does not match codec input");
  std::vector<float> yf(y_norm.begin(), y_norm.end());
  std::vector<float> latent(codec_->latent_dim());
  codec_->encode(yf, latent);
  std::vector<std::uint8_t> bytes(latent.size() * sizeof(float));
  std::memcpy(bytes.data(), latent.data(), bytes.size());
  return bytes;
}

void MlpVectorCodec::decode(std::span<const std::uint8_t> bytes, std::span<double> y_norm) const {
  if (bytes.size() != std::size_t(codec_->latent_dim()) * sizeof(float))
    throw FormatError("codec store: bad latent payload size");
  std::vector<float> latent(codec_->latent_dim());
  std::memcpy(latent.data(), bytes.data(), bytes.size());
  std::vector<float> yf(codec_->input_dim());
  codec_->decode(latent, yf);
  for (std::size_t i = 0; i < y_norm.size(); ++i) y_norm[i] = double(yf[i]);
}

void QuantVectorCodec::decode(std::span<const std::uint8_t> bytes, std::span<double> y_norm) const {
  std::vector<double> y = q_decode(bytes, cfg_);
  if (y.size() != y_norm.size()) throw FormatError("quantizer payload has the wrong length");
  std::copy(y.begin(), y.end(), y_norm.begin());
}

void ExternalVectorCodec::decode(std::span<const std::uint8_t> bytes,
                                 std::span<double> y_norm) const {
  std::vector<double> y = codec_.decode(bytes, static_cast<int>(y_norm.size()));
  std::copy(y.begin(), y.end(), y_norm.begin());
}

// ---------------------------------------------------------------------------
// Spill file: header {magic "AETS", version u32, N_in u32, scheme u8}, then
// records {t u32, s u8, tile_slot u32, nbytes u32, payload}.
// ---------------------------------------------------------------------------

class SpillFile {
 public:
  SpillFile(const std::string& path, int n_in, Scheme scheme) : path_(path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open spill file: " + path);
    out.write("AETS", 4);
    const std::uint32_t version = 1;
    const std::uint32_t nin = static_cast<std::uint32_t>(n_in);
    const std::uint8_t sch = static_cast<std::uint8_t>(scheme);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&nin), 4);
    out.write(reinterpret_cast<const char*>(&sch), 1);
    offset_ = 13;
  }

  std::int64_t append(const StageKey& key, int tile_slot, std::span<const std::uint8_t> payload) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    const std::uint32_t t = static_cast<std::uint32_t>(key.step);
    const std::uint8_t s = static_cast<std::uint8_t>(key.stage);
    const std::uint32_t slot = static_cast<std::uint32_t>(tile_slot);
    const std::uint32_t nbytes = static_cast<std::uint32_t>(payload.size());
    out.write(reinterpret_cast<const char*>(&t), 4);
    out.write(reinterpret_cast<const char*>(&s), 1);
    out.write(reinterpret_cast<const char*>(&slot), 4);
    out.write(reinterpret_cast<const char*>(&nbytes), 4);
    out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    const std::int64_t rec_offset = offset_ + 13;
    offset_ += 13 + std::int64_t(payload.size());
    return rec_offset;  // offset of the payload itself
  }

  std::vector<std::uint8_t> read(std::int64_t offset, std::uint32_t len) const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw FormatError("cannot reopen spill file: " + path_);
    in.seekg(offset);
    std::vector<std::uint8_t> bytes(len);
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(len));
    if (in.gcount() != std::streamsize(len)) throw FormatError("spill file truncated");
    return bytes;
  }

 private:
  std::string path_;
  std::int64_t offset_ = 0;
};

CodecStore::CodecStore(const Grid& grid, int state_dim, Scheme scheme, int window,
                       std::shared_ptr<const VectorCodec> codec, std::string spill_path)
    : grid_(grid),
      fields_(state_dim + 1),
      scheme_(scheme),
      window_(scheme == Scheme::Space ? 1 : window),
      cons_(grid, scheme, window),
      codec_(std::move(codec)),
      spill_path_(std::move(spill_path)) {
  if (state_dim != grid.dim) throw ShapeError("codec store: state dim does not match grid");
  gather_buf_.resize(cons_.tile_nodes());
  norm_buf_.resize(cons_.n_in());
}

CodecStore::~CodecStore() = default;

void CodecStore::begin_sweep(int total_steps, StepReplayer replayer) {
  TrajectoryStore::begin_sweep(total_steps, std::move(replayer));
  const std::int64_t slots = std::int64_t(total_steps) * 4;
  const std::int64_t units =
      scheme_ == Scheme::Space ? slots : (slots + window_ - 1) / window_;
  entries_.assign(std::size_t(units) * vectors_per_unit(), Packed{});
  if (scheme_ == Scheme::Time)
    window_buf_.assign(std::size_t(vectors_per_unit()) * cons_.n_in(), 0.0);
  cached_unit_ = -1;
  if (!spill_path_.empty()) spill_ = std::make_unique<SpillFile>(spill_path_, cons_.n_in(), scheme_);
}

void CodecStore::encode_entry(std::int64_t unit, int tile, int field,
                              std::span<const double> y_true, const StageKey& first_key,
                              int /*pad*/) {
  Packed p;
  p.meta = normalize(y_true, std::span<double>(norm_buf_.data(), y_true.size()));
  std::vector<std::uint8_t> bytes =
      codec_->encode(std::span<const double>(norm_buf_.data(), y_true.size()));
  ++stats_.compress_calls;
  stats_.bytes_logical += std::int64_t(y_true.size()) * 8;
  stats_.bytes_resident += std::int64_t(bytes.size()) + 16;  // + normalization metadata
  payload_bytes_ += std::int64_t(bytes.size());
  if (spill_) {
    p.spill_len = static_cast<std::uint32_t>(bytes.size());
    p.spill_offset = spill_->append(first_key, tile * fields_ + field, bytes);
  } else {
    p.bytes = std::move(bytes);
  }
  entries_[entry_index(unit, tile, field)] = std::move(p);
}

void CodecStore::put(const StageKey& key, const StateVector& state) {
  check_put_order(key);
  if (state.dim + 1 != fields_ || state.nodes != grid_.node_count())
    throw ShapeError("codec store: state does not match grid");

  const std::int64_t slot = key.slot();
  if (scheme_ == Scheme::Space) {
    for (int t = 0; t < cons_.tile_count(); ++t)
      for (int f = 0; f < fields_; ++f) {
        cons_.gather(state, t, f, gather_buf_);
        encode_entry(slot, t, f, gather_buf_, key, 0);
      }
  } else {
    const std::int64_t w = slot / window_;
    const int local = static_cast<int>(slot % window_);
    const int tn = cons_.tile_nodes();
    for (int t = 0; t < cons_.tile_count(); ++t)
      for (int f = 0; f < fields_; ++f) {
        double* dst = window_buf_.data() +
                      (std::size_t(t) * fields_ + f) * cons_.n_in() + std::size_t(local) * tn;
        cons_.gather(state, t, f, std::span<double>(dst, tn));
      }
    if (local == window_ - 1) flush_window(w, window_);
  }
}

void CodecStore::flush_window(std::int64_t window_id, int filled_slots) {
  const int pad = window_ - filled_slots;
  const StageKey first{static_cast<int>(window_id * window_ / 4),
                       static_cast<int>((window_id * window_) % 4)};
  for (int t = 0; t < cons_.tile_count(); ++t)
    for (int f = 0; f < fields_; ++f) {
      const double* src = window_buf_.data() + (std::size_t(t) * fields_ + f) * cons_.n_in();
      encode_entry(window_id, t, f, std::span<const double>(src, cons_.n_in()), first, pad);
    }
  std::fill(window_buf_.begin(), window_buf_.end(), 0.0);
}

void CodecStore::finish_sweep() {
  if (scheme_ == Scheme::Time) {
    const std::int64_t filled = next_slot_ % window_;
    if (filled != 0) flush_window(next_slot_ / window_, static_cast<int>(filled));
  }
  TrajectoryStore::finish_sweep();
}

bool CodecStore::contains(const StageKey& key) const {
  return key.stage >= 0 && key.stage < 4 && key.step >= 0 && key.slot() < next_slot_;
}

std::vector<std::uint8_t> CodecStore::fetch_bytes(const Packed& p) {
  if (p.spill_offset >= 0) return spill_->read(p.spill_offset, p.spill_len);
  return p.bytes;
}

void CodecStore::decode_unit(std::int64_t unit) {
  const int nin = cons_.n_in();
  cache_.resize(std::size_t(vectors_per_unit()) * nin);
  for (int t = 0; t < cons_.tile_count(); ++t)
    for (int f = 0; f < fields_; ++f) {
      Packed& p = entries_[entry_index(unit, t, f)];
      const std::vector<std::uint8_t> bytes = fetch_bytes(p);
      double* dst = cache_.data() + (std::size_t(t) * fields_ + f) * nin;
      codec_->decode(bytes, std::span<double>(norm_buf_.data(), nin));
      denormalize(std::span<const double>(norm_buf_.data(), nin), p.meta,
                  std::span<double>(dst, nin));
      ++stats_.decompress_calls;
    }
  cached_unit_ = unit;
}

void CodecStore::get(const StageKey& key, StateVector& out) {
  if (!contains(key)) throw StorageContractError("codec store: stage key was never put");
  const std::int64_t slot = key.slot();
  const std::int64_t unit = scheme_ == Scheme::Space ? slot : slot / window_;
  if (unit != cached_unit_) decode_unit(unit);

  if (out.dim + 1 != fields_ || out.nodes != grid_.node_count()) {
    out = StateVector::zeros(grid_);
  }
  const int tn = cons_.tile_nodes();
  const int local = scheme_ == Scheme::Space ? 0 : static_cast<int>(slot % window_);
  for (int t = 0; t < cons_.tile_count(); ++t)
    for (int f = 0; f < fields_; ++f) {
      const double* src = cache_.data() + (std::size_t(t) * fields_ + f) * cons_.n_in() +
                          std::size_t(local) * tn;
      cons_.scatter(std::span<const double>(src, tn), t, f, out);
    }
  // Reconstructions must respect the traction-free constraint.
  out.pin_boundary_dilatation(grid_);
}

StoreStats CodecStore::stats() const {
  StoreStats st = stats_;
  const std::int64_t fixed = codec_->fixed_payload_bytes();
  if (fixed > 0) {
    st.compression_ratio_paper = double(cons_.n_in()) * 8.0 / double(fixed);
  } else if (payload_bytes_ > 0) {
    st.compression_ratio_paper = double(st.bytes_logical) / double(payload_bytes_);
  }
  if (st.bytes_resident > 0)
    st.compression_ratio_true = double(st.bytes_logical) / double(st.bytes_resident);
  return st;
}

MlpCodecStore::MlpCodecStore(const Grid& grid, int state_dim, Scheme scheme, int window,
                             std::shared_ptr<const MlpCodec> codec, std::string spill_path)
    : CodecStore(grid, state_dim, scheme, window,
                 std::make_shared<MlpVectorCodec>(std::move(codec)), std::move(spill_path)) {}

QuantizerStore::QuantizerStore(const Grid& grid, int state_dim, Scheme scheme, int window,
                               QuantizerConfig cfg, std::string spill_path)
    : CodecStore(grid, state_dim, scheme, window, std::make_shared<QuantVectorCodec>(cfg),
                 std::move(spill_path)) {}

ExternalCodecStore::ExternalCodecStore(const Grid& grid, int state_dim, Scheme scheme, int window,
                                       std::string command, double tolerance,
                                       std::string spill_path)
    : CodecStore(grid, state_dim, scheme, window,
                 std::make_shared<ExternalVectorCodec>(std::move(command), tolerance),
                 std::move(spill_path)) {}

}  // namespace aeml
