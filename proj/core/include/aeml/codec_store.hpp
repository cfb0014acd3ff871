#pragma once

#include <memory>
#include <optional>

#include "aeml/consolidate.hpp"
#include "aeml/mlp.hpp"
#include "aeml/quant.hpp"
#include "aeml/store.hpp"

namespace aeml {

/// Encodes one normalized consolidated vector to bytes and back.
class VectorCodec {
 public:
  virtual ~VectorCodec() = default;
  virtual std::vector<std::uint8_t> encode(std::span<const double> y_norm) const = 0;
  virtual void decode(std::span<const std::uint8_t> bytes, std::span<double> y_norm) const = 0;
  /// Payload size the paper-convention ratio counts; 0 = use the actual stream size.
  virtual std::int64_t fixed_payload_bytes() const { return 0; }
  virtual std::string name() const = 0;
};

class MlpVectorCodec : public VectorCodec {
 public:
  explicit MlpVectorCodec(std::shared_ptr<const MlpCodec> codec) : codec_(std::move(codec)) {}
  std::vector<std::uint8_t> encode(std::span<const double> y_norm) const override;
  void decode(std::span<const std::uint8_t> bytes, std::span<double> y_norm) const override;
  std::int64_t fixed_payload_bytes() const override {
    return std::int64_t(codec_->latent_dim()) * 4;
  }
  std::string name() const override { return "ae"; }

 private:
  std::shared_ptr<const MlpCodec> codec_;
};

class QuantVectorCodec : public VectorCodec {
 public:
  explicit QuantVectorCodec(QuantizerConfig cfg) : cfg_(cfg) {}
  std::vector<std::uint8_t> encode(std::span<const double> y_norm) const override {
    return q_encode(y_norm, cfg_);
  }
  void decode(std::span<const std::uint8_t> bytes, std::span<double> y_norm) const override;
  std::string name() const override { return "quant"; }
  const QuantizerConfig& config() const { return cfg_; }

 private:
  QuantizerConfig cfg_;
};

class ExternalVectorCodec : public VectorCodec {
 public:
  ExternalVectorCodec(std::string command, double tolerance)
      : codec_(std::move(command), tolerance) {}
  std::vector<std::uint8_t> encode(std::span<const double> y_norm) const override {
    return codec_.encode(y_norm);
  }
  void decode(std::span<const std::uint8_t> bytes, std::span<double> y_norm) const override;
  std::string name() const override { return "external"; }

 private:
  ExternalCodec codec_;
};

/// Lossy trajectory store: consolidates stage states per tile and field (space
/// or time scheme), normalizes each vector, and keeps only the codec output
/// plus 16 bytes of normalization metadata. Reverse-order gets decode each
/// unit once. Optionally spills encoded records to an "AETS" file.
class CodecStore : public TrajectoryStore {
 public:
  CodecStore(const Grid& grid, int state_dim, Scheme scheme, int window,
             std::shared_ptr<const VectorCodec> codec, std::string spill_path = "");
  ~CodecStore() override;

  void begin_sweep(int total_steps, StepReplayer replayer) override;
  void put(const StageKey& key, const StateVector& state) override;
  void get(const StageKey& key, StateVector& out) override;
  bool contains(const StageKey& key) const override;
  void finish_sweep() override;
  StoreStats stats() const override;
  std::string name() const override { return codec_->name(); }

  int n_in() const { return cons_.n_in(); }
  Scheme scheme() const { return scheme_; }

 private:
  struct Packed {
    NormalizationMeta meta;
    std::vector<std::uint8_t> bytes;   // empty when spilled
    std::int64_t spill_offset = -1;
    std::uint32_t spill_len = 0;
  };

  int vectors_per_unit() const { return cons_.tile_count() * fields_; }
  std::size_t entry_index(std::int64_t unit, int tile, int field) const {
    return std::size_t(unit) * vectors_per_unit() + std::size_t(tile) * fields_ + field;
  }
  void encode_entry(std::int64_t unit, int tile, int field, std::span<const double> y_true,
                    const StageKey& first_key, int pad);
  void flush_window(std::int64_t window_id, int filled_slots);
  void decode_unit(std::int64_t unit);
  std::vector<std::uint8_t> fetch_bytes(const Packed& p);

  Grid grid_;
  int fields_;
  Scheme scheme_;
  int window_;
  Consolidator cons_;
  std::shared_ptr<const VectorCodec> codec_;

  std::vector<Packed> entries_;
  std::vector<double> gather_buf_;   // tile_nodes scratch
  std::vector<double> norm_buf_;     // n_in scratch
  std::vector<double> window_buf_;   // time scheme: tiles*fields*n_in during the sweep
  std::int64_t cached_unit_ = -1;
  std::vector<double> cache_;        // decoded unit, tiles*fields*n_in (denormalized)

  std::string spill_path_;
  std::unique_ptr<class SpillFile> spill_;

  std::int64_t payload_bytes_ = 0;  // codec bytes, excluding metadata
  StoreStats stats_;
};

/// Autoencoder-backed store; the paper-convention ratio is
/// (N_in * 8) / (latent * 4), metadata excluded.
class MlpCodecStore : public CodecStore {
 public:
  MlpCodecStore(const Grid& grid, int state_dim, Scheme scheme, int window,
                std::shared_ptr<const MlpCodec> codec, std::string spill_path = "");
};

class QuantizerStore : public CodecStore {
 public:
  QuantizerStore(const Grid& grid, int state_dim, Scheme scheme, int window,
                 QuantizerConfig cfg, std::string spill_path = "");
};

class ExternalCodecStore : public CodecStore {
 public:
  ExternalCodecStore(const Grid& grid, int state_dim, Scheme scheme, int window,
                     std::string command, double tolerance, std::string spill_path = "");
};

}  // namespace aeml
