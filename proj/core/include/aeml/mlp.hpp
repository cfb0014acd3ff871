#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aeml/errors.hpp"

namespace aeml {

/// Exponential linear unit: e^x - 1 for x < 0, x otherwise.
inline double elu(double x) { return x < 0.0 ? std::expm1(x) : x; }

/// Per-vector normalization to [0, 1]. Scale never drops below beta.
struct NormalizationMeta {
  double offset = 0.0;
  double scale = 1.0;
  static constexpr double kBeta = 1e-7;
};

NormalizationMeta normalize(std::span<const double> y_true, std::span<double> y);
NormalizationMeta normalize(std::span<const double> y_true, std::span<float> y);
void denormalize(std::span<const float> y, const NormalizationMeta& meta, std::span<double> out);
void denormalize(std::span<const double> y, const NormalizationMeta& meta, std::span<double> out);

struct MlpArchitecture {
  enum class Activation : std::uint8_t { Elu = 0, Identity = 1 };

  int input_dim = 256;
  int latent_dim = 16;
  std::vector<int> encoder_widths = {128, 64, 32};       // hidden widths before the latent layer
  std::vector<int> decoder_widths = {32, 64, 128, 256};  // last entry is the output layer
  Activation activation = Activation::Elu;

  /// Desk-scale default: 256 -> [128, 64, 32] -> 16 -> [32, 64, 128, 256].
  static MlpArchitecture desk();
  /// The reference instance: 4096 -> 64 with the published hidden widths.
  static MlpArchitecture paper();

  std::vector<std::pair<int, int>> encoder_layer_dims() const;
  std::vector<std::pair<int, int>> decoder_layer_dims() const;
  void validate() const;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<float> w;  // row-major (in x out)
  std::vector<float> b;  // out
  // Pruning support: mask[i*out+j] == 0 marks an entry held at exactly zero.
  std::vector<std::uint8_t> mask;  // empty = fully dense

  struct Csr {
    std::vector<std::int32_t> row_ptr;  // in + 1
    std::vector<std::int32_t> col;
    std::vector<float> val;
  };
  std::optional<Csr> csr;

  bool pruned() const { return !mask.empty(); }
  void build_csr();
  /// Refresh csr values from w (pattern unchanged).
  void sync_csr_values();
};

/// Dense autoencoder with ELU activations and optional sparse first-encoder /
/// last-decoder layers. Inference is reentrant: no shared mutable state.
class MlpCodec {
 public:
  MlpCodec() = default;
  explicit MlpCodec(const MlpArchitecture& arch);  // zero-initialized weights
  static MlpCodec random_init(const MlpArchitecture& arch, std::uint64_t seed);

  int input_dim() const { return arch_.input_dim; }
  int latent_dim() const { return arch_.latent_dim; }
  const MlpArchitecture& arch() const { return arch_; }

  void encode(std::span<const float> y, std::span<float> latent) const;
  void decode(std::span<const float> latent, std::span<float> y) const;
  /// Row-stacked batches; identical arithmetic to per-row calls.
  void encode_batch(const float* y, int batch, float* latent) const;
  void decode_batch(const float* latent, int batch, float* y) const;

  void save(const std::filesystem::path& path) const;
  static MlpCodec load(const std::filesystem::path& path);

  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  bool trained = false;
  /// Dense-vs-sparse inference path for pruned layers (benchmarked, not resolved).
  bool use_sparse_inference = true;

 private:
  MlpArchitecture arch_;
};

/// Y(B x out) = act(X(B x in) W + b); row-major, deterministic accumulation
/// order identical for every batch size. Exposed for tests and benchmarks.
void dense_forward(const DenseLayer& layer, const float* x, int batch, float* y, bool act,
                   bool use_sparse);

}  // namespace aeml
