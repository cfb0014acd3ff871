#include "aeml/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "aeml/io.hpp"

namespace aeml {

namespace {

template <class Out>
NormalizationMeta normalize_impl(std::span<const double> y_true, std::span<Out> y) {
  if (y.size() != y_true.size()) throw ShapeError("normalize: output size mismatch");
  double lo = 0.0, hi = 0.0;
  if (!y_true.empty()) {
    lo = hi = y_true[0];
    for (double v : y_true) {
      if (std::isnan(v)) throw DataError("normalize: NaN in input vector");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  NormalizationMeta meta;
  meta.offset = lo;
  meta.scale = std::max(hi - lo, NormalizationMeta::kBeta);
  const double inv = 1.0 / meta.scale;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    y[i] = static_cast<Out>((y_true[i] - meta.offset) * inv);
  return meta;
}

}  // namespace

NormalizationMeta normalize(std::span<const double> y_true, std::span<double> y) {
  return normalize_impl(y_true, y);
}
NormalizationMeta normalize(std::span<const double> y_true, std::span<float> y) {
  return normalize_impl(y_true, y);
}

void denormalize(std::span<const float> y, const NormalizationMeta& meta, std::span<double> out) {
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = meta.offset + meta.scale * double(y[i]);
}
void denormalize(std::span<const double> y, const NormalizationMeta& meta, std::span<double> out) {
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = meta.offset + meta.scale * y[i];
}

MlpArchitecture MlpArchitecture::desk() { return MlpArchitecture{}; }

MlpArchitecture MlpArchitecture::paper() {
  MlpArchitecture a;
  a.input_dim = 4096;
  a.latent_dim = 64;
  a.encoder_widths = {512, 256, 256, 256, 128, 64, 64};
  a.decoder_widths = {128, 128, 256, 256, 256, 512, 4096};
  return a;
}

void MlpArchitecture::validate() const {
  if (input_dim < 1 || latent_dim < 1 || latent_dim >= input_dim)
    throw ConfigError("architecture needs 1 <= latent_dim < input_dim");
  for (int w : encoder_widths)
    if (w < 1) throw ConfigError("encoder widths must be positive");
  if (decoder_widths.empty() || decoder_widths.back() != input_dim)
    throw ConfigError("decoder must end at input_dim");
  for (int w : decoder_widths)
    if (w < 1) throw ConfigError("decoder widths must be positive");
}

std::vector<std::pair<int, int>> MlpArchitecture::encoder_layer_dims() const {
  std::vector<std::pair<int, int>> dims;
  int prev = input_dim;
  for (int w : encoder_widths) {
    dims.emplace_back(prev, w);
    prev = w;
  }
  dims.emplace_back(prev, latent_dim);
  return dims;
}

std::vector<std::pair<int, int>> MlpArchitecture::decoder_layer_dims() const {
  std::vector<std::pair<int, int>> dims;
  int prev = latent_dim;
  for (int w : decoder_widths) {
    dims.emplace_back(prev, w);
    prev = w;
  }
  return dims;
}

void DenseLayer::build_csr() {
  Csr c;
  c.row_ptr.assign(in + 1, 0);
  for (int i = 0; i < in; ++i) {
    for (int j = 0; j < out; ++j) {
      if (mask.empty() || mask[std::size_t(i) * out + j]) {
        c.col.push_back(j);
        c.val.push_back(w[std::size_t(i) * out + j]);
      }
    }
    c.row_ptr[i + 1] = static_cast<std::int32_t>(c.col.size());
  }
  csr = std::move(c);
}

void DenseLayer::sync_csr_values() {
  if (!csr) return;
  std::size_t k = 0;
  for (int i = 0; i < in; ++i)
    for (std::int32_t p = csr->row_ptr[i]; p < csr->row_ptr[i + 1]; ++p)
      csr->val[k++] = w[std::size_t(i) * out + csr->col[p]];
}

void dense_forward(const DenseLayer& layer, const float* x, int batch, float* y, bool act,
                   bool use_sparse) {
  const bool sparse = use_sparse && layer.csr.has_value();
  for (int r = 0; r < batch; ++r) {
    const float* xr = x + std::size_t(r) * layer.in;
    float* yr = y + std::size_t(r) * layer.out;
    std::copy(layer.b.begin(), layer.b.end(), yr);
    if (sparse) {
      const auto& c = *layer.csr;
      for (int i = 0; i < layer.in; ++i) {
        const float xi = xr[i];
        if (xi == 0.0f) continue;
        for (std::int32_t p = c.row_ptr[i]; p < c.row_ptr[i + 1]; ++p) yr[c.col[p]] += xi * c.val[p];
      }
    } else {
      for (int i = 0; i < layer.in; ++i) {
        const float xi = xr[i];
        if (xi == 0.0f) continue;
        const float* wr = layer.w.data() + std::size_t(i) * layer.out;
        for (int j = 0; j < layer.out; ++j) yr[j] += xi * wr[j];
      }
    }
    if (act)
      for (int j = 0; j < layer.out; ++j) yr[j] = yr[j] < 0.0f ? std::expm1(yr[j]) : yr[j];
  }
}

namespace {

DenseLayer make_layer(int in, int out) {
  DenseLayer l;
  l.in = in;
  l.out = out;
  l.w.assign(std::size_t(in) * out, 0.0f);
  l.b.assign(out, 0.0f);
  return l;
}

void forward_chain(const std::vector<DenseLayer>& layers, const float* x, int batch, float* out,
                   bool elu_hidden, bool act_on_last, bool use_sparse) {
  std::vector<float> a, bbuf;
  const float* cur = x;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const DenseLayer& L = layers[li];
    const bool last = li + 1 == layers.size();
    float* dst = last ? out : nullptr;
    std::vector<float>& scratch = (li % 2 == 0) ? a : bbuf;
    if (!dst) {
      scratch.resize(std::size_t(batch) * L.out);
      dst = scratch.data();
    }
    const bool act = elu_hidden && (act_on_last || !last);
    dense_forward(L, cur, batch, dst, act, use_sparse);
    cur = dst;
  }
}

}  // namespace

MlpCodec::MlpCodec(const MlpArchitecture& arch) : arch_(arch) {
  arch_.validate();
  for (auto [in, out] : arch_.encoder_layer_dims()) encoder.push_back(make_layer(in, out));
  for (auto [in, out] : arch_.decoder_layer_dims()) decoder.push_back(make_layer(in, out));
}

MlpCodec MlpCodec::random_init(const MlpArchitecture& arch, std::uint64_t seed) {
  MlpCodec c(arch);
  std::mt19937_64 rng(seed);
  auto init = [&rng](DenseLayer& l) {
    const float limit = std::sqrt(6.0f / float(l.in + l.out));
    std::uniform_real_distribution<float> u(-limit, limit);
    for (float& v : l.w) v = u(rng);
  };
  for (auto& l : c.encoder) init(l);
  for (auto& l : c.decoder) init(l);
  return c;
}

void MlpCodec::encode_batch(const float* y, int batch, float* latent) const {
  const bool elu_act = arch_.activation == MlpArchitecture::Activation::Elu;
  forward_chain(encoder, y, batch, latent, elu_act, /*act_on_last=*/true, use_sparse_inference);
}

void MlpCodec::decode_batch(const float* latent, int batch, float* y) const {
  const bool elu_act = arch_.activation == MlpArchitecture::Activation::Elu;
  // Identity output activation: reconstructions may slightly exit [0, 1].
  forward_chain(decoder, latent, batch, y, elu_act, /*act_on_last=*/false, use_sparse_inference);
}

void MlpCodec::encode(std::span<const float> y, std::span<float> latent) const {
  if (static_cast<int>(y.size()) != arch_.input_dim ||
      static_cast<int>(latent.size()) != arch_.latent_dim)
    throw ShapeError("encode: dimension mismatch");
  encode_batch(y.data(), 1, latent.data());
}

void MlpCodec::decode(std::span<const float> latent, std::span<float> y) const {
  if (static_cast<int>(y.size()) != arch_.input_dim ||
      static_cast<int>(latent.size()) != arch_.latent_dim)
    throw ShapeError("decode: dimension mismatch");
  decode_batch(latent.data(), 1, y.data());
}

// ---------------------------------------------------------------------------
// Weight file (magic "AEMW"): header {magic, version u32, layer count u16,
// encoder count u16, input u32, latent u32, activation u8, trained u8,
// sparse-path u8}; per layer {rows u32, cols u32, storage u8} followed by a
// dense or CSR f32 payload and the bias.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'E', 'M', 'W'};

void save_layer(BinaryWriter& wr, const DenseLayer& l) {
  wr.u32(static_cast<std::uint32_t>(l.in));
  wr.u32(static_cast<std::uint32_t>(l.out));
  const bool as_csr = l.csr.has_value();
  wr.u8(as_csr ? 1 : 0);
  if (as_csr) {
    const auto& c = *l.csr;
    wr.u64(c.val.size());
    wr.bytes(c.row_ptr.data(), c.row_ptr.size() * sizeof(std::int32_t));
    wr.bytes(c.col.data(), c.col.size() * sizeof(std::int32_t));
    wr.bytes(c.val.data(), c.val.size() * sizeof(float));
  } else {
    wr.bytes(l.w.data(), l.w.size() * sizeof(float));
  }
  wr.bytes(l.b.data(), l.b.size() * sizeof(float));
}

DenseLayer load_layer(BinaryReader& rd) {
  DenseLayer l;
  l.in = static_cast<int>(rd.u32());
  l.out = static_cast<int>(rd.u32());
  const std::uint8_t storage = rd.u8();
  l.w.assign(std::size_t(l.in) * l.out, 0.0f);
  l.b.assign(l.out, 0.0f);
  if (storage == 1) {
    const std::uint64_t nnz = rd.u64();
    DenseLayer::Csr c;
    c.row_ptr.resize(l.in + 1);
    c.col.resize(nnz);
    c.val.resize(nnz);
    rd.bytes(c.row_ptr.data(), c.row_ptr.size() * sizeof(std::int32_t));
    rd.bytes(c.col.data(), c.col.size() * sizeof(std::int32_t));
    rd.bytes(c.val.data(), c.val.size() * sizeof(float));
    l.mask.assign(std::size_t(l.in) * l.out, 0);
    for (int i = 0; i < l.in; ++i)
      for (std::int32_t p = c.row_ptr[i]; p < c.row_ptr[i + 1]; ++p) {
        l.w[std::size_t(i) * l.out + c.col[p]] = c.val[p];
        l.mask[std::size_t(i) * l.out + c.col[p]] = 1;
      }
    l.csr = std::move(c);
  } else if (storage == 0) {
    rd.bytes(l.w.data(), l.w.size() * sizeof(float));
  } else {
    throw FormatError("codec file: unknown layer storage tag");
  }
  rd.bytes(l.b.data(), l.b.size() * sizeof(float));
  return l;
}

}  // namespace

void MlpCodec::save(const std::filesystem::path& path) const {
  BinaryWriter wr(path);
  wr.bytes(kMagic, 4);
  wr.u32(1);  // version
  wr.u16(static_cast<std::uint16_t>(encoder.size() + decoder.size()));
  wr.u16(static_cast<std::uint16_t>(encoder.size()));
  wr.u32(static_cast<std::uint32_t>(arch_.input_dim));
  wr.u32(static_cast<std::uint32_t>(arch_.latent_dim));
  wr.u8(static_cast<std::uint8_t>(arch_.activation));
  wr.u8(trained ? 1 : 0);
  wr.u8(use_sparse_inference ? 1 : 0);
  for (const auto& l : encoder) save_layer(wr, l);
  for (const auto& l : decoder) save_layer(wr, l);
}

MlpCodec MlpCodec::load(const std::filesystem::path& path) {
  BinaryReader rd(path);
  char magic[4];
  rd.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a codec weight file");
  if (rd.u32() != 1) throw FormatError("unsupported codec file version");
  const int total = rd.u16();
  const int enc_count = rd.u16();
  if (enc_count < 1 || enc_count >= total) throw FormatError("codec file: bad layer split");

  MlpCodec c;
  c.arch_.input_dim = static_cast<int>(rd.u32());
  c.arch_.latent_dim = static_cast<int>(rd.u32());
  c.arch_.activation = static_cast<MlpArchitecture::Activation>(rd.u8());
  c.trained = rd.u8() != 0;
  c.use_sparse_inference = rd.u8() != 0;
  for (int i = 0; i < total; ++i) {
    DenseLayer l = load_layer(rd);
    if (i < enc_count)
      c.encoder.push_back(std::move(l));
    else
      c.decoder.push_back(std::move(l));
  }
  // Rebuild the width lists so arch() reflects the file.
  c.arch_.encoder_widths.clear();
  for (std::size_t i = 0; i + 1 < c.encoder.size(); ++i)
    c.arch_.encoder_widths.push_back(c.encoder[i].out);
  c.arch_.decoder_widths.clear();
  for (const auto& l : c.decoder) c.arch_.decoder_widths.push_back(l.out);
  c.arch_.validate();
  return c;
}

}  // namespace aeml
