#include "aeml/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

namespace aeml {

double lr_for_epoch(const TrainConfig& cfg, int epoch) {
  const int stage = (epoch - 1) / cfg.decay_every;
  return cfg.lr0 * std::pow(cfg.lr_decay, stage);
}

void magnitude_prune(DenseLayer& layer, double sparsity) {
  if (!(sparsity >= 0.0) || sparsity >= 1.0) throw ConfigError("sparsity must lie in [0, 1)");
  const std::size_t total = layer.w.size();
  const std::size_t keep =
      total - static_cast<std::size_t>(std::llround(sparsity * double(total)));
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::nth_element(idx.begin(), idx.begin() + keep, idx.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(layer.w[a]) > std::fabs(layer.w[b]);
  });
  layer.mask.assign(total, 0);
  for (std::size_t i = 0; i < keep; ++i) layer.mask[idx[i]] = 1;
  for (std::size_t i = 0; i < total; ++i)
    if (!layer.mask[i]) layer.w[i] = 0.0f;
}

namespace {

struct LambState {
  std::vector<float> m, v;
  explicit LambState(std::size_t n) : m(n, 0.0f), v(n, 0.0f) {}
};

/// One LAMB update for a parameter tensor.
void lamb_update(std::span<float> w, std::span<const float> g, LambState& st, int t, double lr,
                 const TrainConfig& cfg) {
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, t);
  const double bc2 = 1.0 - std::pow(b2, t);
  double wnorm2 = 0.0, rnorm2 = 0.0;
  static thread_local std::vector<float> r;
  r.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    st.m[i] = float(b1 * st.m[i] + (1.0 - b1) * g[i]);
    st.v[i] = float(b2 * st.v[i] + (1.0 - b2) * double(g[i]) * g[i]);
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    double upd = mhat / (std::sqrt(vhat) + cfg.eps);
    if (cfg.weight_decay > 0.0) upd += cfg.weight_decay * w[i];
    r[i] = float(upd);
    wnorm2 += double(w[i]) * w[i];
    rnorm2 += upd * upd;
  }
  double trust = 1.0;
  if (wnorm2 > 0.0 && rnorm2 > 0.0)
    trust = std::clamp(std::sqrt(wnorm2) / std::sqrt(rnorm2), cfg.trust_min, cfg.trust_max);
  const double s = lr * trust;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= float(s * r[i]);
}

struct LayerGrads {
  std::vector<float> dw, db;
};

struct Trainer {
  const Dataset& data;
  const TrainConfig& cfg;
  MlpCodec& codec;
  std::vector<DenseLayer*> layers;  // encoder then decoder, in forward order
  std::vector<LayerGrads> grads;
  std::vector<LambState> w_state, b_state;
  std::vector<std::vector<float>> acts;  // acts[l] = output of layer l (batch-major)
  std::vector<std::vector<float>> dacts;
  int step_count = 0;

  Trainer(const Dataset& d, const TrainConfig& c, MlpCodec& cd) : data(d), cfg(c), codec(cd) {
    for (auto& l : codec.encoder) layers.push_back(&l);
    for (auto& l : codec.decoder) layers.push_back(&l);
    for (auto* l : layers) {
      grads.push_back({std::vector<float>(l->w.size()), std::vector<float>(l->b.size())});
      w_state.emplace_back(l->w.size());
      b_state.emplace_back(l->b.size());
    }
    acts.resize(layers.size());
    dacts.resize(layers.size());
  }

  bool layer_activated(std::size_t li) const {
    if (codec.arch().activation == MlpArchitecture::Activation::Identity) return false;
    return li + 1 != layers.size();  // identity output activation on the last layer
  }

  /// Forward a batch through all layers; acts[l] holds layer outputs.
  void forward(const float* x, int B) {
    const float* cur = x;
    for (std::size_t li = 0; li < layers.size(); ++li) {
      acts[li].resize(std::size_t(B) * layers[li]->out);
      dense_forward(*layers[li], cur, B, acts[li].data(), layer_activated(li),
                    /*use_sparse=*/false);
      cur = acts[li].data();
    }
  }

  double batch_loss(const float* x, int B) const {
    const auto& out = acts.back();
    const int n = data.n_in;
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double diff = double(out[i]) - x[i];
      loss += diff * diff;
    }
    return loss / (double(B) * n);
  }

  /// Backward pass; fills grads. x is the batch input (= the target).
  void backward(const float* x, int B) {
    const int n = data.n_in;
    const float scale = float(2.0 / (double(B) * n));
    auto& dlast = dacts.back();
    dlast.resize(acts.back().size());
    for (std::size_t i = 0; i < dlast.size(); ++i)
      dlast[i] = scale * (acts.back()[i] - x[i]);

    for (std::size_t li = layers.size(); li-- > 0;) {
      DenseLayer& L = *layers[li];
      std::vector<float>& dy = dacts[li];
      // Activation derivative from the stored post-activation values.
      if (layer_activated(li)) {
        const auto& y = acts[li];
        for (std::size_t i = 0; i < dy.size(); ++i)
          if (y[i] < 0.0f) dy[i] *= y[i] + 1.0f;  // d elu = e^x = y + 1 for x < 0
      }
      const float* xin = li == 0 ? x : acts[li - 1].data();
      auto& g = grads[li];
      std::fill(g.dw.begin(), g.dw.end(), 0.0f);
      std::fill(g.db.begin(), g.db.end(), 0.0f);
      for (int r = 0; r < B; ++r) {
        const float* dyr = dy.data() + std::size_t(r) * L.out;
        const float* xr = xin + std::size_t(r) * L.in;
        for (int j = 0; j < L.out; ++j) g.db[j] += dyr[j];
        for (int i = 0; i < L.in; ++i) {
          const float xi = xr[i];
          if (xi == 0.0f) continue;
          float* dwrow = g.dw.data() + std::size_t(i) * L.out;
          for (int j = 0; j < L.out; ++j) dwrow[j] += xi * dyr[j];
        }
      }
      if (li > 0) {
        auto& dx = dacts[li - 1];
        dx.resize(std::size_t(B) * L.in);
        for (int r = 0; r < B; ++r) {
          const float* dyr = dy.data() + std::size_t(r) * L.out;
          float* dxr = dx.data() + std::size_t(r) * L.in;
          for (int i = 0; i < L.in; ++i) {
            const float* wrow = L.w.data() + std::size_t(i) * L.out;
            double s = 0.0;
            for (int j = 0; j < L.out; ++j) s += double(dyr[j]) * wrow[j];
            dxr[i] = float(s);
          }
        }
      }
    }
  }

  void apply_updates(double lr) {
    ++step_count;
    for (std::size_t li = 0; li < layers.size(); ++li) {
      DenseLayer& L = *layers[li];
      auto& g = grads[li];
      if (L.pruned()) {
        for (std::size_t i = 0; i < g.dw.size(); ++i)
          if (!L.mask[i]) g.dw[i] = 0.0f;
      }
      lamb_update(L.w, g.dw, w_state[li], step_count, lr, cfg);
      lamb_update(L.b, g.db, b_state[li], step_count, lr, cfg);
      if (L.pruned()) {
        for (std::size_t i = 0; i < L.w.size(); ++i)
          if (!L.mask[i]) L.w[i] = 0.0f;  // mask enforced every update
      }
    }
  }

  double run_epoch(const std::vector<int>& order, std::vector<float>& batch_buf, double lr) {
    const int n = data.n_in;
    double loss_sum = 0.0;
    std::int64_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const int B = static_cast<int>(std::min<std::size_t>(cfg.batch, order.size() - start));
      batch_buf.resize(std::size_t(B) * n);
      for (int r = 0; r < B; ++r) {
        const auto rec = data.record(order[start + r]);
        std::copy(rec.begin(), rec.end(), batch_buf.begin() + std::size_t(r) * n);
      }
      forward(batch_buf.data(), B);
      loss_sum += batch_loss(batch_buf.data(), B) * B;
      backward(batch_buf.data(), B);
      apply_updates(lr);
      seen += B;
    }
    return loss_sum / double(seen);
  }

  double eval_loss(const std::vector<int>& idx, std::vector<float>& batch_buf) {
    if (idx.empty()) return 0.0;
    const int n = data.n_in;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += cfg.batch) {
      const int B = static_cast<int>(std::min<std::size_t>(cfg.batch, idx.size() - start));
      batch_buf.resize(std::size_t(B) * n);
      for (int r = 0; r < B; ++r) {
        const auto rec = data.record(idx[start + r]);
        std::copy(rec.begin(), rec.end(), batch_buf.begin() + std::size_t(r) * n);
      }
      forward(batch_buf.data(), B);
      loss_sum += batch_loss(batch_buf.data(), B) * B;
    }
    return loss_sum / double(idx.size());
  }
};

}  // namespace

MlpCodec train_codec(const Dataset& data, const MlpArchitecture& arch, const TrainConfig& cfg,
                     TrainHistory* history) {
  if (data.count() == 0) throw DataError("training dataset is empty");
  if (data.n_in != arch.input_dim) throw DataError("dataset record length does not match input_dim");
  for (float v : data.payload)
    if (!std::isfinite(v)) throw DataError("training dataset contains non-finite values");

  MlpCodec codec = MlpCodec::random_init(arch, cfg.seed);
  Trainer tr(data, cfg, codec);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<int> all(data.count());
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  const int val_count = static_cast<int>(std::lround(cfg.val_fraction * data.count()));
  std::vector<int> val_idx(all.begin(), all.begin() + val_count);
  std::vector<int> train_idx(all.begin() + val_count, all.end());
  if (train_idx.empty()) throw DataError("training split is empty; lower val_fraction");

  std::vector<float> batch_buf;
  auto record_epoch = [&](double tl) {
    const double vl = tr.eval_loss(val_idx, batch_buf);
    if (history) {
      history->train_loss.push_back(tl);
      history->val_loss.push_back(vl);
    }
    return vl;
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    const double lr = lr_for_epoch(cfg, epoch);
    const double tl = tr.run_epoch(train_idx, batch_buf, lr);
    const double vl = record_epoch(tl);
    if (cfg.verbose)
      std::clog << "[train] epoch " << epoch << " lr " << lr << " train " << tl << " val " << vl
                << "\n";
  }

  if (cfg.prune) {
    magnitude_prune(codec.encoder.front(), cfg.sparsity);
    magnitude_prune(codec.decoder.back(), cfg.sparsity);
    const double lr = lr_for_epoch(cfg, cfg.epochs);
    for (int epoch = 1; epoch <= cfg.finetune_epochs; ++epoch) {
      std::shuffle(train_idx.begin(), train_idx.end(), rng);
      const double tl = tr.run_epoch(train_idx, batch_buf, lr);
      const double vl = record_epoch(tl);
      if (cfg.verbose)
        std::clog << "[train] finetune " << epoch << " train " << tl << " val " << vl << "\n";
    }
    codec.encoder.front().build_csr();
    codec.decoder.back().build_csr();
  }

  codec.trained = true;
  return codec;
}

}  // namespace aeml
