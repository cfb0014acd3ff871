#pragma once

#include <cstdint>
#include <vector>

#include "aeml/io.hpp"
#include "aeml/mlp.hpp"

namespace aeml {

struct TrainConfig {
  int epochs = 20;
  int batch = 512;
  double lr0 = 1e-3;
  double lr_decay = 0.5;
  int decay_every = 5;  // epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.0;
  double trust_min = 1e-3;
  double trust_max = 10.0;
  bool prune = true;
  double sparsity = 0.95;     // fraction of zeros in the pruned layers
  int finetune_epochs = 5;    // masked fine-tuning at the final learning rate
  double val_fraction = 0.1;  // per-record split, seeded
  std::uint64_t seed = 1;
  bool verbose = false;
};

/// Stepwise decay: lr0 * lr_decay^floor((epoch-1)/decay_every), 1-based epochs.
double lr_for_epoch(const TrainConfig& cfg, int epoch);

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch (pre-training then fine-tuning)
  std::vector<double> val_loss;
};

/// Fits the autoencoder to normalized records by mean-squared reconstruction
/// loss with the LAMB optimizer (Adam-style moments plus a layerwise trust
/// ratio). After dense pre-training, the first encoder and last decoder
/// layers are one-shot magnitude-pruned and fine-tuned under the mask.
/// Single-threaded and seed-deterministic.
MlpCodec train_codec(const Dataset& data, const MlpArchitecture& arch, const TrainConfig& cfg,
                     TrainHistory* history = nullptr);

/// Magnitude-prunes one layer in place to the given sparsity and installs the
/// mask. Exposed for tests.
void magnitude_prune(DenseLayer& layer, double sparsity);

}  // namespace aeml
