#pragma once

#include <filesystem>
#include <functional>

#include "aeml/consolidate.hpp"
#include "aeml/io.hpp"
#include "aeml/prior.hpp"
#include "aeml/store.hpp"
#include "aeml/wave.hpp"

namespace aeml {

/// Write-only trajectory store that consolidates incoming stage states and
/// hands every completed ConsolidatedVector to a callback. Capacity of the
/// consolidation structure is exactly one vector.
class ConsolidatingSink : public TrajectoryStore {
 public:
  using Emit = std::function<void(const ConsolidatedVector&)>;

  ConsolidatingSink(const Grid& grid, int state_dim, Scheme scheme, int window, Emit emit);

  void begin_sweep(int total_steps, StepReplayer replayer) override;
  void put(const StageKey& key, const StateVector& state) override;
  void get(const StageKey&, StateVector&) override {
    throw StorageContractError("consolidating sink is write-only");
  }
  bool contains(const StageKey&) const override { return false; }
  void finish_sweep() override;
  StoreStats stats() const override { return stats_; }
  std::string name() const override { return "sink"; }

 private:
  void flush_window(std::int64_t window_id, int filled_slots);

  Grid grid_;
  int fields_;
  Scheme scheme_;
  int window_;
  Consolidator cons_;
  Emit emit_;
  std::vector<double> window_buf_;
  ConsolidatedVector scratch_;
  StoreStats stats_;
};

struct DatagenConfig {
  int samples = 10;
  double keep_fraction = 0.1;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::Time;
  int window = 16;
  std::filesystem::path out_file;
  int shuffle_buffer = 1 << 16;
};

struct DatagenReport {
  std::int64_t candidate_records = 0;
  std::int64_t kept_records = 0;
  int skipped_samples = 0;
  std::filesystem::path file;
};

/// Draws wavespeed fields from the prior, runs the forward model, and writes
/// every consolidated vector with probability keep_fraction, normalized, in
/// shuffled order. Byte-deterministic for a fixed seed.
DatagenReport generate(const BiLaplacianPrior& prior, const ForwardConfig& config,
                       const DatagenConfig& cfg);

}  // namespace aeml
