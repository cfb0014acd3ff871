#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aeml/errors.hpp"
#include "aeml/state.hpp"

namespace aeml {

/// Storage accounting. bytes_logical counts what a double-precision full store
/// of the same payload would occupy; bytes_resident counts what is actually
/// kept, including per-vector metadata. "paper" ratio excludes that metadata,
/// "true" ratio includes it.
struct StoreStats {
  std::int64_t bytes_logical = 0;
  std::int64_t bytes_resident = 0;
  std::int64_t compress_calls = 0;
  std::int64_t decompress_calls = 0;
  std::int64_t recompute_steps = 0;
  double compression_ratio_paper = 1.0;
  double compression_ratio_true = 1.0;
};

using StageSink = std::function<void(int stage, const StateVector&)>;

/// Re-runs one forward timestep in place from a step-start state, emitting the
/// four RK stage states. Supplied by the forward solver at sweep start; the
/// same code path as the original integration, so replays are bit-identical.
using StepReplayer = std::function<void(StateVector& z, int step, const StageSink&)>;

/// The storage-strategy contract. Stage states arrive in increasing (t, s)
/// order during the forward sweep and are retrieved later, typically in
/// reverse order. Backends may not mutate the live state they are handed.
class TrajectoryStore {
 public:
  virtual ~TrajectoryStore() = default;

  /// Called by the forward solver before the first put of a sweep.
  virtual void begin_sweep(int total_steps, StepReplayer replayer);

  virtual void put(const StageKey& key, const StateVector& state) = 0;
  virtual void get(const StageKey& key, StateVector& out) = 0;
  virtual bool contains(const StageKey& key) const = 0;

  /// Hint that a new monotone read traversal starts. Backends that cache
  /// decoded or recomputed segments drop them so that per-pass recompute
  /// accounting stays exact.
  virtual void begin_read_pass() {}

  /// Called by the forward solver after the last put (flushes partial windows).
  virtual void finish_sweep() { sweep_complete_ = true; }

  virtual StoreStats stats() const = 0;
  virtual std::string name() const = 0;

  int total_steps() const { return total_steps_; }
  bool sweep_complete() const { return sweep_complete_; }

 protected:
  /// Enforces strictly increasing key order during the sweep.
  void check_put_order(const StageKey& key);

  int total_steps_ = 0;
  StepReplayer replayer_;
  std::int64_t next_slot_ = 0;
  bool sweep_complete_ = false;
};

using StoreFactory = std::function<std::unique_ptr<TrajectoryStore>()>;

/// Keeps every stage state verbatim.
class FullStore : public TrajectoryStore {
 public:
  void begin_sweep(int total_steps, StepReplayer replayer) override;
  void put(const StageKey& key, const StateVector& state) override;
  void get(const StageKey& key, StateVector& out) override;
  bool contains(const StageKey& key) const override;
  StoreStats stats() const override { return stats_; }
  std::string name() const override { return "full"; }

 private:
  std::vector<StateVector> slots_;
  StoreStats stats_;
};

/// Discards everything. Used for misfit-only forward solves (line searches).
class NullStore : public TrajectoryStore {
 public:
  void put(const StageKey& key, const StateVector& state) override;
  void get(const StageKey& key, StateVector&) override;
  bool contains(const StageKey&) const override { return false; }
  StoreStats stats() const override { return stats_; }
  std::string name() const override { return "null"; }

 private:
  StoreStats stats_;
};

/// Uniform-interval checkpointing: all four stage states of every k-th step
/// are retained; anything else is recomputed by re-running the forward model
/// from the nearest earlier checkpoint. Replay caches one segment at a time,
/// so a monotone (forward or reverse) traversal of the whole trajectory costs
/// exactly T re-integrated steps, i.e. one extra forward sweep.
class CheckpointStore : public TrajectoryStore {
 public:
  /// interval_steps == 0 picks the default ceil(sqrt(4T)) stages at sweep start.
  explicit CheckpointStore(int interval_steps = 0) : interval_(interval_steps) {}

  void begin_sweep(int total_steps, StepReplayer replayer) override;
  void put(const StageKey& key, const StateVector& state) override;
  void get(const StageKey& key, StateVector& out) override;
  bool contains(const StageKey& key) const override;
  StoreStats stats() const override;
  std::string name() const override { return "checkpoint"; }

  int interval() const { return interval_; }

 private:
  void replay_segment(int segment);

  int interval_ = 0;
  std::int64_t put_count_ = 0;
  std::map<std::int64_t, StateVector> retained_;  // slot -> state, steps % k == 0
  int cached_segment_ = -1;
  std::vector<StateVector> segment_cache_;  // stage states of the cached segment
  StoreStats stats_;
};

}  // namespace aeml
