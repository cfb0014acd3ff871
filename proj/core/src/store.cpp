#include "aeml/store.hpp"

#include <algorithm>
#include <cmath>

namespace aeml {

namespace {

std::int64_t state_bytes(const StateVector& s) {
  return static_cast<std::int64_t>(s.size()) * static_cast<std::int64_t>(sizeof(double));
}

void finish_ratios(StoreStats& st) {
  if (st.bytes_resident > 0) {
    st.compression_ratio_paper = double(st.bytes_logical) / double(st.bytes_resident);
    st.compression_ratio_true = st.compression_ratio_paper;
  }
}

}  // namespace

void TrajectoryStore::begin_sweep(int total_steps, StepReplayer replayer) {
  if (next_slot_ != 0)
    throw StorageContractError("trajectory store already holds a sweep; use a fresh store");
  if (total_steps <= 0) throw StorageContractError("begin_sweep needs a positive step count");
  total_steps_ = total_steps;
  replayer_ = std::move(replayer);
  sweep_complete_ = false;
}

void TrajectoryStore::check_put_order(const StageKey& key) {
  if (key.stage < 0 || key.stage >= 4 || key.step < 0 || key.step >= total_steps_)
    throw StorageContractError("stage key out of range");
  if (key.slot() != next_slot_)
    throw StorageContractError("out-of-order stage key in forward sweep");
  ++next_slot_;
}

void FullStore::begin_sweep(int total_steps, StepReplayer replayer) {
  TrajectoryStore::begin_sweep(total_steps, std::move(replayer));
  slots_.clear();
  slots_.reserve(std::size_t(total_steps) * 4);
}

void FullStore::put(const StageKey& key, const StateVector& state) {
  check_put_order(key);
  slots_.push_back(state);
  stats_.bytes_logical += state_bytes(state);
  stats_.bytes_resident += state_bytes(state);
}

void FullStore::get(const StageKey& key, StateVector& out) {
  if (!contains(key)) throw StorageContractError("full store: stage key was never put");
  out = slots_[static_cast<std::size_t>(key.slot())];
}

bool FullStore::contains(const StageKey& key) const {
  return key.stage >= 0 && key.stage < 4 && key.step >= 0 &&
         key.slot() < static_cast<std::int64_t>(slots_.size());
}

void NullStore::put(const StageKey& key, const StateVector& state) {
  check_put_order(key);
  stats_.bytes_logical += state_bytes(state);
}

void NullStore::get(const StageKey&, StateVector&) {
  throw StorageContractError("null store cannot reconstruct states");
}

void CheckpointStore::begin_sweep(int total_steps, StepReplayer replayer) {
  TrajectoryStore::begin_sweep(total_steps, std::move(replayer));
  if (interval_ <= 0) {
    // Default: ceil(sqrt(4T)) stages, snapped up to whole steps.
    const int stages = static_cast<int>(std::ceil(std::sqrt(4.0 * total_steps)));
    interval_ = std::max(1, (stages + 3) / 4);
  }
  retained_.clear();
  segment_cache_.clear();
  cached_segment_ = -1;
}

void CheckpointStore::put(const StageKey& key, const StateVector& state) {
  check_put_order(key);
  ++put_count_;
  stats_.bytes_logical += state_bytes(state);
  if (key.step % interval_ == 0) {
    retained_.emplace(key.slot(), state);
    stats_.bytes_resident += state_bytes(state);
  }
}

bool CheckpointStore::contains(const StageKey& key) const {
  return key.stage >= 0 && key.stage < 4 && key.step >= 0 && key.slot() < next_slot_;
}

void CheckpointStore::replay_segment(int segment) {
  const int seg_start = segment * interval_;
  const int seg_end = std::min(seg_start + interval_, total_steps_);
  auto it = retained_.find(std::int64_t(seg_start) * 4);
  if (it == retained_.end())
    throw StorageContractError("checkpoint store: missing checkpoint for segment");
  if (!replayer_) throw StorageContractError("checkpoint store has no step replayer");

  segment_cache_.assign(std::size_t(seg_end - seg_start) * 4, StateVector{});
  StateVector z = it->second;
  for (int s = seg_start; s < seg_end; ++s) {
    replayer_(z, s, [&](int stage, const StateVector& y) {
      segment_cache_[std::size_t(s - seg_start) * 4 + stage] = y;
    });
    ++stats_.recompute_steps;
  }
  cached_segment_ = segment;
}

void CheckpointStore::get(const StageKey& key, StateVector& out) {
  if (!contains(key)) throw StorageContractError("checkpoint store: stage key was never put");
  const int segment = key.step / interval_;
  if (segment == cached_segment_) {
    out = segment_cache_[std::size_t(key.slot() - std::int64_t(segment) * interval_ * 4)];
    return;
  }
  if (auto it = retained_.find(key.slot()); it != retained_.end()) {
    out = it->second;
    return;
  }
  replay_segment(segment);
  out = segment_cache_[std::size_t(key.slot() - std::int64_t(segment) * interval_ * 4)];
}

StoreStats CheckpointStore::stats() const {
  StoreStats st = stats_;
  finish_ratios(st);
  return st;
}

}  // namespace aeml
