#include "aeml/datagen.hpp"

#include <iostream>
#include <random>

namespace aeml {

ConsolidatingSink::ConsolidatingSink(const Grid& grid, int state_dim, Scheme scheme, int window,
                                     Emit emit)
    : grid_(grid),
      fields_(state_dim + 1),
      scheme_(scheme),
      window_(scheme == Scheme::Space ? 1 : window),
      cons_(grid, scheme, window),
      emit_(std::move(emit)) {
  scratch_.values.resize(cons_.n_in());
  scratch_.scheme = scheme;
}

void ConsolidatingSink::begin_sweep(int total_steps, StepReplayer replayer) {
  TrajectoryStore::begin_sweep(total_steps, std::move(replayer));
  if (scheme_ == Scheme::Time)
    window_buf_.assign(std::size_t(cons_.tile_count()) * fields_ * cons_.n_in(), 0.0);
}

void ConsolidatingSink::put(const StageKey& key, const StateVector& state) {
  check_put_order(key);
  stats_.bytes_logical += std::int64_t(state.size()) * 8;
  if (scheme_ == Scheme::Space) {
    scratch_.first_key = key;
    scratch_.pad = 0;
    for (int t = 0; t < cons_.tile_count(); ++t)
      for (int f = 0; f < fields_; ++f) {
        cons_.gather(state, t, f, scratch_.values);
        scratch_.tile = t;
        scratch_.field = f;
        emit_(scratch_);
      }
  } else {
    const std::int64_t slot = key.slot();
    const int local = static_cast<int>(slot % window_);
    const int tn = cons_.tile_nodes();
    for (int t = 0; t < cons_.tile_count(); ++t)
      for (int f = 0; f < fields_; ++f) {
        double* dst = window_buf_.data() + (std::size_t(t) * fields_ + f) * cons_.n_in() +
                      std::size_t(local) * tn;
        cons_.gather(state, t, f, std::span<double>(dst, tn));
      }
    if (local == window_ - 1) flush_window(slot / window_, window_);
  }
}

void ConsolidatingSink::flush_window(std::int64_t window_id, int filled_slots) {
  scratch_.first_key = StageKey{static_cast<int>(window_id * window_ / 4),
                                static_cast<int>((window_id * window_) % 4)};
  scratch_.pad = window_ - filled_slots;
  for (int t = 0; t < cons_.tile_count(); ++t)
    for (int f = 0; f < fields_; ++f) {
      const double* src = window_buf_.data() + (std::size_t(t) * fields_ + f) * cons_.n_in();
      std::copy(src, src + cons_.n_in(), scratch_.values.begin());
      scratch_.tile = t;
      scratch_.field = f;
      emit_(scratch_);
    }
  std::fill(window_buf_.begin(), window_buf_.end(), 0.0);
}

void ConsolidatingSink::finish_sweep() {
  if (scheme_ == Scheme::Time) {
    const std::int64_t filled = next_slot_ % window_;
    if (filled != 0) flush_window(next_slot_ / window_, static_cast<int>(filled));
  }
  TrajectoryStore::finish_sweep();
}

namespace {

struct Record {
  NormalizationMeta meta;
  std::vector<float> payload;
};

}  // namespace

DatagenReport generate(const BiLaplacianPrior& prior, const ForwardConfig& config,
                       const DatagenConfig& cfg) {
  if (cfg.samples < 1) throw ConfigError("datagen needs at least one sample");
  if (!(cfg.keep_fraction > 0.0) || cfg.keep_fraction > 1.0)
    throw ConfigError("keep_fraction must lie in (0, 1]");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Consolidator cons(config.grid, cfg.scheme, cfg.window);
  DatasetWriter writer(cfg.out_file, cons.n_in(), static_cast<std::uint8_t>(cfg.scheme));

  DatagenReport report;
  report.file = cfg.out_file;

  // Streaming shuffle: evict a random resident record once the buffer is full.
  std::vector<Record> buffer;
  buffer.reserve(std::min<std::size_t>(cfg.shuffle_buffer, 1 << 16));
  std::vector<float> norm(cons.n_in());

  for (int s = 0; s < cfg.samples; ++s) {
    const Field c = prior.sample(rng);
    std::int64_t candidates = 0;
    std::vector<Record> pending;  // committed only if the sample integrates cleanly
    auto emit = [&](const ConsolidatedVector& cv) {
      ++candidates;
      if (unit(rng) >= cfg.keep_fraction) return;
      Record rec;
      rec.meta = normalize(cv.values, std::span<float>(norm.data(), norm.size()));
      rec.payload.assign(norm.begin(), norm.end());
      pending.push_back(std::move(rec));
    };
    ConsolidatingSink sink(config.grid, config.grid.dim, cfg.scheme, cfg.window, emit);
    try {
      forward_solve(c, config, sink);
    } catch (const DivergenceError& e) {
      ++report.skipped_samples;
      std::clog << "[datagen] sample " << s << " skipped: " << e.what() << "\n";
      continue;
    }
    report.candidate_records += candidates;
    report.kept_records += static_cast<std::int64_t>(pending.size());
    for (Record& rec : pending) {
      if (static_cast<int>(buffer.size()) < cfg.shuffle_buffer) {
        buffer.push_back(std::move(rec));
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
        const std::size_t j = pick(rng);
        writer.append(buffer[j].meta, buffer[j].payload);
        buffer[j] = std::move(rec);
      }
    }
  }

  // Drain the buffer in shuffled order.
  for (std::size_t i = buffer.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(buffer[pick(rng)], buffer[i - 1]);
  }
  for (const Record& rec : buffer) writer.append(rec.meta, rec.payload);
  return report;
}

}  // namespace aeml
