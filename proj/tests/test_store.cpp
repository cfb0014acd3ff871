#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "aeml/codec_store.hpp"
#include "aeml/store.hpp"
#include "aeml/wave.hpp"
#include "test_utils.hpp"

using namespace aeml;

namespace {

StateVector random_state(const Grid& g, std::mt19937_64& rng) {
  StateVector s = StateVector::zeros(g);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : s.data) v = u(rng);
  s.pin_boundary_dilatation(g);
  return s;
}

/// Deterministic fake "integrator" so checkpoint replay can be tested without
/// a PDE: state at step k, stage j is a fixed function of (k, j).
StateVector synthetic_state(const Grid& g, int step, int stage) {
  StateVector s = StateVector::zeros(g);
  for (std::size_t i = 0; i < s.size(); ++i)
    s.data[i] = std::sin(0.1 * double(i) + step) + 0.25 * stage;
  return s;
}

StepReplayer synthetic_replayer(const Grid& g) {
  return [g](StateVector& z, int step, const StageSink& sink) {
    for (int j = 0; j < 4; ++j) sink(j, synthetic_state(g, step, j));
    z = synthetic_state(g, step + 1, 0);  // next step start
  };
}

void fill_store(TrajectoryStore& store, const Grid& g, int T) {
  store.begin_sweep(T, synthetic_replayer(g));
  for (int k = 0; k < T; ++k)
    for (int j = 0; j < 4; ++j) store.put({k, j}, synthetic_state(g, k, j));
  store.finish_sweep();
}

}  // namespace

TEST_CASE("full store: put then get is bit-identical") {
  Grid g = Grid::make_1d(8, 0.1, 8);
  FullStore store;
  store.begin_sweep(3, nullptr);
  std::mt19937_64 rng(1);
  std::vector<StateVector> truth;
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 4; ++j) {
      truth.push_back(random_state(g, rng));
      store.put({k, j}, truth.back());
    }
  store.finish_sweep();
  StateVector out = StateVector::zeros(g);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 4; ++j) {
      store.get({k, j}, out);
      for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.data[i] == truth[std::size_t(k) * 4 + j].data[i]);
    }
}

TEST_CASE("stores enforce the put/get contract") {
  Grid g = Grid::make_1d(8, 0.1, 8);
  FullStore store;
  store.begin_sweep(4, nullptr);
  StateVector s = StateVector::zeros(g);
  store.put({0, 0}, s);
  CHECK_THROWS_AS(store.put({0, 2}, s), StorageContractError);  // skipped stage
  CHECK_THROWS_AS(store.put({0, 0}, s), StorageContractError);  // replayed key
  StateVector out = StateVector::zeros(g);
  CHECK_THROWS_AS(store.get({3, 3}, out), StorageContractError);

  NullStore null;
  null.begin_sweep(4, nullptr);
  null.put({0, 0}, s);
  CHECK_THROWS_AS(null.get({0, 0}, out), StorageContractError);
}

TEST_CASE("begin_sweep refuses a reused store") {
  Grid g = Grid::make_1d(8, 0.1, 8);
  FullStore store;
  store.begin_sweep(2, nullptr);
  store.put({0, 0}, StateVector::zeros(g));
  CHECK_THROWS_AS(store.begin_sweep(2, nullptr), StorageContractError);
}

TEST_CASE("checkpoint store: resident bytes follow ceil(T/k)/T") {
  Grid g = Grid::make_1d(8, 0.1, 8);
  const int T = 20;
  CheckpointStore store(8);
  fill_store(store, g, T);
  const StoreStats st = store.stats();
  // Retained: full steps 0, 8, 16 -> 3 steps of 4 stages each.
  CHECK(st.bytes_logical == std::int64_t(T) * 4 * 8 * sizeof(double));
  CHECK(st.bytes_resident == std::int64_t(3) * 4 * 8 * sizeof(double));
  const double expect = double(st.bytes_logical) * std::ceil(double(T) / 8.0) / double(T);
  CHECK(double(st.bytes_resident) == doctest::Approx(expect));
}

TEST_CASE("checkpoint store: every get matches the full store bit for bit") {
  Grid g = Grid::make_1d(12, 0.05, 12);
  const int T = 13;  // deliberately not a multiple of the interval
  CheckpointStore ckpt(4);
  fill_store(ckpt, g, T);

  StateVector out = StateVector::zeros(g);
  // Reverse traversal, the optimized path.
  for (int k = T - 1; k >= 0; --k)
    for (int j = 3; j >= 0; --j) {
      ckpt.get({k, j}, out);
      const StateVector want = synthetic_state(g, k, j);
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == want.data[i]);
    }
  // A full reverse pass recomputes exactly T steps: one extra forward sweep.
  CHECK(ckpt.stats().recompute_steps == T);
}

TEST_CASE("checkpoint store: forward traversal also costs exactly one sweep") {
  Grid g = Grid::make_1d(8, 0.1, 8);
  const int T = 16;
  CheckpointStore ckpt(5);
  fill_store(ckpt, g, T);
  StateVector out = StateVector::zeros(g);
  for (int k = 0; k < T; ++k)
    for (int j = 0; j < 4; ++j) ckpt.get({k, j}, out);
  CHECK(ckpt.stats().recompute_steps == T);
}

TEST_CASE("checkpoint default interval is ceil(sqrt(4T)) stages") {
  CheckpointStore store;
  store.begin_sweep(64, nullptr);
  // sqrt(256) = 16 stages = 4 steps
  CHECK(store.interval() == 4);
}

TEST_CASE("space consolidation: round trip, counts, tile-invariant permutation") {
  Grid g = Grid::make_2d(32, 32, 0.03, 16, 16);
  Consolidator cons(g, Scheme::Space, 1);
  CHECK(cons.n_in() == 256);
  CHECK(cons.tile_count() == 4);

  std::mt19937_64 rng(9);
  StateVector s = random_state(g, rng);
  StateVector back = StateVector::zeros(g);
  std::vector<double> buf(cons.n_in());
  for (int t = 0; t < cons.tile_count(); ++t)
    for (int f = 0; f < 3; ++f) {
      cons.gather(s, t, f, buf);
      cons.scatter(buf, t, f, back);
    }
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(back.data[i] == s.data[i]);

  // Identical field values on two tiles consolidate to identical vectors.
  StateVector uniform = StateVector::zeros(g);
  for (auto& v : uniform.velocity(0)) v = 3.25;
  std::vector<double> b0(cons.n_in()), b1(cons.n_in());
  cons.gather(uniform, 0, 0, b0);
  cons.gather(uniform, 3, 0, b1);
  CHECK(b0 == b1);
}

TEST_CASE("time consolidation: desk default window gives N_in = 256") {
  Grid g = Grid::make_2d(8, 8, 0.1, 4, 4);
  Consolidator cons(g, Scheme::Time, 16);
  CHECK(cons.tile_nodes() == 16);
  CHECK(cons.n_in() == 256);
}

TEST_CASE("quantizer store honors its elementwise bound per consolidated vector") {
  Grid g = Grid::make_2d(8, 8, 1.0 / 7, 4, 4);
  const int T = 6;
  const double eta = 1e-4;
  QuantizerStore store(g, 2, Scheme::Space, 1, QuantizerConfig{eta, 64});
  Consolidator cons(g, Scheme::Space, 1);

  store.begin_sweep(T, nullptr);
  std::mt19937_64 rng(17);
  std::vector<StateVector> truth;
  for (int k = 0; k < T; ++k)
    for (int j = 0; j < 4; ++j) {
      truth.push_back(random_state(g, rng));
      store.put({k, j}, truth.back());
    }
  store.finish_sweep();

  StateVector out = StateVector::zeros(g);
  std::vector<double> want(cons.n_in()), got(cons.n_in());
  for (int k = T - 1; k >= 0; --k)
    for (int j = 3; j >= 0; --j) {
      store.get({k, j}, out);
      const StateVector& ref = truth[std::size_t(k) * 4 + j];
      for (int t = 0; t < cons.tile_count(); ++t)
        for (int f = 0; f < 3; ++f) {
          cons.gather(ref, t, f, want);
          cons.gather(out, t, f, got);
          double lo = want[0], hi = want[0];
          for (double v : want) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          const double scale = std::max(hi - lo, NormalizationMeta::kBeta);
          for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(std::fabs(got[i] - want[i]) <= eta * scale * (1.0 + 1e-12));
        }
    }
  CHECK(store.stats().compression_ratio_paper > 1.0);
}

TEST_CASE("time-scheme store: padded tail windows are flushed and never read") {
  Grid g = Grid::make_1d(8, 0.1, 4);
  const int T = 5;  // 20 stage slots, window 16 -> one full + one padded window
  QuantizerStore store(g, 1, Scheme::Time, 16, QuantizerConfig{1e-6, 64});
  store.begin_sweep(T, nullptr);
  std::mt19937_64 rng(23);
  std::vector<StateVector> truth;
  for (int k = 0; k < T; ++k)
    for (int j = 0; j < 4; ++j) {
      truth.push_back(random_state(g, rng));
      store.put({k, j}, truth.back());
    }
  store.finish_sweep();

  StateVector out = StateVector::zeros(g);
  for (int k = T - 1; k >= 0; --k)
    for (int j = 3; j >= 0; --j) {
      store.get({k, j}, out);
      const StateVector& ref = truth[std::size_t(k) * 4 + j];
      for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-4));
    }
}

TEST_CASE("mlp store reports the paper ratio convention") {
  // Desk shape 256 -> 16 with f64 logical state and f32 latent: (256/16)*2 = 32.
  Grid g = Grid::make_2d(16, 16, 0.1, 16, 16);
  auto codec = std::make_shared<MlpCodec>(MlpArchitecture::desk());
  MlpCodecStore store(g, 2, Scheme::Space, 1, codec);
  store.begin_sweep(2, nullptr);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 4; ++j) store.put({k, j}, random_state(g, rng));
  store.finish_sweep();
  CHECK(store.stats().compression_ratio_paper == doctest::Approx(32.0));
  CHECK(store.stats().compression_ratio_true < 32.0);  // metadata included
  CHECK(store.stats().compress_calls == 2 * 4 * 3);
}

TEST_CASE("codec store spills to disk and reads back") {
  Grid g = Grid::make_1d(16, 0.1, 8);
  const auto path = std::filesystem::temp_directory_path() / "aeml_spill_test.aets";
  QuantizerStore store(g, 1, Scheme::Space, 1, QuantizerConfig{1e-8, 64}, path.string());
  store.begin_sweep(2, nullptr);
  std::mt19937_64 rng(31);
  std::vector<StateVector> truth;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 4; ++j) {
      truth.push_back(random_state(g, rng));
      store.put({k, j}, truth.back());
    }
  store.finish_sweep();
  StateVector out = StateVector::zeros(g);
  store.get({1, 2}, out);
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(truth[6].data[i]).epsilon(1e-7));
  std::filesystem::remove(path);
}

TEST_CASE("black-box substitutability: lossless backends return exact states") {
  Grid g = Grid::make_1d(12, 0.05, 12);
  const int T = 9;
  auto check_exact = [&](TrajectoryStore& store) {
    fill_store(store, g, T);
    StateVector out = StateVector::zeros(g);
    for (int k = T - 1; k >= 0; --k)
      for (int j = 3; j >= 0; --j) {
        store.get({k, j}, out);
        const StateVector want = synthetic_state(g, k, j);
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == want.data[i]);
      }
  };
  FullStore full;
  check_exact(full);
  CheckpointStore ckpt(3);
  check_exact(ckpt);
}
