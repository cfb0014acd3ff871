#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aeml/datagen.hpp"
#include "test_utils.hpp"

using namespace aeml;

namespace {

namespace fs = std::filesystem;

struct TinyGen {
  Grid grid = Grid::make_1d(8, 1.0 / 7, 4);
  ForwardConfig fc;
  BiLaplacianPrior prior;

  explicit TinyGen(int steps)
      : prior(grid, 6.0, 0.02, Field(grid.node_count(), 1.0), 0.1) {
    fc.grid = grid;
    fc.density.assign(grid.node_count(), 1.0);
    Medium m = Medium::uniform(grid, 1.0, 1.4);  // prior samples stay below 1.4
    fc.time.dt = cfl_dt(grid, m, 0.4);
    fc.time.steps = steps;
    SourceSpec src;
    src.kind = SourceKind::Ricker;
    src.location = {0.4, 0.0};
    src.t_center = 6 * fc.time.dt;
    src.sigma_t = 2 * fc.time.dt;
    src.sigma_x = 0.1;
    src.direction = {1.0, 0.0};
    fc.sources.push_back(src);
  }
};

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("datagen: record count equals tile-slots x windows for keep = 1") {
  TinyGen tg(5);  // 20 stage slots, window 16 -> 2 windows (one padded)
  DatagenConfig cfg;
  cfg.samples = 1;
  cfg.keep_fraction = 1.0;
  cfg.scheme = Scheme::Time;
  cfg.window = 16;
  cfg.seed = 1;
  cfg.out_file = fs::temp_directory_path() / "aeml_dg_count.aetd";

  const DatagenReport rep = generate(tg.prior, tg.fc, cfg);
  // 2 tiles x 2 fields (1D: v, e) x ceil(4*5/16) windows = 8 records
  CHECK(rep.candidate_records == 8);
  CHECK(rep.kept_records == 8);
  const Dataset ds = read_dataset(cfg.out_file);
  CHECK(ds.count() == 8);
  CHECK(ds.n_in == 64);
  CHECK(ds.scheme == static_cast<std::uint8_t>(Scheme::Time));
  fs::remove(cfg.out_file);
}

TEST_CASE("datagen: kept count obeys the binomial band") {
  TinyGen tg(3333);  // 4 tile-slots... 2 tiles x 2 fields x ceil(13332/16)=834 windows
  DatagenConfig cfg;
  cfg.samples = 1;
  cfg.keep_fraction = 0.1;
  cfg.scheme = Scheme::Time;
  cfg.window = 16;
  cfg.seed = 7;
  cfg.out_file = fs::temp_directory_path() / "aeml_dg_binom.aetd";

  const DatagenReport rep = generate(tg.prior, tg.fc, cfg);
  CHECK(rep.candidate_records == 2 * 2 * 834);
  const double n = double(rep.candidate_records);
  const double mean = n * 0.1;
  const double band = 3.0 * std::sqrt(n * 0.1 * 0.9);
  CHECK(std::fabs(double(rep.kept_records) - mean) <= band);
  fs::remove(cfg.out_file);
}

TEST_CASE("datagen: identical seeds write byte-identical shards") {
  TinyGen tg(40);
  DatagenConfig cfg;
  cfg.samples = 2;
  cfg.keep_fraction = 0.5;
  cfg.scheme = Scheme::Time;
  cfg.window = 16;
  cfg.seed = 11;
  cfg.out_file = fs::temp_directory_path() / "aeml_dg_a.aetd";
  generate(tg.prior, tg.fc, cfg);
  auto bytes_a = slurp(cfg.out_file);

  cfg.out_file = fs::temp_directory_path() / "aeml_dg_b.aetd";
  generate(tg.prior, tg.fc, cfg);
  auto bytes_b = slurp(cfg.out_file);

  CHECK(bytes_a == bytes_b);
  CHECK(!bytes_a.empty());
  fs::remove(fs::temp_directory_path() / "aeml_dg_a.aetd");
  fs::remove(fs::temp_directory_path() / "aeml_dg_b.aetd");
}

TEST_CASE("datagen: records round-trip to f32 precision of the states") {
  TinyGen tg(8);  // 32 slots -> 2 windows
  DatagenConfig cfg;
  cfg.samples = 1;
  cfg.keep_fraction = 1.0;
  cfg.scheme = Scheme::Time;
  cfg.window = 16;
  cfg.seed = 3;
  cfg.shuffle_buffer = 1;  // FIFO: keeps file order aligned with emission order
  cfg.out_file = fs::temp_directory_path() / "aeml_dg_round.aetd";
  generate(tg.prior, tg.fc, cfg);
  const Dataset ds = read_dataset(cfg.out_file);

  // Reproduce the consolidated vectors with the same seed.
  std::mt19937_64 rng(cfg.seed);
  const Field c = tg.prior.sample(rng);
  std::vector<ConsolidatedVector> originals;
  ConsolidatingSink sink(tg.grid, 1, Scheme::Time, 16,
                         [&](const ConsolidatedVector& cv) { originals.push_back(cv); });
  forward_solve(c, tg.fc, sink);

  REQUIRE(ds.count() == static_cast<int>(originals.size()));
  std::vector<double> back(ds.n_in);
  for (int r = 0; r < ds.count(); ++r) {
    denormalize(ds.record(r), ds.meta[r], back);
    const auto& want = originals[r].values;
    for (int i = 0; i < ds.n_in; ++i)
      CHECK(std::fabs(back[i] - want[i]) <= ds.meta[r].scale * 1e-6);
  }
  fs::remove(cfg.out_file);
}

TEST_CASE("datagen: diverging samples are skipped and logged, not fatal") {
  TinyGen tg(60);
  tg.fc.time.dt *= 50.0;  // force divergence for every draw
  DatagenConfig cfg;
  cfg.samples = 3;
  cfg.keep_fraction = 1.0;
  cfg.scheme = Scheme::Space;
  cfg.out_file = fs::temp_directory_path() / "aeml_dg_skip.aetd";
  const DatagenReport rep = generate(tg.prior, tg.fc, cfg);
  CHECK(rep.skipped_samples == 3);
  CHECK(rep.kept_records == 0);
  const Dataset ds = read_dataset(cfg.out_file);
  CHECK(ds.count() == 0);
  fs::remove(cfg.out_file);
}

TEST_CASE("datagen validates its configuration") {
  TinyGen tg(4);
  DatagenConfig cfg;
  cfg.samples = 0;
  cfg.out_file = fs::temp_directory_path() / "aeml_dg_bad.aetd";
  CHECK_THROWS_AS(generate(tg.prior, tg.fc, cfg), ConfigError);
  cfg.samples = 1;
  cfg.keep_fraction = 0.0;
  CHECK_THROWS_AS(generate(tg.prior, tg.fc, cfg), ConfigError);
}
