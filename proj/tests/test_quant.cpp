#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "aeml/quant.hpp"

using namespace aeml;

TEST_CASE("quantizer: constant block compresses to the degenerate form") {
  const QuantizerConfig cfg{1e-3, 64};
  std::vector<double> y(64, 0.731);
  auto stream = q_encode(y, cfg);
  // 4-byte length + one block of {base i64, width u8} and no packed payload.
  CHECK(stream.size() == 4 + 9);
  const double ratio = double(y.size() * 8) / double(stream.size());
  CHECK(ratio >= 64.0 / 2.0);
  auto back = q_decode(stream, cfg);
  for (double v : back) CHECK(std::fabs(v - 0.731) <= cfg.tolerance);
}

TEST_CASE("quantizer: hard elementwise bound on random data") {
  const QuantizerConfig cfg{1e-2, 64};
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> y(257);
    for (double& v : y) v = u(rng);
    auto back = q_decode(q_encode(y, cfg), cfg);
    REQUIRE(back.size() == y.size());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::fabs(back[i] - y[i]) <= cfg.tolerance);
  }
}

TEST_CASE("quantizer: empty vector round trips") {
  const QuantizerConfig cfg{1e-4, 64};
  std::vector<double> y;
  auto stream = q_encode(y, cfg);
  CHECK(stream.size() == 4);
  CHECK(q_decode(stream, cfg).empty());
}

TEST_CASE("quantizer: re-encoding a decoded vector is bitstream-idempotent") {
  const QuantizerConfig cfg{1e-3, 32};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> y(200);
  for (double& v : y) v = u(rng);
  const auto s1 = q_encode(y, cfg);
  const auto y1 = q_decode(s1, cfg);
  const auto s2 = q_encode(y1, cfg);
  CHECK(s1 == s2);
}

TEST_CASE("quantizer: ratio never shrinks as the tolerance grows") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.5, 0.2);
  std::vector<double> y(4096);
  for (double& v : y) v = n(rng);
  std::size_t prev = SIZE_MAX;
  for (double eta : {1e-5, 1e-4, 1e-3, 1e-2}) {
    const QuantizerConfig cfg{eta, 64};
    const auto stream = q_encode(y, cfg);
    CHECK(stream.size() <= prev);
    prev = stream.size();
  }
}

TEST_CASE("quantizer: corrupt streams are rejected") {
  const QuantizerConfig cfg{1e-3, 64};
  std::vector<double> y(100, 0.25);
  y[3] = 0.75;
  auto stream = q_encode(y, cfg);
  auto truncated = stream;
  truncated.resize(stream.size() - 3);
  CHECK_THROWS_AS(q_decode(truncated, cfg), FormatError);
  auto padded = stream;
  padded.push_back(0);
  CHECK_THROWS_AS(q_decode(padded, cfg), FormatError);
  CHECK_THROWS_AS(q_decode(std::vector<std::uint8_t>{1, 2}, cfg), FormatError);
}

TEST_CASE("quantizer rejects a non-positive tolerance") {
  std::vector<double> y(4, 0.0);
  CHECK_THROWS_AS(q_encode(y, QuantizerConfig{0.0, 64}), ConfigError);
  CHECK_THROWS_AS(q_encode(y, QuantizerConfig{-1.0, 64}), ConfigError);
}

TEST_CASE("external codec hook: identity process round-trips exactly") {
  // A codec that ignores its arguments and copies stdin to stdout.
  const auto script = std::filesystem::temp_directory_path() / "aeml_identity_codec.sh";
  {
    std::ofstream out(script);
    out << "#!/bin/sh\nexec cat\n";
  }
  std::filesystem::permissions(script, std::filesystem::perms::owner_all);

  ExternalCodec codec(script.string(), 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> y(512);
  for (double& v : y) v = u(rng);
  const auto stream = codec.encode(y);
  CHECK(stream.size() == y.size() * sizeof(double));
  const auto back = codec.decode(stream, static_cast<int>(y.size()));
  CHECK(back == y);
  std::filesystem::remove(script);
}

TEST_CASE("external codec hook: failing process raises") {
  ExternalCodec codec("/bin/false", 1e-4);
  std::vector<double> y(8, 1.0);
  CHECK_THROWS_AS(codec.encode(y), Error);
}
