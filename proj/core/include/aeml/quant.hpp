#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aeml/errors.hpp"

namespace aeml {

/// Fixed-tolerance block quantizer. Values are snapped to the lattice of
/// spacing 2*eta, so the elementwise error never exceeds eta and re-encoding a
/// decoded vector reproduces the bitstream exactly. Each block stores a lattice
/// base and fixed-width offsets, width = ceil(log2(range/(2 eta) + 1)).
struct QuantizerConfig {
  double tolerance = 1e-4;  // eta, absolute bound on the normalized domain
  int block = 64;
};

std::vector<std::uint8_t> q_encode(std::span<const double> y, const QuantizerConfig& cfg);
std::vector<double> q_decode(std::span<const std::uint8_t> stream, const QuantizerConfig& cfg);

/// Shells out to an external codec process:
///   command {encode|decode} N eta
/// with raw little-endian f64 payload on stdin and compressed bytes on stdout
/// (reversed for decode). The declared tolerance is advisory metadata.
class ExternalCodec {
 public:
  ExternalCodec(std::string command, double tolerance) : command_(std::move(command)), tolerance_(tolerance) {}

  std::vector<std::uint8_t> encode(std::span<const double> y) const;
  std::vector<double> decode(std::span<const std::uint8_t> stream, int n) const;
  double tolerance() const { return tolerance_; }
  const std::string& command() const { return command_; }

 private:
  std::vector<std::uint8_t> run(const std::string& mode, int n, std::span<const std::uint8_t> input) const;

  std::string command_;
  double tolerance_;
};

}  // namespace aeml
