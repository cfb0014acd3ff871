#include "aeml/quant.hpp"

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace aeml {

namespace {

struct BitPacker {
  std::vector<std::uint8_t>& out;
  std::uint64_t acc = 0;
  int bits = 0;

  void push(std::uint64_t v, int width) {
    acc |= v << bits;
    bits += width;
    while (bits >= 8) {
      out.push_back(static_cast<std::uint8_t>(acc & 0xff));
      acc >>= 8;
      bits -= 8;
    }
  }
  void flush() {
    if (bits > 0) {
      out.push_back(static_cast<std::uint8_t>(acc & 0xff));
      acc = 0;
      bits = 0;
    }
  }
};

struct BitUnpacker {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
  std::uint64_t acc = 0;
  int bits = 0;

  std::uint64_t pull(int width) {
    while (bits < width) {
      if (pos >= in.size()) throw FormatError("quantizer stream truncated");
      acc |= std::uint64_t(in[pos++]) << bits;
      bits += 8;
    }
    const std::uint64_t mask = width == 64 ? ~0ull : ((1ull << width) - 1);
    const std::uint64_t v = acc & mask;
    acc >>= width;
    bits -= width;
    return v;
  }
};

void append_raw(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

}  // namespace

std::vector<std::uint8_t> q_encode(std::span<const double> y, const QuantizerConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw ConfigError("quantizer tolerance must be positive");
  if (cfg.block < 1) throw ConfigError("quantizer block size must be positive");
  const double step = 2.0 * cfg.tolerance;

  std::vector<std::uint8_t> out;
  const std::uint32_t n = static_cast<std::uint32_t>(y.size());
  append_raw(out, &n, 4);

  std::vector<std::int64_t> q(cfg.block);
  for (std::size_t start = 0; start < y.size(); start += cfg.block) {
    const std::size_t cnt = std::min<std::size_t>(cfg.block, y.size() - start);
    std::int64_t qmin = 0, qmax = 0;
    for (std::size_t i = 0; i < cnt; ++i) {
      const double v = y[start + i];
      if (!std::isfinite(v)) throw DataError("quantizer: non-finite input");
      q[i] = std::llround(v / step);
      if (i == 0) {
        qmin = qmax = q[0];
      } else {
        qmin = std::min(qmin, q[i]);
        qmax = std::max(qmax, q[i]);
      }
    }
    const std::uint64_t range = static_cast<std::uint64_t>(qmax - qmin);
    const std::uint8_t width = static_cast<std::uint8_t>(std::bit_width(range));
    if (width > 57) throw ConfigError("quantizer tolerance too small for the bit packer");
    append_raw(out, &qmin, 8);
    append_raw(out, &width, 1);
    if (width > 0) {
      BitPacker packer{out};
      for (std::size_t i = 0; i < cnt; ++i)
        packer.push(static_cast<std::uint64_t>(q[i] - qmin), width);
      packer.flush();
    }
  }
  return out;
}

std::vector<double> q_decode(std::span<const std::uint8_t> stream, const QuantizerConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw ConfigError("quantizer tolerance must be positive");
  if (stream.size() < 4) throw FormatError("quantizer stream too short");
  const double step = 2.0 * cfg.tolerance;

  std::uint32_t n = 0;
  std::memcpy(&n, stream.data(), 4);
  std::vector<double> y(n);

  std::size_t pos = 4;
  for (std::size_t start = 0; start < n; start += cfg.block) {
    const std::size_t cnt = std::min<std::size_t>(cfg.block, n - start);
    if (pos + 9 > stream.size()) throw FormatError("quantizer stream truncated");
    std::int64_t qmin = 0;
    std::memcpy(&qmin, stream.data() + pos, 8);
    const std::uint8_t width = stream[pos + 8];
    pos += 9;
    if (width > 57) throw FormatError("quantizer stream: bad bit width");
    if (width == 0) {
      for (std::size_t i = 0; i < cnt; ++i) y[start + i] = double(qmin) * step;
    } else {
      const std::size_t packed = (cnt * width + 7) / 8;
      if (pos + packed > stream.size()) throw FormatError("quantizer stream truncated");
      BitUnpacker up{stream.subspan(pos, packed)};
      for (std::size_t i = 0; i < cnt; ++i) {
        const std::int64_t qv = qmin + static_cast<std::int64_t>(up.pull(width));
        y[start + i] = double(qv) * step;
      }
      pos += packed;
    }
  }
  if (pos != stream.size()) throw FormatError("quantizer stream: trailing bytes");
  return y;
}

// ---------------------------------------------------------------------------
// External codec process hook
// ---------------------------------------------------------------------------

std::vector<std::uint8_t> ExternalCodec::run(const std::string& mode, int n,
                                             std::span<const std::uint8_t> input) const {
  int to_child[2], from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0)
    throw Error("external codec: pipe() failed");

  const pid_t pid = fork();
  if (pid < 0) throw Error("external codec: fork() failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    const std::string cmd =
        command_ + " " + mode + " " + std::to_string(n) + " " + std::to_string(tolerance_);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);

  std::vector<std::uint8_t> output;
  std::size_t written = 0;
  bool write_open = true;
  std::uint8_t buf[4096];
  while (true) {
    struct pollfd fds[2];
    int nfds = 0;
    if (write_open) fds[nfds++] = {to_child[1], POLLOUT, 0};
    fds[nfds++] = {from_child[0], POLLIN, 0};
    if (poll(fds, nfds_t(nfds), -1) < 0) break;

    int fi = 0;
    if (write_open) {
      if (fds[0].revents & (POLLOUT | POLLERR)) {
        const std::size_t chunk = std::min<std::size_t>(4096, input.size() - written);
        const ssize_t w = write(to_child[1], input.data() + written, chunk);
        if (w > 0) written += std::size_t(w);
        if (w < 0 || written == input.size()) {
          close(to_child[1]);
          write_open = false;
        }
      }
      fi = 1;
    }
    if (fds[fi].revents & (POLLIN | POLLHUP)) {
      const ssize_t r = read(from_child[0], buf, sizeof buf);
      if (r > 0) {
        output.insert(output.end(), buf, buf + r);
      } else {
        break;  // EOF
      }
    }
  }
  if (write_open) close(to_child[1]);
  close(from_child[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw Error("external codec '" + command_ + "' failed (mode " + mode + ")");
  return output;
}

std::vector<std::uint8_t> ExternalCodec::encode(std::span<const double> y) const {
  std::span<const std::uint8_t> bytes{reinterpret_cast<const std::uint8_t*>(y.data()),
                                      y.size() * sizeof(double)};
  return run("encode", static_cast<int>(y.size()), bytes);
}

std::vector<double> ExternalCodec::decode(std::span<const std::uint8_t> stream, int n) const {
  const std::vector<std::uint8_t> raw = run("decode", n, stream);
  if (raw.size() != std::size_t(n) * sizeof(double))
    throw FormatError("external codec returned a payload of the wrong size");
  std::vector<double> y(n);
  std::memcpy(y.data(), raw.data(), raw.size());
  return y;
}

}  // namespace aeml
