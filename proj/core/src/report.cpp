#include "aeml/report.hpp"

#include <charconv>
#include <fstream>

namespace aeml {

double weighted_units(const SweepCounter& c, const UnitWeights& w) {
  return w.fwd * c.forward_sweeps + w.adj * c.adjoint_sweeps + w.incfwd * c.incfwd_sweeps +
         w.incadj * c.incadj_sweeps + w.recompute * c.recompute_sweeps();
}

double modeled_speedup(const SweepCounter& baseline, const SweepCounter& variant,
                       const UnitWeights& w) {
  const double denom = weighted_units(variant, w);
  if (denom == 0.0) throw Error("modeled_speedup: variant has zero weighted units");
  return weighted_units(baseline, w) / denom;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_report_csv(const std::filesystem::path& path, const std::vector<RunReport>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open report file: " + path.string());
  out << "run_id,backend,dofs,fwd,adj,incfwd,incadj,recompute,compress,decompress,"
         "ratio_paper,ratio_true,rel_l2_err_pct,speedup_grad,speedup_hvp,wall_s\n";
  for (const RunReport& r : rows) {
    out << r.run_id << ',' << r.backend << ',' << r.dofs << ',' << r.counter.forward_sweeps << ','
        << r.counter.adjoint_sweeps << ',' << r.counter.incfwd_sweeps << ','
        << r.counter.incadj_sweeps << ',' << format_double(r.counter.recompute_sweeps()) << ','
        << r.counter.compress_calls << ',' << r.counter.decompress_calls << ','
        << format_double(r.ratio_paper) << ',' << format_double(r.ratio_true) << ','
        << format_double(r.rel_l2_err_pct) << ',' << format_double(r.speedup_grad) << ','
        << format_double(r.speedup_hvp) << ',' << format_double(r.wall_s) << '\n';
  }
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<NewtonIterRow>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open history file: " + path.string());
  out << "iter,J,gnorm,step_len,cg_iters,fwd,adj,incfwd,incadj,recompute,compress,decompress\n";
  for (const NewtonIterRow& r : history) {
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.grad_norm) << ','
        << format_double(r.step_len) << ',' << r.cg_iters << ',' << r.counter.forward_sweeps << ','
        << r.counter.adjoint_sweeps << ',' << r.counter.incfwd_sweeps << ','
        << r.counter.incadj_sweeps << ',' << format_double(r.counter.recompute_sweeps()) << ','
        << r.counter.compress_calls << ',' << r.counter.decompress_calls << '\n';
  }
}

void RunMeta::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries)
    if (k == key) {
      v = value;
      return;
    }
  entries.emplace_back(key, value);
}

void RunMeta::set_double(const std::string& key, double value) { set(key, format_double(value)); }

bool RunMeta::has(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return true;
  return false;
}

const std::string& RunMeta::get(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  throw ConfigError("run meta: missing key " + key);
}

double RunMeta::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw ConfigError("run meta: bad number for " + key);
  }
}

void write_run_meta(const std::filesystem::path& path, const RunMeta& meta) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open run meta file: " + path.string());
  for (const auto& [k, v] : meta.entries) out << k << " = " << v << "\n";
}

RunMeta read_run_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open run meta file: " + path.string());
  RunMeta meta;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    meta.entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return meta;
}

}  // namespace aeml
