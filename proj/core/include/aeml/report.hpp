#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aeml/adjoint.hpp"
#include "aeml/newton.hpp"

namespace aeml {

/// Cost of one sweep unit per counter. adj carries the gradient assembly with
/// it (one extra unit per adjoint sweep); incadj carries the simultaneous
/// adjoint re-advance plus the Hvp assembly (two extra units). With these
/// defaults a checkpointed gradient costs 4 units against the ideal 3, and a
/// checkpointed Hvp 6 against the ideal 4.
struct UnitWeights {
  double fwd = 1.0;
  double adj = 2.0;
  double incfwd = 1.0;
  double incadj = 3.0;
  double recompute = 1.0;
};

double weighted_units(const SweepCounter& c, const UnitWeights& w = {});

/// Modeled speedup = weighted units of the baseline over the variant.
double modeled_speedup(const SweepCounter& baseline, const SweepCounter& variant,
                       const UnitWeights& w = {});

/// One row of the comparison report (CSV schema).
struct RunReport {
  std::string run_id;
  std::string backend;
  int dofs = 0;
  SweepCounter counter;
  double ratio_paper = 1.0;
  double ratio_true = 1.0;
  double rel_l2_err_pct = 0.0;
  double speedup_grad = 1.0;
  double speedup_hvp = 1.0;
  double wall_s = 0.0;
};

void write_report_csv(const std::filesystem::path& path, const std::vector<RunReport>& rows);

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<NewtonIterRow>& history);

/// Tiny ordered key=value store persisted with each run so reports are
/// regenerable bit-identically from the run directory.
struct RunMeta {
  std::vector<std::pair<std::string, std::string>> entries;
  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool has(const std::string& key) const;
};

void write_run_meta(const std::filesystem::path& path, const RunMeta& meta);
RunMeta read_run_meta(const std::filesystem::path& path);

/// Stable shortest-roundtrip formatting used in all CSV output.
std::string format_double(double v);

}  // namespace aeml
