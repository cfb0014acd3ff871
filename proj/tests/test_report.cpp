#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aeml/report.hpp"
#include "aeml/svg.hpp"

using namespace aeml;

namespace {

SweepCounter grad_counter(bool checkpoint, int T = 64) {
  SweepCounter c;
  c.forward_sweeps = 1;
  c.adjoint_sweeps = 1;
  c.steps_per_sweep = T;
  c.recompute_steps = checkpoint ? T : 0;
  return c;
}

SweepCounter hvp_counter(bool checkpoint, int T = 64) {
  SweepCounter c;
  c.incfwd_sweeps = 1;
  c.incadj_sweeps = 1;
  c.steps_per_sweep = T;
  c.recompute_steps = checkpoint ? 2 * T : 0;
  return c;
}

}  // namespace

TEST_CASE("modeled speedup reproduces the ideal 4/3 and 6/4 bounds") {
  // Gradient: checkpointing costs fwd + adj(+assembly) + 1 recompute = 4 units
  // against the ideal 3, i.e. the "maximum speedup of 1.3".
  CHECK(modeled_speedup(grad_counter(true), grad_counter(false)) == 4.0 / 3.0);
  // Hvp: 6 units against 4 = the maximum speedup of 1.5.
  CHECK(modeled_speedup(hvp_counter(true), hvp_counter(false)) == 1.5);
  // Identical counters: no speedup.
  CHECK(modeled_speedup(grad_counter(true), grad_counter(true)) == 1.0);
}

TEST_CASE("recompute accounting is exact regardless of divisibility") {
  SweepCounter c;
  c.steps_per_sweep = 48;
  c.recompute_steps = 48;
  CHECK(c.recompute_sweeps() == 1.0);
  c.recompute_steps = 96;
  CHECK(c.recompute_sweeps() == 2.0);
}

TEST_CASE("modeled_speedup rejects an empty variant") {
  SweepCounter zero;
  CHECK_THROWS_AS(modeled_speedup(grad_counter(true), zero), Error);
}

TEST_CASE("report and history CSV round out with the full schema") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();

  RunReport row;
  row.run_id = "r1";
  row.backend = "ae";
  row.dofs = 1024;
  row.counter = grad_counter(false);
  row.ratio_paper = 32.0;
  row.ratio_true = 28.4;
  row.rel_l2_err_pct = 0.73;
  row.speedup_grad = 4.0 / 3.0;
  row.speedup_hvp = 1.5;
  row.wall_s = 12.5;
  const auto report_path = dir / "aeml_report_test.csv";
  write_report_csv(report_path, {row});
  std::ifstream in(report_path);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header ==
        "run_id,backend,dofs,fwd,adj,incfwd,incadj,recompute,compress,decompress,"
        "ratio_paper,ratio_true,rel_l2_err_pct,speedup_grad,speedup_hvp,wall_s");
  CHECK(line.find("r1,ae,1024,1,1,0,0,0,0,0,32,28.4,0.73,") == 0);
  fs::remove(report_path);

  NewtonIterRow it;
  it.iter = 0;
  it.objective = 2.5;
  it.grad_norm = 0.125;
  it.step_len = 1.0;
  it.cg_iters = 7;
  it.counter = grad_counter(true);
  const auto hist_path = dir / "aeml_history_test.csv";
  write_history_csv(hist_path, {it});
  std::ifstream hin(hist_path);
  std::getline(hin, header);
  std::getline(hin, line);
  CHECK(header == "iter,J,gnorm,step_len,cg_iters,fwd,adj,incfwd,incadj,recompute,compress,decompress");
  CHECK(line == "0,2.5,0.125,1,7,1,1,0,0,1,0,0");
  fs::remove(hist_path);
}

TEST_CASE("run meta persists and reads back") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "aeml_meta_test.cfg";
  RunMeta meta;
  meta.set("backend", "quant");
  meta.set_double("eta", 1e-3);
  meta.set_double("wall_s", 3.25);
  write_run_meta(path, meta);
  const RunMeta back = read_run_meta(path);
  CHECK(back.get("backend") == "quant");
  CHECK(back.get_double("eta") == 1e-3);
  CHECK(back.get_double("wall_s") == 3.25);
  CHECK_THROWS_AS(back.get("missing"), ConfigError);
  fs::remove(path);
}

TEST_CASE("svg writers emit well-formed files") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path();

  Field field(64);
  for (int i = 0; i < 64; ++i) field[i] = std::sin(0.3 * i);
  const auto heat = dir / "aeml_heat_test.svg";
  svg::write_heatmap(heat, field, 8, 8, "field");

  const auto lines = dir / "aeml_lines_test.svg";
  svg::write_lines(lines, {{"J", {10.0, 3.0, 1.0, 0.4}}, {"gnorm", {1.0, 0.2, 0.05, 0.01}}},
                   "convergence", /*log_y=*/true);

  for (const auto& p : {heat, lines}) {
    std::ifstream in(p);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content.find("<svg") == 0);
    CHECK(content.find("</svg>") != std::string::npos);
    fs::remove(p);
  }
}
