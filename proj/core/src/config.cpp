#include "aeml/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aeml {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
  ConfigFile cfg;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  return sit != sections_.end() && sit->second.count(key) > 0;
}

const std::string& ConfigFile::get(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end())
    throw ConfigError("config: missing section [" + section + "]");
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end())
    throw ConfigError("config: missing key '" + key + "' in [" + section + "]");
  return kit->second;
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number '" + v + "' for " + section + "." + key);
  }
}

double ConfigFile::get_double_or(const std::string& section, const std::string& key,
                                 double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

int ConfigFile::get_int_or(const std::string& section, const std::string& key,
                           int fallback) const {
  if (!has(section, key)) return fallback;
  const double d = get_double(section, key);
  const int i = static_cast<int>(std::llround(d));
  if (double(i) != d) throw ConfigError("config: expected integer for " + section + "." + key);
  return i;
}

std::vector<double> ConfigFile::get_list(const std::string& section, const std::string& key) const {
  const std::string& v = get(section, key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("config: bad list entry '" + item + "' for " + section + "." + key);
    }
  }
  return out;
}

ForwardConfig RunSetup::forward_config() const {
  ForwardConfig fc;
  fc.grid = grid;
  fc.density = density;
  fc.time = time;
  fc.sources = sources;
  fc.receivers = receivers;
  return fc;
}

BiLaplacianPrior RunSetup::make_prior() const {
  return BiLaplacianPrior(grid, prior_alpha, prior_theta, prior_mean, c_min);
}

RunSetup load_run_setup(const ConfigFile& cfg) {
  RunSetup rs;

  const int dim = cfg.get_int_or("grid", "dim", 2);
  const int nx = cfg.get_int_or("grid", "nx", 32);
  const int ny = cfg.get_int_or("grid", "ny", dim == 2 ? 32 : 1);
  const double spacing = cfg.get_double_or("grid", "spacing", 1.0 / (nx - 1));
  const int tile_x = cfg.get_int_or("grid", "tile_x", std::min(16, nx));
  const int tile_y = cfg.get_int_or("grid", "tile_y", dim == 2 ? std::min(16, ny) : 1);
  rs.grid = dim == 1 ? Grid::make_1d(nx, spacing, tile_x)
                     : Grid::make_2d(nx, ny, spacing, tile_x, tile_y);

  const double rho = cfg.get_double_or("medium", "density", 1.0);
  const double background = cfg.get_double_or("medium", "background", 1.0);
  rs.density.assign(rs.grid.node_count(), rho);

  // Synthetic truth: background plus an optional box anomaly.
  rs.truth.assign(rs.grid.node_count(), background);
  const std::string anomaly = cfg.get_or("truth", "anomaly", "none");
  if (anomaly == "box") {
    const double cx = cfg.get_double("truth", "cx");
    const double cy = dim == 2 ? cfg.get_double("truth", "cy") : 0.0;
    const double half = cfg.get_double("truth", "half_width");
    const double delta = cfg.get_double("truth", "delta");
    for (int iy = 0; iy < rs.grid.nodes[1]; ++iy)
      for (int ix = 0; ix < rs.grid.nodes[0]; ++ix) {
        const double x = ix * spacing;
        const double y = iy * spacing;
        if (std::fabs(x - cx) <= half && (dim == 1 || std::fabs(y - cy) <= half))
          rs.truth[rs.grid.index(ix, iy)] = background + delta;
      }
  } else if (anomaly != "none") {
    throw ConfigError("truth.anomaly must be 'box' or 'none'");
  }

  // Stability margin covers the truth and moderate optimizer excursions.
  Medium cfl_medium;
  cfl_medium.density = rs.density;
  cfl_medium.wavespeed = rs.truth;
  const double safety = cfg.get_double_or("time", "cfl_safety", 0.5);
  rs.time.dt = cfl_dt(rs.grid, cfl_medium, safety);
  if (cfg.has("time", "steps")) {
    rs.time.steps = cfg.get_int_or("time", "steps", 0);
  } else {
    const double final_time = cfg.get_double_or("time", "final", 2.0);
    rs.time.steps = static_cast<int>(std::ceil(final_time / rs.time.dt));
  }
  if (rs.time.steps < 1) throw ConfigError("time axis resolves to zero steps");

  const int n_sources = cfg.get_int_or("sources", "count", 0);
  for (int s = 0; s < n_sources; ++s) {
    const std::string p = "s" + std::to_string(s) + ".";
    SourceSpec src;
    const std::string kind = cfg.get_or("sources", p + "kind", "ricker");
    if (kind == "ricker")
      src.kind = SourceKind::Ricker;
    else if (kind == "gaussian")
      src.kind = SourceKind::Gaussian;
    else
      throw ConfigError("source kind must be ricker or gaussian");
    src.location[0] = cfg.get_double("sources", p + "x");
    src.location[1] = dim == 2 ? cfg.get_double("sources", p + "y") : 0.0;
    src.t_center = cfg.get_double_or("sources", p + "tc", 0.6);
    src.sigma_t = cfg.get_double_or("sources", p + "sigma_t", 1.0 / M_PI);
    src.sigma_x = cfg.get_double_or("sources", p + "sigma_x", 0.05);
    if (cfg.has("sources", p + "dir")) {
      const auto d = cfg.get_list("sources", p + "dir");
      if (static_cast<int>(d.size()) != dim) throw ConfigError("source direction length mismatch");
      src.direction = {d[0], dim == 2 ? d[1] : 0.0};
    } else if (dim == 2) {
      src.direction = {0.0, -1.0};
    } else {
      src.direction = {1.0, 0.0};
    }
    src.validate();
    rs.sources.push_back(src);
  }

  // Receivers: evenly spaced along x on a row `depth_nodes` below the surface
  // (the surface is the top row iy = ny - 1), or an explicit node list.
  if (cfg.has("receivers", "nodes")) {
    for (double v : cfg.get_list("receivers", "nodes"))
      rs.receivers.push_back(static_cast<int>(std::llround(v)));
  } else {
    const int count = cfg.get_int_or("receivers", "count", std::min(32, nx));
    const int depth = cfg.get_int_or("receivers", "depth_nodes", 0);
    const int iy = dim == 2 ? std::max(0, ny - 1 - depth) : 0;
    for (int r = 0; r < count; ++r) {
      const double fx = count == 1 ? 0.5 : double(r) / (count - 1);
      const int ix = static_cast<int>(std::lround(fx * (nx - 1)));
      rs.receivers.push_back(rs.grid.index(ix, iy));
    }
  }

  rs.prior_alpha = cfg.get_double_or("prior", "alpha", 1.0);
  rs.prior_theta = cfg.get_double_or("prior", "theta", 1e-2);
  rs.prior_mean.assign(rs.grid.node_count(), cfg.get_double_or("prior", "mean", background));
  rs.c_min = cfg.get_double_or("prior", "c_min", 0.1 * background);

  rs.noise_rel = cfg.get_double_or("noise", "rel", 0.01);

  rs.newton.max_newton_iters = cfg.get_int_or("newton", "max_iters", 8);
  rs.newton.cg_max_iters = cfg.get_int_or("newton", "cg_max_iters", 60);
  rs.newton.grad_tol = cfg.get_double_or("newton", "grad_tol", 1e-6);

  const std::string scheme = cfg.get_or("store", "scheme", "space");
  if (scheme == "space")
    rs.scheme = Scheme::Space;
  else if (scheme == "time")
    rs.scheme = Scheme::Time;
  else
    throw ConfigError("store.scheme must be 'space' or 'time'");
  rs.window = cfg.get_int_or("store", "window", 16);
  rs.checkpoint_interval = cfg.get_int_or("store", "checkpoint_interval", 0);
  rs.quant_eta = cfg.get_double_or("store", "eta", 1e-4);
  return rs;
}

}  // namespace aeml
