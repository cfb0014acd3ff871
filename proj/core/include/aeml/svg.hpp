#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aeml/field.hpp"

namespace aeml {
namespace svg {

/// Field heatmap on an nx x ny node grid (viridis-like ramp).
void write_heatmap(const std::filesystem::path& path, const Field& values, int nx, int ny,
                   const std::string& title);

struct Series {
  std::string label;
  std::vector<double> y;  // x is the index
};

/// Line chart; log_y switches the value axis to log10.
void write_lines(const std::filesystem::path& path, const std::vector<Series>& series,
                 const std::string& title, bool log_y = false);

}  // namespace svg
}  // namespace aeml
