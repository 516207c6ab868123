#pragma once

#include <string>

#include "sbm/cli/report.hpp"

namespace sbm::cli {

/// Standalone SVG line chart with optional shaded confidence bands.
std::string render_svg(const Plot& plot);

}  // namespace sbm::cli
