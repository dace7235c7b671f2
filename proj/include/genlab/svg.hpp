#pragma once

// Plain SVG figures with fixed number formatting, so output bytes depend only
// on the input.

#include <string>

#include "genlab/geometry.hpp"
#include "genlab/train_eval.hpp"

namespace genlab::svg {

/// Node positions and edges over the unit square (sphere meshes are drawn in
/// (longitude, colatitude) coordinates). `title` is escaped.
std::string mesh_svg(const geometry::SpatialMesh& mesh, const std::string& title = "");

/// MSE versus mesh size, one line per model with a ±1 std band over seeds,
/// log-scaled y axis. Rows with mesh_k == 0 (the baseline) are drawn as a
/// horizontal line across the plotted k range. Only rows of `split` are used;
/// throws std::invalid_argument when none are left.
std::string mse_plot_svg(const train::EvalReport& report, const std::string& split = "test",
                         const std::string& title = "");

std::string escape_xml(const std::string& s);

}  // namespace genlab::svg
