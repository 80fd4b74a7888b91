#pragma once

#include <string>
#include <vector>

#include "lpforge/training.hpp"

namespace lpforge::io {

/// Self-contained SVG 1.1 with two stacked panels: accuracy trajectories on
/// top, concentration statistics below. Deterministic for identical records.
std::string render_records_svg(const std::vector<train::TrainRecord>& records);

void write_records_svg(const std::vector<train::TrainRecord>& records, const std::string& path);

}  // namespace lpforge::io
