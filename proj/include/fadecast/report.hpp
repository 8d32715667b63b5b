#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fadecast {

// Renders SVG plots from the CSV artifacts of a trial run directory:
// similarity heat map, per-metric histograms, observed-vs-predicted EoL
// scatter, and limited-data trend curves. Emits whichever plots have their
// input present; returns the written paths.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& run_dir);

} // namespace fadecast
