#pragma once

// Report persistence: hashing, atomic file writes, the 2-D SVG renderer and
// the 3-D point-cloud export.

#include "tomoscope/body.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tomo {

/// Lower-case hex SHA-256 of the bytes of s.
std::string sha256_hex(const std::string& s);

/// Write every (path, content) pair to a temporary sibling first, then
/// rename all of them into place. On failure no target is touched and the
/// temporaries are removed. Throws Error.
void write_files_atomic(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

/// Canvas edge in pixels.
inline constexpr int kSvgSize = 800;

/// Deterministic SVG of a 2-D verification report: bodies, the unit circle
/// for apex-on-circle checkers, sampled apexes, orbit polygon, floating
/// polygon with one tangent chord and its midpoint. Fixed stroke order.
/// Throws UnsupportedError for reports with bodies of dimension != 2.
std::string render_svg(const json& report);

/// Boundary point cloud of every body in a report (radial samples),
/// header body,x0,x1,x2,x3.
std::string point_cloud_csv(const json& report, int per_body = 400);

/// Dimension of the first body in a report.
int report_dimension(const json& report);

}  // namespace tomo
