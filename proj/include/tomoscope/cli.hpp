#pragma once

// Command dispatch for the tomoscope executable.

#include "tomoscope/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace tomo {

/// Command-line overrides; each replaces the config value when set.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<double> tolerance;
  /// Output directory.
  std::optional<std::string> out;
};

void apply_overrides(RunConfig& cfg, const Overrides& o);

/// Run the checker of a verify config. Throws on errors.
VerificationReport run_checker(const RunConfig& cfg);

/// `verify <config|manifest>`: writes report.json, samples.csv, figure.svg
/// (2-D) or bodies.csv (3-D and up), manifest.json. Exit 0 pass, 1 fail,
/// 2 error.
int cmd_verify(const std::string& path, const Overrides& overrides, std::ostream& out, std::ostream& err);

/// `sweep <config|manifest>`: writes sweep.csv, sweep.json, manifest.json.
/// Exit 0, or 2 on error.
int cmd_sweep(const std::string& path, const Overrides& overrides, std::ostream& out, std::ostream& err);

/// `plot <report> [-o out.svg]`: default output replaces the report's
/// extension with .svg. Exit 0, or 2 on error (missing file, 3-D report).
int cmd_plot(const std::string& report_path, const std::optional<std::string>& svg_path, std::ostream& out,
             std::ostream& err);

/// Full command line, as called from main().
int cli_main(int argc, char** argv);

}  // namespace tomo
