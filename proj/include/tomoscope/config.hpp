#pragma once

// Run configuration: a YAML (or JSON) document naming the bodies, the
// checker or conjecture sweep, and its parameters. Every field is validated
// before any computation; errors carry the 1-based line they refer to.

#include "tomoscope/body.hpp"
#include "tomoscope/verify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tomo {

enum class RunKind { verify, sweep };

struct CheckerParams {
  /// Samples per checker: directions, apexes or normals.
  int count = 64;
  /// thm2 / thm6 / thm7 apex count, thm2 planes per apex.
  int apexes = 72;
  int planes = 8;
  /// thm6 points per graze.
  int points = 64;
  /// conj3 centre, orbit start point.
  std::optional<Vec> q;
  std::optional<Vec> x0;
  /// orbit
  int steps = 1000;
  OrbitVariant variant = OrbitVariant::thm2;
  /// floating: absolute cap volume.
  double delta = 0.0;
  /// thm1
  std::optional<Thm1Mode> mode;
};

struct SweepSpec {
  ConjectureId conjecture = ConjectureId::C1;
  int budget = 32;
  SweepFamily family;
};

struct RunConfig {
  RunKind kind = RunKind::verify;
  /// Checker id for verify runs: thmO thm1 conj2 conj3 thm2 thm3 thm4 thm6
  /// thm7 orbit floating.
  std::string checker;
  BodyPtr K;
  BodyPtr L;
  CheckerParams params;
  std::optional<SweepSpec> sweep;
  CheckOptions options;
  /// Output directory; empty means "<config stem>-out" next to the config.
  std::string output;
};

/// Parse and validate a config document. Throws ConfigError.
RunConfig parse_config(const std::string& text);

/// Rebuild a body from its describe() JSON (ball, ellipsoid, polytope,
/// perturbed-ball, affine). Throws InputError on unknown kinds.
BodyPtr body_from_json(const json& j);

/// Checker ids accepted by parse_config.
const std::vector<std::string>& checker_ids();

}  // namespace tomo
