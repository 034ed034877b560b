#include "tomoscope/cli.hpp"

#include "tomoscope/errors.hpp"
#include "tomoscope/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef TOMOSCOPE_VERSION
#define TOMOSCOPE_VERSION "0.0.0"
#endif

namespace tomo {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw InputError("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// A config read from disk, or recovered from a manifest of an earlier run.
struct Source {
  std::string text;
  std::string name;
  fs::path default_out;
  Overrides recorded;
  bool from_manifest = false;
};

Source load_source(const std::string& path) {
  Source s;
  const fs::path p(path);
  const std::string raw = read_file(p);
  const json m = json::parse(raw, nullptr, false);
  if (m.is_object() && m.value("tool", "") == "tomoscope" && m.contains("config")) {
    s.from_manifest = true;
    s.text = m.at("config").get<std::string>();
    s.name = m.value("config_name", std::string("config"));
    s.default_out = p.parent_path() / "rerun";
    const json& o = m.value("overrides", json::object());
    if (o.contains("seed")) s.recorded.seed = o["seed"].get<std::uint64_t>();
    if (o.contains("samples")) s.recorded.samples = o["samples"].get<int>();
    if (o.contains("tolerance")) s.recorded.tolerance = o["tolerance"].get<double>();
    return s;
  }
  s.text = raw;
  s.name = p.filename().string();
  s.default_out = p.parent_path() / (p.stem().string() + "-out");
  return s;
}

// Overrides recorded from the manifest, then those given on the command line.
Overrides merge(const Overrides& base, const Overrides& top) {
  Overrides o = base;
  if (top.seed) o.seed = top.seed;
  if (top.samples) o.samples = top.samples;
  if (top.tolerance) o.tolerance = top.tolerance;
  if (top.out) o.out = top.out;
  return o;
}

json overrides_json(const Overrides& o) {
  json j = json::object();
  if (o.seed) j["seed"] = *o.seed;
  if (o.samples) j["samples"] = *o.samples;
  if (o.tolerance) j["tolerance"] = *o.tolerance;
  return j;
}

fs::path output_dir(const RunConfig& cfg, const Source& src, const Overrides& o) {
  if (o.out) return *o.out;
  if (!src.from_manifest && !cfg.output.empty()) return cfg.output;
  return src.default_out;
}

using FileList = std::vector<std::pair<fs::path, std::string>>;

// Appends manifest.json (hashes of the other files) and writes everything.
void finish(FileList files, const fs::path& dir, const std::string& command, const Source& src, const Overrides& o,
            const std::string& verdict, int exit_code, double seconds) {
  json listing = json::array();
  for (const auto& [path, content] : files)
    listing.push_back({{"name", path.filename().string()}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  const json manifest = {{"tool", "tomoscope"},
                         {"version", TOMOSCOPE_VERSION},
                         {"command", command},
                         {"config_name", src.name},
                         {"config", src.text},
                         {"config_sha256", sha256_hex(src.text)},
                         {"overrides", overrides_json(o)},
                         {"verdict", verdict},
                         {"exit_code", exit_code},
                         {"files", listing},
                         {"wall_time_seconds", seconds}};
  files.emplace_back(dir / "manifest.json", manifest.dump(2) + "\n");
  write_files_atomic(files);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
int guarded(const std::string& what, std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << what << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.options.seed = *o.seed;
  if (o.samples) {
    if (*o.samples < 100) throw InputError("--samples must be at least 100");
    cfg.options.samples = *o.samples;
  }
  if (o.tolerance) {
    if (!(*o.tolerance > 0.0)) throw InputError("--tol must be positive");
    cfg.options.tolerance = *o.tolerance;
  }
}

VerificationReport run_checker(const RunConfig& cfg) {
  const CheckerParams& p = cfg.params;
  const CheckOptions& o = cfg.options;
  const std::string& c = cfg.checker;
  if (c == "thmO") return check_thmO(cfg.K, cfg.L, p.count, o);
  if (c == "thm1") return check_thm1(cfg.K, cfg.L, *p.mode, p.count, o);
  if (c == "conj2") return check_conj2(cfg.K, cfg.L, p.count, o);
  if (c == "conj3") return check_conj3(cfg.K, *p.q, p.count, o);
  if (c == "thm2") return check_thm2(cfg.K, p.apexes, p.planes, o);
  if (c == "thm3") return check_thm3(cfg.K, p.count, o);
  if (c == "thm4") return check_thm4(cfg.K, p.count, o);
  if (c == "thm6") return check_thm6(cfg.K, cfg.L, p.apexes, p.points, o);
  if (c == "thm7") return check_thm7(cfg.K, cfg.L, p.apexes, o);
  if (c == "orbit") return check_orbit(cfg.K, *p.x0, p.steps, p.variant, o);
  if (c == "floating") return check_chord_midpoints(FloatingSpec(cfg.K, p.delta), p.count, o);
  throw InputError("unknown checker '" + c + "'");
}

int cmd_verify(const std::string& path, const Overrides& cli, std::ostream& out, std::ostream& err) {
  return guarded(path, err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const Source src = load_source(path);
    RunConfig cfg = parse_config(src.text);
    if (cfg.kind != RunKind::verify) throw InputError(path + " is a sweep config; use 'tomoscope sweep'");
    const Overrides o = merge(src.recorded, cli);
    apply_overrides(cfg, o);
    const fs::path dir = output_dir(cfg, src, o);

    const VerificationReport r = run_checker(cfg);
    const json rj = r.to_json();
    FileList files = {{dir / "report.json", rj.dump(2) + "\n"}, {dir / "samples.csv", r.samples_csv()}};
    if (cfg.K->dim() == 2)
      files.emplace_back(dir / "figure.svg", render_svg(rj));
    else
      files.emplace_back(dir / "bodies.csv", point_cloud_csv(rj));
    const int code = r.pass ? 0 : 1;
    finish(files, dir, "verify", src, o, r.verdict(), code, elapsed(t0));
    out << r.theorem << ": " << r.verdict() << " (max_violation " << rj["max_violation"].dump() << ", tolerance "
        << rj["tolerance"].dump() << ", " << r.skipped << " skipped) -> " << dir.string() << "\n";
    return code;
  });
}

int cmd_sweep(const std::string& path, const Overrides& cli, std::ostream& out, std::ostream& err) {
  return guarded(path, err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const Source src = load_source(path);
    RunConfig cfg = parse_config(src.text);
    if (cfg.kind != RunKind::sweep) throw InputError(path + " is a checker config; use 'tomoscope verify'");
    const Overrides o = merge(src.recorded, cli);
    apply_overrides(cfg, o);
    const fs::path dir = output_dir(cfg, src, o);

    const SweepReport r = explore_conjecture(cfg.sweep->conjecture, cfg.sweep->family, cfg.sweep->budget, cfg.options);
    const FileList files = {{dir / "sweep.csv", r.to_csv()}, {dir / "sweep.json", r.to_json().dump(2) + "\n"}};
    finish(files, dir, "sweep", src, o, "n/a", 0, elapsed(t0));
    out << to_string(r.id) << " sweep over " << r.family << ": " << r.rows.size() << " rows, " << r.candidates.size()
        << " candidate(s) -> " << dir.string() << "\n";
    return 0;
  });
}

int cmd_plot(const std::string& report_path, const std::optional<std::string>& svg_path, std::ostream& out,
             std::ostream& err) {
  return guarded(report_path, err, [&] {
    const json report = json::parse(read_file(report_path), nullptr, false);
    if (report.is_discarded()) throw InputError(report_path + " is not valid JSON");
    fs::path target = svg_path ? fs::path(*svg_path) : fs::path(report_path).replace_extension(".svg");
    write_files_atomic({{target, render_svg(report)}});
    out << "wrote " << target.string() << "\n";
    return 0;
  });
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Numerical verification of convex-body characterizations", "tomoscope"};
  app.set_version_flag("--version", TOMOSCOPE_VERSION);
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  int samples = 0;
  double tol = 0.0;
  std::string out_dir, config, report, svg;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the RNG seed");
    sub->add_option("--samples", samples, "Override the Monte Carlo sample count");
    sub->add_option("--tol", tol, "Override the tolerance");
    sub->add_option("--out", out_dir, "Output directory");
  };
  CLI::App* verify = app.add_subcommand("verify", "Run a checker config (or re-run a manifest)");
  verify->add_option("config", config, "Config file (YAML or JSON) or manifest.json")->required();
  add_overrides(verify);
  CLI::App* sweep = app.add_subcommand("sweep", "Run a conjecture sweep config (or re-run a manifest)");
  sweep->add_option("config", config, "Config file (YAML or JSON) or manifest.json")->required();
  add_overrides(sweep);
  CLI::App* plot = app.add_subcommand("plot", "Render a 2-D report as SVG");
  plot->add_option("report", report, "report.json")->required();
  plot->add_option("-o,--output", svg, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (CLI::App* sub : {verify, sweep}) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--samples")) o.samples = samples;
    if (sub->count("--tol")) o.tolerance = tol;
    if (sub->count("--out")) o.out = out_dir;
  }
  if (*verify) return cmd_verify(config, o, std::cout, std::cerr);
  if (*sweep) return cmd_sweep(config, o, std::cout, std::cerr);
  return cmd_plot(report, plot->count("-o") ? std::optional<std::string>(svg) : std::nullopt, std::cout, std::cerr);
}

}  // namespace tomo
