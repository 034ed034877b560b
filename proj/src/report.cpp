#include "tomoscope/report.hpp"

#include "tomoscope/config.hpp"
#include "tomoscope/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tomo {

std::string sha256_hex(const std::string& s) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(s.data(), s.size(), digest, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void write_files_atomic(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const fs::path& t : temps) fs::remove(t, ec);
  };
  for (const auto& [path, content] : files)
    if (fs::is_directory(path)) throw Error("cannot write " + path.string() + ": it is a directory");
  try {
    for (const auto& [path, content] : files) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      fs::path tmp = path;
      tmp += ".tmp";
      temps.push_back(tmp);
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os.write(content.data(), static_cast<std::streamsize>(content.size()));
      os.close();
      if (!os) throw Error("cannot write " + tmp.string());
    }
    for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], files[i].first);
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw Error(e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

int report_dimension(const json& report) {
  if (!report.is_object() || !report.contains("bodies") || !report["bodies"].is_array() || report["bodies"].empty())
    throw InputError("report has no bodies");
  return body_from_json(report["bodies"][0])->dim();
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<Vec> boundary_loop(const Body& b, int count) {
  std::vector<Vec> out;
  const Vec c = b.interior_point();
  if (const auto* poly = dynamic_cast<const PolytopeV*>(&b)) {
    out = poly->vertices();
    std::sort(out.begin(), out.end(), [&](const Vec& p, const Vec& q) {
      return std::atan2(p[1] - c[1], p[0] - c[0]) < std::atan2(q[1] - c[1], q[0] - c[0]);
    });
    return out;
  }
  for (const Vec& u : sample_sphere(b.dim(), count, {})) out.push_back(b.ray_exit(c, u));
  return out;
}

Vec json_vec(const json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

bool on_unit_circle(const std::string& theorem) {
  return theorem == "thm2" || theorem == "thm3" || theorem.rfind("orbit", 0) == 0;
}

class Canvas {
 public:
  // Square view of half-width `extent` around `center`.
  Canvas(Eigen::Vector2d center, double extent) : center_(center), scale_(0.5 * kSvgSize / extent) {}
  std::string x(double v) const { return fmt(0.5 * kSvgSize + scale_ * (v - center_[0])); }
  std::string y(double v) const { return fmt(0.5 * kSvgSize - scale_ * (v - center_[1])); }
  std::string pt(const Vec& p) const { return x(p[0]) + "," + y(p[1]); }
  std::string r(double v) const { return fmt(scale_ * v); }

 private:
  Eigen::Vector2d center_;
  double scale_;
};

std::string polygon(const Canvas& cv, const std::vector<Vec>& pts, const std::string& style) {
  std::string s = "<polygon points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? " " : "") + cv.pt(pts[i]);
  return s + "\" " + style + "/>\n";
}

}  // namespace

std::string render_svg(const json& report) {
  if (!report.is_object() || !report.contains("theorem")) throw InputError("not a verification report");
  const std::string theorem = report["theorem"].get<std::string>();
  std::vector<BodyPtr> bodies;
  for (const json& b : report.at("bodies")) bodies.push_back(body_from_json(b));
  if (bodies.empty()) throw InputError("report has no bodies");
  for (const BodyPtr& b : bodies)
    if (b->dim() != 2) throw UnsupportedError("plots are available for 2-D reports only");

  std::vector<std::vector<Vec>> loops;
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  auto cover = [&](const Vec& p) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  };
  if (on_unit_circle(theorem)) {
    cover(make_vec({-1.0, -1.0}));
    cover(make_vec({1.0, 1.0}));
  }
  for (const BodyPtr& b : bodies) {
    loops.push_back(boundary_loop(*b, 360));
    for (const Vec& p : loops.back()) cover(p);
  }
  const json& details = report.contains("details") ? report["details"] : json::object();
  if (details.contains("orbit"))
    for (const json& p : details["orbit"]["points"]) cover(json_vec(p));
  const double extent = 0.6 * (hi - lo).maxCoeff();
  const Eigen::Vector2d mid = 0.5 * (lo + hi);
  const Canvas cv(mid, extent);

  static const char* colors[] = {"#1f3b73", "#b04a1c"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgSize << "\" height=\"" << kSvgSize
     << "\" viewBox=\"0 0 " << kSvgSize << ' ' << kSvgSize << "\">\n";
  os << "<rect width=\"" << kSvgSize << "\" height=\"" << kSvgSize << "\" fill=\"#ffffff\"/>\n";
  // axes
  os << "<line x1=\"" << cv.x(mid[0] - extent) << "\" y1=\"" << cv.y(0) << "\" x2=\"" << cv.x(mid[0] + extent) << "\" y2=\"" << cv.y(0)
     << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << cv.x(0) << "\" y1=\"" << cv.y(mid[1] - extent) << "\" x2=\"" << cv.x(0) << "\" y2=\"" << cv.y(mid[1] + extent)
     << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
  if (on_unit_circle(theorem))
    os << "<circle cx=\"" << cv.x(0) << "\" cy=\"" << cv.y(0) << "\" r=\"" << cv.r(1.0)
       << "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";
  for (std::size_t i = 0; i < loops.size(); ++i)
    os << polygon(cv, loops[i],
                  std::string("fill=\"none\" stroke=\"") + colors[i % 2] + "\" stroke-width=\"2\"");

  if (details.contains("floating_polygon")) {
    std::vector<Vec> poly;
    for (const json& p : details["floating_polygon"]) poly.push_back(json_vec(p));
    if (!poly.empty()) os << polygon(cv, poly, "fill=\"none\" stroke=\"#2e8b57\" stroke-width=\"2\"");
  }
  if (details.contains("chord")) {
    const Vec a = json_vec(details["chord"]["a"]), b = json_vec(details["chord"]["b"]);
    const Vec m = json_vec(details["chord"]["midpoint"]);
    os << "<line x1=\"" << cv.x(a[0]) << "\" y1=\"" << cv.y(a[1]) << "\" x2=\"" << cv.x(b[0]) << "\" y2=\"" << cv.y(b[1])
       << "\" stroke=\"#444444\" stroke-width=\"1.5\"/>\n";
    os << "<circle cx=\"" << cv.x(m[0]) << "\" cy=\"" << cv.y(m[1])
       << "\" r=\"5\" fill=\"#d62728\" stroke=\"none\"/>\n";
  }
  if (details.contains("orbit")) {
    std::string pts;
    for (const json& p : details["orbit"]["points"]) pts += (pts.empty() ? "" : " ") + cv.pt(json_vec(p));
    os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"#7b3294\" stroke-width=\"0.6\"/>\n";
    for (const json& p : details["orbit"]["points"]) {
      const Vec v = json_vec(p);
      os << "<circle cx=\"" << cv.x(v[0]) << "\" cy=\"" << cv.y(v[1]) << "\" r=\"2.5\" fill=\"#7b3294\"/>\n";
    }
  }
  if (theorem == "thm2" || theorem == "thm3") {
    const double tol = report["tolerance"].is_number() ? report["tolerance"].get<double>() : 0.0;
    for (const json& s : report["samples"]) {
      if (s["kind"] != "apex") continue;
      const Vec v = json_vec(s["at"]);
      const bool ok = s["score"].is_number() && s["score"].get<double>() <= tol;
      os << "<circle cx=\"" << cv.x(v[0]) << "\" cy=\"" << cv.y(v[1]) << "\" r=\"2\" fill=\""
         << (s["skipped"].get<bool>() ? "#bbbbbb" : ok ? "#2ca02c" : "#d62728") << "\"/>\n";
    }
  }
  std::string title = theorem + " " + report.value("verdict", std::string());
  if (report.contains("max_violation")) title += " max_violation=" + report["max_violation"].dump();
  os << "<text x=\"16\" y=\"28\" font-family=\"monospace\" font-size=\"16\" fill=\"#000000\">" << title << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string point_cloud_csv(const json& report, int per_body) {
  std::ostringstream os;
  os << "body,x0,x1,x2,x3\n";
  char buf[32];
  int index = 0;
  for (const json& bj : report.at("bodies")) {
    const BodyPtr b = body_from_json(bj);
    for (const Vec& u : sample_sphere(b->dim(), per_body, {})) {
      const Vec p = b->ray_exit(b->interior_point(), u);
      os << index;
      for (int c = 0; c < kMaxDim; ++c) {
        os << ',';
        if (c < p.size()) {
          std::snprintf(buf, sizeof buf, "%.17g", p[c]);
          os << buf;
        }
      }
      os << '\n';
    }
    ++index;
  }
  return os.str();
}

}  // namespace tomo
