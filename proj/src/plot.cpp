#include "dlpp/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace dlpp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

std::string num(double x) {
  std::ostringstream out;
  out << std::setprecision(6) << x;
  return out.str();
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double value(double x) const { return log ? std::log10(x) : x; }
};

// Minimal SVG canvas: data coordinates in, pixels out.
class Canvas {
 public:
  Canvas(Axis x, Axis y, std::string title) : x_(x), y_(y) {
    pad(x_);
    pad(y_);
    body_ << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
          << "</text>\n";
  }

  double px(double x) const { return kLeft + (x_.value(x) - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    return kHeight - kBottom - (y_.value(y) - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
  }

  void marker(double x, double y, const std::string& label = "") {
    body_ << "<circle class=\"marker\" cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"4\"";
    if (!label.empty()) body_ << " data-label=\"" << escape(label) << "\"";
    body_ << " fill=\"#1f77b4\"/>\n";
  }

  void upper_bound(double x, double y, const std::string& label) {
    const double cx = px(x), cy = py(y);
    body_ << "<path class=\"upper-bound\" data-label=\"" << escape(label) << "\" d=\"M" << num(cx - 5) << ' ' << num(cy - 4)
          << " L" << num(cx + 5) << ' ' << num(cy - 4) << " L" << num(cx) << ' ' << num(cy + 5)
          << " Z\" fill=\"none\" stroke=\"#d62728\"/>\n";
    body_ << "<text x=\"" << num(cx + 8) << "\" y=\"" << num(cy) << "\" font-size=\"11\">" << escape(label) << "</text>\n";
  }

  void error_bar(double x, double lo, double hi) {
    body_ << "<line class=\"ci\" x1=\"" << num(px(x)) << "\" y1=\"" << num(py(lo)) << "\" x2=\"" << num(px(x))
          << "\" y2=\"" << num(py(hi)) << "\" stroke=\"#1f77b4\"/>\n";
  }

  void line(const std::string& cls, double x1, double y1, double x2, double y2, const std::string& colour,
            bool dashed = false) {
    body_ << "<line class=\"" << cls << "\" x1=\"" << num(px(x1)) << "\" y1=\"" << num(py(y1)) << "\" x2=\""
          << num(px(x2)) << "\" y2=\"" << num(py(y2)) << "\" stroke=\"" << colour << "\""
          << (dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
  }

  void polyline(const std::string& cls, const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& colour) {
    body_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (std::size_t k = 0; k < xs.size(); ++k) body_ << (k ? " " : "") << num(px(xs[k])) << ',' << num(py(ys[k]));
    body_ << "\"/>\n";
  }

  void band(const std::string& cls, double x1, double x2, const std::string& attrs) {
    body_ << "<rect class=\"" << cls << "\" " << attrs << " x=\"" << num(px(x1)) << "\" y=\"" << kTop
          << "\" width=\"" << num(px(x2) - px(x1)) << "\" height=\"" << kHeight - kTop - kBottom
          << "\" fill=\"#ffdd88\" fill-opacity=\"0.5\"/>\n";
  }

  void legend(int slot, const std::string& text, const std::string& colour) {
    const double y = kTop + 14 + 16 * slot;
    body_ << "<line x1=\"" << kLeft + 10 << "\" y1=\"" << y - 4 << "\" x2=\"" << kLeft + 30 << "\" y2=\"" << y - 4
          << "\" stroke=\"" << colour << "\"/><text x=\"" << kLeft + 36 << "\" y=\"" << y
          << "\" font-size=\"11\">" << escape(text) << "</text>\n";
  }

  std::string finish(const std::string& x_label, const std::string& y_label) const {
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    svg << "<line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n<line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
        << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double fx = x_.lo + (x_.hi - x_.lo) * t / 4.0, fy = y_.lo + (y_.hi - y_.lo) * t / 4.0;
      const double tx = x0 + (x1 - x0) * t / 4.0, ty = y0 - (y0 - y1) * t / 4.0;
      svg << "<text x=\"" << num(tx) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << num(x_.log ? std::pow(10.0, fx) : fx) << "</text>\n";
      svg << "<text x=\"" << x0 - 6 << "\" y=\"" << num(ty + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
          << num(y_.log ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    svg << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << escape(x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << (y0 + y1) / 2 << ")\">" << escape(y_label) << "</text>\n";
    svg << body_.str() << "</svg>\n";
    return svg.str();
  }

 private:
  static void pad(Axis& a) {
    if (a.log) {
      a.lo = std::log10(a.lo);
      a.hi = std::log10(a.hi);
    }
    if (a.hi <= a.lo) a.hi = a.lo + 1.0;
    const double margin = 0.05 * (a.hi - a.lo);
    a.lo -= margin;
    a.hi += margin;
  }

  Axis x_, y_;
  std::ostringstream body_;
};

json load_summary(const fs::path& input) {
  fs::path path = input;
  if (fs::is_directory(path)) path /= "summary.json";
  if (!fs::exists(path)) throw PlotError("plot: record not found: " + path.string());
  std::ifstream in(path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("kind")) {
    throw PlotError("plot: " + path.string() + " is not an experiment summary");
  }
  return doc;
}

void expect_kind(const json& summary, const std::string& record_kind, PlotKind plot) {
  const auto kind = summary.at("kind").get<std::string>();
  if (kind != record_kind) {
    throw PlotError("plot: record kind '" + kind + "' does not match plot kind '" + to_string(plot) + "'");
  }
}

std::string loglog_moments(const json& summary) {
  const json& points = summary.at("points");
  const json& fits = summary.at("fits");
  double xlo = std::numeric_limits<double>::max(), xhi = 0, ylo = std::numeric_limits<double>::max(), yhi = 0;
  for (const auto& pt : points) {
    xlo = std::min(xlo, pt.at("n").get<double>());
    xhi = std::max(xhi, pt.at("n").get<double>());
    for (const auto& m : pt.at("moments")) {
      const double v = m.at("value").get<double>();
      if (v > 0) {
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
      }
    }
  }
  if (yhi == 0) throw PlotError("plot: no positive moments to draw");
  Canvas canvas(Axis{xlo, xhi, true}, Axis{ylo / 1.5, yhi * 1.5, true}, "central moments of L against n");
  int legend = 0;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const double r = fits[k].at("r").get<double>();
    std::vector<double> log_n, log_m;
    for (const auto& pt : points) {
      const auto& m = pt.at("moments").at(k);
      const double v = m.at("value").get<double>();
      if (v <= 0) continue;
      canvas.marker(pt.at("n").get<double>(), v, "r=" + num(r));
      log_n.push_back(std::log(pt.at("n").get<double>()));
      log_m.push_back(std::log(v));
    }
    if (fits[k].at("slope").is_null() || log_n.empty()) continue;
    const double slope = fits[k].at("slope").get<double>();
    const double intercept = fits[k].at("intercept").get<double>();
    canvas.line("reference fit", xlo, std::exp(intercept + slope * std::log(xlo)), xhi,
                std::exp(intercept + slope * std::log(xhi)), "#1f77b4");
    // Target-slope guide through the centroid of the points.
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      cx += log_n[i] / log_n.size();
      cy += log_m[i] / log_n.size();
    }
    const double target = fits[k].at("target").get<double>();
    canvas.line("reference target", xlo, std::exp(cy + target * (std::log(xlo) - cx)), xhi,
                std::exp(cy + target * (std::log(xhi) - cx)), "#d62728", true);
    canvas.legend(legend++, "r=" + num(r) + " fit slope " + num(slope), "#1f77b4");
    canvas.legend(legend++, "r=" + num(r) + " target slope " + num(target), "#d62728");
  }
  return canvas.finish("n", "central moment");
}

std::string decay_curve(const json& summary) {
  const json& points = summary.at("points");
  double xlo = std::numeric_limits<double>::max(), xhi = 0, ylo = 1.0;
  for (const auto& pt : points) {
    xlo = std::min(xlo, pt.at("n").get<double>());
    xhi = std::max(xhi, pt.at("n").get<double>());
    const double trials = pt.at("trials").get<double>();
    ylo = std::min(ylo, pt.at("zero").get<bool>() ? 1.0 / trials : pt.at("ci_lo").get<double>());
    ylo = std::min(ylo, 1.0 / trials);
  }
  Canvas canvas(Axis{xlo, xhi, false}, Axis{ylo / 2, 1.0, true}, "P(M_n >= c1 n) against n");
  std::vector<double> xs, ys;
  for (const auto& pt : points) {
    const double n = pt.at("n").get<double>();
    if (pt.at("zero").get<bool>()) {
      canvas.upper_bound(n, 1.0 / pt.at("trials").get<double>(), pt.at("label").get<std::string>());
      continue;
    }
    canvas.marker(n, pt.at("frequency").get<double>());
    canvas.error_bar(n, std::max(pt.at("ci_lo").get<double>(), ylo / 2), pt.at("ci_hi").get<double>());
    xs.push_back(n);
    ys.push_back(pt.at("frequency").get<double>());
  }
  if (xs.size() >= 2) canvas.polyline("curve", xs, ys, "#1f77b4");
  return canvas.finish("n", "exceedance frequency");
}

std::string shape_curve(const json& summary) {
  const json& points = summary.at("points");
  const double p = summary.at("p").get<double>();
  double alo = 1, ahi = 0, glo = 1, ghi = 0;
  for (const auto& pt : points) {
    alo = std::min(alo, pt.at("a").get<double>());
    ahi = std::max(ahi, pt.at("a").get<double>());
    glo = std::min(glo, pt.at("g_hat").get<double>());
    ghi = std::max(ghi, std::max(pt.at("g_hat").get<double>(), pt.at("approximation").get<double>()));
  }
  Canvas canvas(Axis{0.0, ahi, false}, Axis{std::min(glo, p), std::max(ghi, p), false}, "hi-mode shape function");
  std::vector<double> xs, ys;
  for (int k = 0; k <= 100; ++k) {
    const double a = ahi * k / 100.0;
    xs.push_back(a);
    ys.push_back(p + 2.0 * std::sqrt(p * (1.0 - p) * a));
  }
  canvas.polyline("reference approximation", xs, ys, "#d62728");
  for (const auto& pt : points) {
    const double a = pt.at("a").get<double>(), g = pt.at("g_hat").get<double>(), se = pt.at("stderr").get<double>();
    canvas.marker(a, g, "n=" + std::to_string(pt.at("n").get<int>()));
    canvas.error_bar(a, g - 2 * se, g + 2 * se);
  }
  canvas.legend(0, "p + 2 sqrt(p(1-p)a)", "#d62728");
  return canvas.finish("aspect ratio a", "M / n");
}

std::string trajectory_plot(const TrajectoryTable& table) {
  if (table.k.empty()) throw PlotError("plot: empty trajectory table");
  const double first = std::stod(table.value("window_first"));
  const double last = std::stod(table.value("window_last"));
  const double kmax = table.k.back();
  const double lmax = *std::max_element(table.L.begin(), table.L.end());
  Canvas canvas(Axis{0.0, kmax, false}, Axis{0.0, std::max(lmax, 1.0), false}, "L(k) along the flip trajectory");
  canvas.band("window", first, last,
              "data-first=\"" + table.value("window_first") + "\" data-last=\"" + table.value("window_last") + "\"");
  canvas.polyline("trajectory", table.k, table.L, "#1f77b4");
  if (!table.M.empty()) canvas.polyline("hi-max", table.k, table.M, "#2ca02c");
  canvas.legend(0, "L(k)", "#1f77b4");
  canvas.legend(1, "M(k)", "#2ca02c");
  return canvas.finish("k (hi sites)", "passage time");
}

}  // namespace

std::optional<PlotKind> parse_plot_kind(const std::string& name) {
  if (name == "loglog_moments") return PlotKind::kLoglogMoments;
  if (name == "trajectory") return PlotKind::kTrajectory;
  if (name == "decay_curve") return PlotKind::kDecayCurve;
  if (name == "shape_curve") return PlotKind::kShapeCurve;
  return std::nullopt;
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::kLoglogMoments: return "loglog_moments";
    case PlotKind::kTrajectory: return "trajectory";
    case PlotKind::kDecayCurve: return "decay_curve";
    case PlotKind::kShapeCurve: return "shape_curve";
  }
  return "unknown";
}

void write_trajectory_table(std::ostream& out, const CoupledTrajectory& t, const LipschitzReport& report,
                            std::uint64_t seed) {
  const auto& c = report.constants;
  out << std::setprecision(17);
  out << "# kind=trajectory n=" << t.shape.cols << " rows=" << t.shape.rows << " sites=" << t.sites()
      << " p=" << t.model.p() << " seed=" << seed << " window_first=" << report.window.first
      << " window_last=" << report.window.last << " epsilon=" << c.epsilon << " c1=" << c.c1 << " c5=" << c.c5
      << " c_ell=" << c.c_ell << " gap=" << c.gap << " slope=" << c.slope << " on=" << (report.on_holds ? 1 : 0)
      << '\n';
  out << "k L M\n";
  for (std::size_t k = 0; k < t.L.size(); ++k) {
    out << k << ' ' << t.model.to_real(t.L[k]) << ' ';
    if (t.M.empty()) {
      out << "nan";
    } else {
      out << t.M[k];
    }
    out << '\n';
  }
}

std::string TrajectoryTable::value(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  throw PlotError("trajectory table: header has no '" + key + "'");
}

TrajectoryTable read_trajectory_table(std::istream& in) {
  TrajectoryTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw PlotError("trajectory table: missing '#' header");
  std::istringstream fields(line.substr(2));
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw PlotError("trajectory table: malformed header field '" + field + "'");
    table.header.emplace_back(field.substr(0, eq), field.substr(eq + 1));
  }
  if (table.value("kind") != "trajectory") throw PlotError("trajectory table: header kind is not 'trajectory'");
  std::getline(in, line);  // column names
  bool has_m = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double k = 0, L = 0;
    std::string m;
    if (!(row >> k >> L >> m)) throw PlotError("trajectory table: malformed row '" + line + "'");
    table.k.push_back(k);
    table.L.push_back(L);
    if (m == "nan") {
      has_m = false;
    } else {
      table.M.push_back(std::stod(m));
    }
  }
  if (!has_m) table.M.clear();
  return table;
}

std::string render_plot(PlotKind kind, const fs::path& input) {
  if (kind == PlotKind::kTrajectory) {
    fs::path path = input;
    if (fs::is_directory(path)) throw PlotError("plot: trajectory plots read a table from 'couple', not a record directory");
    if (!fs::exists(path)) throw PlotError("plot: record not found: " + path.string());
    std::ifstream in(path);
    if (in.peek() != '#') {
      const json doc = json::parse(in, nullptr, false);
      const std::string kind_name = doc.is_object() && doc.contains("kind") ? doc.at("kind").get<std::string>() : "unknown";
      throw PlotError("plot: record kind '" + kind_name + "' does not match plot kind 'trajectory'");
    }
    return trajectory_plot(read_trajectory_table(in));
  }
  const json summary = load_summary(input);
  switch (kind) {
    case PlotKind::kLoglogMoments:
      expect_kind(summary, "moment_scaling", kind);
      return loglog_moments(summary);
    case PlotKind::kDecayCurve:
      expect_kind(summary, "mn_growth", kind);
      return decay_curve(summary);
    case PlotKind::kShapeCurve:
      expect_kind(summary, "shape_curve", kind);
      return shape_curve(summary);
    case PlotKind::kTrajectory: break;
  }
  throw PlotError("plot: unsupported kind");
}

void make_plot(const PlotSpec& spec) {
  const std::string svg = render_plot(spec.kind, spec.input);
  std::ofstream out(spec.output, std::ios::binary | std::ios::trunc);
  if (!out) throw PlotError("plot: cannot open " + spec.output.string() + " for writing");
  out << svg;
  if (!out) throw PlotError("plot: write failed: " + spec.output.string());
}

}  // namespace dlpp
