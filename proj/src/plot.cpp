#include "weaksde/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "weaksde/csv.hpp"
#include "weaksde/errors.hpp"

namespace weaksde {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Frame {
  double x0, x1, y0, y1;  // data range
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

CsvTable load_checked(const std::filesystem::path& p, PlotKind kind) {
  CsvTable t;
  try {
    t = read_csv(p);
  } catch (const Error& e) {
    throw SpecError(std::string(e.what()) + "; expected columns: " + join(expected_columns(kind)));
  }
  if (t.header != expected_columns(kind))
    throw SpecError(p.string() + " does not match the " + to_string(kind) + " schema; expected columns: " +
                    join(expected_columns(kind)) + "; found: " + join(t.header));
  if (t.rows.empty())
    throw SpecError(p.string() + " has no data rows; expected columns: " + join(expected_columns(kind)));
  return t;
}

void nice_pad(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

void axes(std::ostream& os, const Frame& f, const std::string& xlabel, const std::string& ylabel,
          const std::vector<double>& xt, const std::vector<std::string>& xl, const std::vector<double>& yt,
          const std::vector<std::string>& yl) {
  const double bx = f.py(f.y0), lx = f.px(f.x0);
  os << "<g class=\"axes\" stroke=\"#000\" fill=\"none\">\n";
  os << "<line x1=\"" << lx << "\" y1=\"" << bx << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << bx << "\"/>\n";
  os << "<line x1=\"" << lx << "\" y1=\"" << bx << "\" x2=\"" << lx << "\" y2=\"" << kTop << "\"/>\n";
  for (double t : xt) os << "<line x1=\"" << f.px(t) << "\" y1=\"" << bx << "\" x2=\"" << f.px(t) << "\" y2=\"" << bx + 5 << "\"/>\n";
  for (double t : yt) os << "<line x1=\"" << lx - 5 << "\" y1=\"" << f.py(t) << "\" x2=\"" << lx << "\" y2=\"" << f.py(t) << "\"/>\n";
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#000\">\n";
  for (std::size_t i = 0; i < xt.size(); ++i)
    os << "<text x=\"" << f.px(xt[i]) << "\" y=\"" << bx + 18 << "\" text-anchor=\"middle\">" << esc(xl[i]) << "</text>\n";
  for (std::size_t i = 0; i < yt.size(); ++i)
    os << "<text x=\"" << lx - 8 << "\" y=\"" << f.py(yt[i]) + 4 << "\" text-anchor=\"end\">" << esc(yl[i]) << "</text>\n";
  os << "<text x=\"" << (lx + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
     << esc(xlabel) << "</text>\n";
  os << "<text transform=\"translate(16," << (kTop + bx) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << esc(ylabel) << "</text>\n</g>\n";
}

void legend(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& entries) {
  os << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  double y = kTop + 8;
  for (const auto& [name, color] : entries) {
    os << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\""
       << color << "\"/><text x=\"" << kWidth - kRight - 135 << "\" y=\"" << y + 1 << "\">" << esc(name)
       << "</text>\n";
    y += 16;
  }
  os << "</g>\n";
}

std::vector<double> decade_ticks(double lo, double hi) {
  std::vector<double> t;
  for (double d = std::ceil(lo); d <= std::floor(hi) + 1e-12; d += 1.0) t.push_back(d);
  if (t.size() < 2) t = {lo, hi};
  return t;
}

std::vector<double> linear_ticks(double lo, double hi) {
  std::vector<double> t;
  for (int i = 0; i <= 5; ++i) t.push_back(lo + (hi - lo) * i / 5.0);
  return t;
}

std::string loglog_svg(const std::vector<std::filesystem::path>& csvs, const std::vector<CsvTable>& tables) {
  struct Series {
    std::string name;
    std::vector<double> lx, ly;
  };
  std::vector<Series> series;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t s = 0; s < tables.size(); ++s) {
    Series ser{csvs[s].stem().string(), {}, {}};
    const auto eps = tables[s].numeric_column("eps");
    const auto err = tables[s].numeric_column("error");
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!(eps[i] > 0.0) || !(err[i] > 0.0)) continue;
      ser.lx.push_back(std::log10(eps[i]));
      ser.ly.push_back(std::log10(err[i]));
    }
    if (ser.lx.empty()) throw SpecError(csvs[s].string() + " has no positive (eps, error) pairs to plot on log axes");
    for (double v : ser.lx) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : ser.ly) y0 = std::min(y0, v), y1 = std::max(y1, v);
    series.push_back(std::move(ser));
  }
  // slope-1 guide through the centroid of the first series
  double c = 0.0;
  for (std::size_t i = 0; i < series[0].lx.size(); ++i) c += series[0].ly[i] - series[0].lx[i];
  c /= static_cast<double>(series[0].lx.size());
  y0 = std::min(y0, x0 + c);
  y1 = std::max(y1, x1 + c);
  nice_pad(x0, x1);
  nice_pad(y0, y1);
  const double px = 0.05 * (x1 - x0), py = 0.08 * (y1 - y0);
  Frame f{x0 - px, x1 + px, y0 - py, y1 + py};

  std::ostringstream os;
  const auto xt = decade_ticks(f.x0, f.x1), yt = decade_ticks(f.y0, f.y1);
  std::vector<std::string> xl, yl;
  for (double t : xt) xl.push_back(num(std::pow(10.0, t)));
  for (double t : yt) yl.push_back(num(std::pow(10.0, t)));
  axes(os, f, "step size eps", "weak error", xt, xl, yt, yl);
  os << "<line class=\"guide\" stroke=\"#888\" stroke-dasharray=\"5,4\" x1=\"" << f.px(f.x0) << "\" y1=\""
     << f.py(f.x0 + c) << "\" x2=\"" << f.px(f.x1) << "\" y2=\"" << f.py(f.x1 + c) << "\"/>\n";
  std::vector<std::pair<std::string, std::string>> entries;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const std::string color = kColors[s % std::size(kColors)];
    const auto& ser = series[s];
    os << "<g class=\"series\" data-name=\"" << esc(ser.name) << "\">\n<polyline fill=\"none\" stroke=\"" << color
       << "\" points=\"";
    for (std::size_t i = 0; i < ser.lx.size(); ++i) os << (i ? " " : "") << f.px(ser.lx[i]) << "," << f.py(ser.ly[i]);
    os << "\"/>\n";
    for (std::size_t i = 0; i < ser.lx.size(); ++i)
      os << "<circle class=\"marker\" r=\"4\" fill=\"" << color << "\" cx=\"" << f.px(ser.lx[i]) << "\" cy=\""
         << f.py(ser.ly[i]) << "\"/>\n";
    os << "</g>\n";
    entries.emplace_back(ser.name, color);
  }
  entries.emplace_back("slope 1", "#888");
  legend(os, entries);
  return os.str();
}

std::string hist_svg(const CsvTable& t) {
  const auto lo = t.numeric_column("bin_left"), hi = t.numeric_column("bin_right");
  const auto hd = t.numeric_column("hist_density"), ad = t.numeric_column("analytic_density");
  double ymax = 0.0;
  for (std::size_t i = 0; i < hd.size(); ++i) ymax = std::max({ymax, hd[i], ad[i]});
  if (!(ymax > 0.0)) ymax = 1.0;
  Frame f{lo.front(), hi.back(), 0.0, ymax * 1.1};
  if (!(f.x1 > f.x0)) throw SpecError("histogram bins are not increasing");
  std::ostringstream os;
  const auto xt = linear_ticks(f.x0, f.x1), yt = linear_ticks(f.y0, f.y1);
  std::vector<std::string> xl, yl;
  for (double v : xt) xl.push_back(num(v));
  for (double v : yt) yl.push_back(num(v));
  axes(os, f, "theta", "density", xt, xl, yt, yl);
  os << "<g class=\"bars\" fill=\"" << kColors[0] << "\" fill-opacity=\"0.5\">\n";
  for (std::size_t i = 0; i < lo.size(); ++i)
    os << "<rect x=\"" << f.px(lo[i]) << "\" y=\"" << f.py(hd[i]) << "\" width=\"" << f.px(hi[i]) - f.px(lo[i])
       << "\" height=\"" << f.py(0.0) - f.py(hd[i]) << "\"/>\n";
  os << "</g>\n<polyline class=\"density\" fill=\"none\" stroke=\"" << kColors[1] << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < lo.size(); ++i) os << (i ? " " : "") << f.px(0.5 * (lo[i] + hi[i])) << "," << f.py(ad[i]);
  os << "\"/>\n";
  legend(os, {{"histogram", kColors[0]}, {"analytic density", kColors[1]}});
  return os.str();
}

}  // namespace

PlotKind plot_kind_from_string(const std::string& name) {
  if (name == "loglog_error") return PlotKind::LoglogError;
  if (name == "hist_vs_density") return PlotKind::HistVsDensity;
  throw SpecError("unknown plot kind '" + name + "' (expected loglog_error or hist_vs_density)");
}

std::string to_string(PlotKind kind) {
  return kind == PlotKind::LoglogError ? "loglog_error" : "hist_vs_density";
}

const std::vector<std::string>& expected_columns(PlotKind kind) {
  static const std::vector<std::string> err{"eps", "error", "std_error", "n_paths"};
  static const std::vector<std::string> hist{"bin_left", "bin_right", "hist_density", "analytic_density"};
  return kind == PlotKind::LoglogError ? err : hist;
}

std::filesystem::path emit_plot(const std::vector<std::filesystem::path>& csvs, PlotKind kind,
                                const std::optional<std::filesystem::path>& out) {
  if (csvs.empty()) throw SpecError("no CSV given");
  if (kind == PlotKind::HistVsDensity && csvs.size() != 1) throw SpecError("hist_vs_density takes exactly one CSV");
  std::vector<CsvTable> tables;
  for (const auto& p : csvs) tables.push_back(load_checked(p, kind));

  const std::string body = kind == PlotKind::LoglogError ? loglog_svg(csvs, tables) : hist_svg(tables[0]);
  std::filesystem::path target = out ? *out : std::filesystem::path(csvs[0]).replace_extension(".svg");
  std::ofstream os(target, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + target.string() + " for writing");
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
     << body << "</svg>\n";
  os.close();
  if (os.fail()) throw Error("failed writing " + target.string());
  return target;
}

}  // namespace weaksde
