#include "gkreg/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gkreg {

PlotKind plot_kind_from_name(const std::string& name) {
  if (name == "re_vs_t") return PlotKind::ReVsT;
  if (name == "rho") return PlotKind::Rho;
  if (name == "spectrum") return PlotKind::Spectrum;
  if (name == "objective") return PlotKind::Objective;
  throw std::invalid_argument("unknown plot kind: " + name);
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    throw std::invalid_argument("plot: missing required column '" + name + "'");
  }
};

Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("plot: cannot open " + path);
  Table t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  };
  if (!std::getline(is, line)) throw std::runtime_error("plot: empty csv");
  t.header = split(line);
  while (std::getline(is, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

// Minimal deterministic line chart.
class SvgChart {
 public:
  SvgChart(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void add_series(Series s) { series_.push_back(std::move(s)); }
  void add_vline(double x, const std::string& label, const std::string& dash) {
    vlines_.push_back({x, label, dash});
  }

  void render(std::ostream& os) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series_)
      for (auto [x, y] : s.pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    for (const auto& v : vlines_) {
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
    }
    if (xmin > xmax) {
      xmin = 0;
      xmax = 1;
    }
    if (ymin > ymax) {
      ymin = 0;
      ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto X = [&](double x) { return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR); };
    auto Y = [&](double y) { return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB); };

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
       << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
       << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\""
       << " font-size=\"14\">" << title_ << "</text>\n";

    // frame
    os << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << (kW - kL - kR)
       << "\" height=\"" << (kH - kT - kB)
       << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    for (double tx : ticks(xmin, xmax)) {
      os << "<line x1=\"" << fmt(X(tx)) << "\" y1=\"" << (kH - kB) << "\" x2=\"" << fmt(X(tx))
         << "\" y2=\"" << (kH - kB + 5) << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << fmt(X(tx)) << "\" y=\"" << (kH - kB + 18)
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
         << tick_label(tx) << "</text>\n";
    }
    for (double ty : ticks(ymin, ymax)) {
      os << "<line x1=\"" << (kL - 5) << "\" y1=\"" << fmt(Y(ty)) << "\" x2=\"" << kL
         << "\" y2=\"" << fmt(Y(ty)) << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << (kL - 8) << "\" y=\"" << fmt(Y(ty) + 4)
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
         << tick_label(ty) << "</text>\n";
    }
    os << "<text x=\"" << (kL + (kW - kL - kR) / 2) << "\" y=\"" << (kH - 12)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel_
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << (kT + (kH - kT - kB) / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
       << " transform=\"rotate(-90 16 " << (kT + (kH - kT - kB) / 2) << ")\">" << ylabel_
       << "</text>\n";

    for (const auto& v : vlines_) {
      os << "<line x1=\"" << fmt(X(v.x)) << "\" y1=\"" << kT << "\" x2=\"" << fmt(X(v.x))
         << "\" y2=\"" << (kH - kB) << "\" stroke=\"#444444\" stroke-width=\"1\""
         << " stroke-dasharray=\"" << v.dash << "\"/>\n";
      os << "<text x=\"" << fmt(X(v.x) + 3) << "\" y=\"" << (kT + 12)
         << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\">" << v.label
         << "</text>\n";
    }

    for (std::size_t i = 0; i < series_.size(); ++i) {
      const char* color = kPalette[i % (sizeof kPalette / sizeof *kPalette)];
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (auto [x, y] : series_[i].pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if (!first) os << ' ';
        os << fmt(X(x)) << ',' << fmt(Y(y));
        first = false;
      }
      os << "\"/>\n";
      if (!series_[i].label.empty()) {
        const double ly = kT + 16.0 + 14.0 * double(i);
        os << "<line x1=\"" << (kW - kR - 110) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
           << (kW - kR - 90) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << (kW - kR - 85) << "\" y=\"" << fmt(ly)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << series_[i].label
           << "</text>\n";
      }
    }
    os << "</svg>\n";
  }

 private:
  struct VLine {
    double x;
    std::string label;
    std::string dash;
  };

  static std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0})
      if (mag * mult >= raw) {
        step = mag * mult;
        break;
      }
    std::vector<double> out;
    double t = std::ceil(lo / step) * step;
    for (; t <= hi + 1e-12 * span; t += step) out.push_back(t == 0 ? 0.0 : t);
    return out;
  }

  static std::string tick_label(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", v);
    return b;
  }

  static constexpr int kW = 800, kH = 560, kL = 70, kR = 20, kT = 30, kB = 50;
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
  std::vector<VLine> vlines_;
};

void plot_re_vs_t(const Table& tb, SvgChart& chart) {
  const int c_method = tb.col("method"), c_t = tb.col("t"), c_re = tb.col("re");
  const int c_k = tb.col("k");
  // mean re per (method, t) over samples, in first-appearance method order
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (const auto& r : tb.rows) {
    if (std::stoi(r[std::size_t(c_k)]) != 0) continue;
    const double re = std::stod(r[std::size_t(c_re)]);
    if (re < 0) continue;
    const std::string& m = r[std::size_t(c_method)];
    if (!acc.count(m)) order.push_back(m);
    auto& slot = acc[m][std::stod(r[std::size_t(c_t)])];
    slot.first += re;
    slot.second += 1;
  }
  for (const auto& m : order) {
    Series s;
    s.label = m;
    for (const auto& [t, p] : acc[m]) s.pts.emplace_back(t, p.first / p.second);
    chart.add_series(std::move(s));
  }
}

void plot_rho(const Table& tb, SvgChart& chart) {
  const int c_c = tb.col("c"), c_t = tb.col("t"), c_rho = tb.col("rho_log10");
  const int c_r = tb.col("t_opt_rho"), c_m = tb.col("t_opt_min"), c_g = tb.col("t_opt_g");
  std::map<int, Series> by_sample;
  double mr = 0, mm = 0, mg = 0;
  std::map<int, bool> seen;
  for (const auto& r : tb.rows) {
    const int c = std::stoi(r[std::size_t(c_c)]);
    by_sample[c].pts.emplace_back(std::stod(r[std::size_t(c_t)]),
                                  std::stod(r[std::size_t(c_rho)]));
    if (!seen[c]) {
      seen[c] = true;
      mr += std::stod(r[std::size_t(c_r)]);
      mm += std::stod(r[std::size_t(c_m)]);
      mg += std::stod(r[std::size_t(c_g)]);
    }
  }
  const double n = std::max<std::size_t>(seen.size(), 1);
  for (auto& [c, s] : by_sample) chart.add_series(std::move(s));
  chart.add_vline(mr / n, "t_opt-rho", "6,3");
  chart.add_vline(mm / n, "t_opt-min", "1,2");
  chart.add_vline(mg / n, "t_opt-G", "3,3");
}

void plot_spectrum(const Table& tb, SvgChart& chart) {
  const int c_s = tb.col("series"), c_i = tb.col("index"), c_v = tb.col("value");
  std::vector<std::string> order;
  std::map<std::string, Series> by_series;
  for (const auto& r : tb.rows) {
    const std::string& name = r[std::size_t(c_s)];
    if (!by_series.count(name)) {
      order.push_back(name);
      by_series[name].label = name;
    }
    const double v = std::stod(r[std::size_t(c_v)]);
    by_series[name].pts.emplace_back(std::stod(r[std::size_t(c_i)]),
                                     v > 0 ? std::log10(v) : -18.0);
  }
  for (const auto& name : order) chart.add_series(std::move(by_series[name]));
}

void plot_objective(const Table& tb, SvgChart& chart) {
  const int c_m = tb.col("method"), c_z = tb.col("zeta"), c_v = tb.col("value");
  std::vector<std::string> order;
  std::map<std::string, Series> by_m;
  for (const auto& r : tb.rows) {
    const std::string& name = r[std::size_t(c_m)];
    if (!by_m.count(name)) {
      order.push_back(name);
      by_m[name].label = name;
    }
    by_m[name].pts.emplace_back(std::log10(std::stod(r[std::size_t(c_z)])),
                                std::stod(r[std::size_t(c_v)]));
  }
  for (const auto& name : order) chart.add_series(std::move(by_m[name]));
}

}  // namespace

void emit_plot(const std::string& csv_path, PlotKind kind, const std::string& out_path) {
  const Table tb = read_table(csv_path);
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw std::runtime_error("plot: cannot open " + out_path);
  switch (kind) {
    case PlotKind::ReVsT: {
      SvgChart chart("average relative error vs subspace size", "t", "RE");
      plot_re_vs_t(tb, chart);
      chart.render(os);
      break;
    }
    case PlotKind::Rho: {
      SvgChart chart("noise-revealing cumulative ratio", "t", "log10 rho(t)");
      plot_rho(tb, chart);
      chart.render(os);
      break;
    }
    case PlotKind::Spectrum: {
      SvgChart chart("singular value spectra", "index", "log10 value");
      plot_spectrum(tb, chart);
      chart.render(os);
      break;
    }
    case PlotKind::Objective: {
      SvgChart chart("parameter-selection objectives", "log10 zeta", "objective");
      plot_objective(tb, chart);
      chart.render(os);
      break;
    }
  }
  if (!os) throw std::runtime_error("plot: write failed");
}

}  // namespace gkreg
