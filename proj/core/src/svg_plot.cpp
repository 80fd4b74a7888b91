#include "lpforge/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lpforge::io {

namespace {

constexpr double kWidth = 900.0;
constexpr double kPanelHeight = 300.0;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 160.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 40.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Series {
  const char* label;
  const char* color;
  std::vector<double> y;
};

void draw_panel(std::ostringstream& os, double y_offset, const char* title,
                const std::vector<double>& xs, const std::vector<Series>& series, double y_lo,
                double y_hi) {
  double plot_w = kWidth - kMarginLeft - kMarginRight;
  double plot_h = kPanelHeight - kMarginTop - kMarginBottom;
  double x_lo = xs.front(), x_hi = xs.back();
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;

  auto px = [&](double x) { return kMarginLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) {
    return y_offset + kMarginTop + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;
  };

  os << "<rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(y_offset + kMarginTop) << "\" width=\""
     << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
     << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  os << "<text x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(y_offset + kMarginTop - 8)
     << "\" font-family=\"sans-serif\" font-size=\"14\" fill=\"#000000\">" << title << "</text>\n";

  // y ticks
  for (int t = 0; t <= 4; ++t) {
    double yv = y_lo + (y_hi - y_lo) * t / 4.0;
    double yy = py(yv);
    os << "<line x1=\"" << fmt(kMarginLeft - 4) << "\" y1=\"" << fmt(yy) << "\" x2=\""
       << fmt(kMarginLeft) << "\" y2=\"" << fmt(yy) << "\" stroke=\"#444444\"/>\n";
    os << "<text x=\"" << fmt(kMarginLeft - 8) << "\" y=\"" << fmt(yy + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt(yv)
       << "</text>\n";
  }
  // x ticks (at most 10)
  std::size_t stride = std::max<std::size_t>(1, xs.size() / 10);
  for (std::size_t i = 0; i < xs.size(); i += stride) {
    double xx = px(xs[i]);
    double base = y_offset + kMarginTop + plot_h;
    os << "<line x1=\"" << fmt(xx) << "\" y1=\"" << fmt(base) << "\" x2=\"" << fmt(xx)
       << "\" y2=\"" << fmt(base + 4) << "\" stroke=\"#444444\"/>\n";
    os << "<text x=\"" << fmt(xx) << "\" y=\"" << fmt(base + 16)
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt(xs[i])
       << "</text>\n";
  }
  os << "<text x=\"" << fmt(kMarginLeft + plot_w / 2)
     << "\" y=\"" << fmt(y_offset + kPanelHeight - 6)
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">epoch</text>\n";

  double legend_y = y_offset + kMarginTop + 10;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double yv = std::clamp(s.y[i], y_lo, y_hi);
      os << fmt(px(xs[i])) << ',' << fmt(py(yv)) << ' ';
    }
    os << "\"/>\n";
    double lx = kWidth - kMarginRight + 12;
    os << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(legend_y) << "\" x2=\"" << fmt(lx + 22)
       << "\" y2=\"" << fmt(legend_y) << "\" stroke=\"" << s.color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(lx + 28) << "\" y=\"" << fmt(legend_y + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    legend_y += 18;
  }
}

}  // namespace

std::string render_records_svg(const std::vector<train::TrainRecord>& records) {
  if (records.empty()) throw std::invalid_argument("render_records_svg: no records");

  std::vector<double> xs;
  xs.reserve(records.size());
  for (const auto& r : records) xs.push_back(static_cast<double>(r.epoch));

  std::vector<Series> acc{
      {"clean", "#000000", {}}, {"fgsm", "#1f77b4", {}},
      {"pgd_linf", "#d62728", {}}, {"pgd_l2", "#ff7f0e", {}}};
  std::vector<Series> conc{
      {"pr1 / d", "#2ca02c", {}}, {"cos2inf", "#9467bd", {}}, {"q_star - 1", "#8c564b", {}}};

  double max_pr1 = 0.0;
  for (const auto& r : records) max_pr1 = std::max(max_pr1, r.mean_pr1);
  // pr1 is normalised by the largest observed value when d is unknown here;
  // the telemetry identity tests pin the exact values, this is just a chart
  double pr1_scale = max_pr1 > 0.0 ? max_pr1 : 1.0;

  for (const auto& r : records) {
    acc[0].y.push_back(r.clean_acc);
    acc[1].y.push_back(r.fgsm_acc);
    acc[2].y.push_back(r.pgd_linf_acc);
    acc[3].y.push_back(r.pgd_l2_acc);
    conc[0].y.push_back(r.mean_pr1 / pr1_scale);
    conc[1].y.push_back(r.mean_cos2inf);
    conc[2].y.push_back(r.median_q_star - 1.0);
  }

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(kWidth)
     << "\" height=\"" << fmt(2 * kPanelHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' '
     << fmt(2 * kPanelHeight) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  draw_panel(os, 0.0, "accuracy", xs, acc, 0.0, 1.0);
  draw_panel(os, kPanelHeight, "gradient concentration", xs, conc, 0.0, 1.0);
  os << "</svg>\n";
  return os.str();
}

void write_records_svg(const std::vector<train::TrainRecord>& records, const std::string& path) {
  std::string svg = render_records_svg(records);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_records_svg: cannot open " + path);
  os << svg;
  if (!os) throw std::runtime_error("write_records_svg: write failed " + path);
}

}  // namespace lpforge::io
