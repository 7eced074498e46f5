#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "socd/eval/sweep.hpp"

namespace socd::eval {

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 150, kTop = 30, kBottom = 55;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string sweep_svg(const std::vector<SweepRow>& rows, Metric metric) {
  std::map<std::string, std::vector<const SweepRow*>> series;
  std::vector<std::string> order;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : rows) {
    const double m = metric == Metric::Throughput ? r.d_mean : r.e_mean;
    const double s = metric == Metric::Throughput ? r.d_std : r.e_std;
    if (!std::isfinite(m)) continue;
    if (!series.count(r.policy)) order.push_back(r.policy);
    series[r.policy].push_back(&r);
    x0 = std::min(x0, r.budget);
    x1 = std::max(x1, r.budget);
    y0 = std::min(y0, m - (std::isfinite(s) ? s : 0.0));
    y1 = std::max(y1, m + (std::isfinite(s) ? s : 0.0));
  }
  if (order.empty()) {
    x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  }
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  y0 = std::min(y0, 0.0);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    s << "<text x=\"" << px(xv) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">E_0</text>\n";
  s << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << kTop + ph / 2 << ")\">" << (metric == Metric::Throughput ? "throughput" : "resource consumption")
    << "</text>\n";
  for (std::size_t p = 0; p < order.size(); ++p) {
    const char* color = kColors[p % std::size(kColors)];
    auto pts = series[order[p]];
    std::sort(pts.begin(), pts.end(), [](const SweepRow* a, const SweepRow* b) { return a->budget < b->budget; });
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const SweepRow* r : pts) {
      s << px(r->budget) << ',' << py(metric == Metric::Throughput ? r->d_mean : r->e_mean) << ' ';
    }
    s << "\"/>\n";
    for (const SweepRow* r : pts) {
      const double m = metric == Metric::Throughput ? r->d_mean : r->e_mean;
      const double sd = metric == Metric::Throughput ? r->d_std : r->e_std;
      if (std::isfinite(sd) && sd > 0) {
        s << "<line x1=\"" << px(r->budget) << "\" y1=\"" << py(m - sd) << "\" x2=\"" << px(r->budget) << "\" y2=\""
          << py(m + sd) << "\" stroke=\"" << color << "\"/>\n";
      }
      s << "<circle cx=\"" << px(r->budget) << "\" cy=\"" << py(m) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * p;
    s << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kLeft + pw + 38 << "\" y=\"" << ly + 4 << "\">" << escape(order[p]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_sweep_svg(const std::string& path, const std::vector<SweepRow>& rows, Metric metric) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << sweep_svg(rows, metric);
}

}  // namespace socd::eval
