// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "tivgan/cli/commands.hpp"
#include "tivgan/errors.hpp"

namespace tivgan::cli {

namespace {

struct Series {
  std::vector<double> x, y;
};

// Trailing moving average so thousands of noisy iterations stay readable.
std::vector<double> smooth(const std::vector<double>& y, std::size_t window) {
  std::vector<double> out(y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    acc += y[i];
    if (i >= window) acc -= y[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace

void write_loss_svg(const fs::path& metrics_tsv, const fs::path& svg) {
  std::ifstream in(metrics_tsv);
  if (!in) throw FormatError("cannot read metrics log " + metrics_tsv.string());
  std::map<std::string, Series> series;
  std::vector<std::pair<double, std::string>> boundaries;
  std::string line, last_stage;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) f.push_back(c);
    if (f.size() < 10) continue;
    const double it = std::stod(f[0]);
    // Discriminators minimize the negated objective; plot that loss.
    series[f[2]].x.push_back(it);
    series[f[2]].y.push_back(-std::stod(f[8]));
    if (f[1] != last_stage) {
      if (!last_stage.empty()) boundaries.emplace_back(it, f[1]);
      last_stage = f[1];
    }
  }
  if (series.empty()) throw FormatError("metrics log " + metrics_tsv.string() + " has no rows");

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (auto& [name, s] : series) {
    s.y = smooth(s.y, std::max<std::size_t>(1, s.y.size() / 100));
    x0 = std::min(x0, s.x.front());
    x1 = std::max(x1, s.x.back());
    for (double v : s.y) {
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  constexpr double W = 800, H = 400, L = 60, R = 20, T = 20, B = 40;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return T + (y1 - y) / (y1 - y0) * (H - T - B); };

  std::ofstream out(svg);
  if (!out) throw FormatError("cannot write " + svg.string());
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf), "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n", L - 4, T + 10, y1);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n", L - 4, H - B, y0);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%g\" font-size=\"11\">%.0f</text>\n", L, H - B + 15, x0);
  out << buf;
  std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.0f iterations</text>\n", W - R, H - B + 15, x1);
  out << buf;
  for (const auto& [x, stage] : boundaries) {
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%g\" x2=\"%.1f\" y2=\"%g\" stroke=\"#aaa\" stroke-dasharray=\"4 3\"/>"
                  "<text x=\"%.1f\" y=\"%g\" font-size=\"10\" fill=\"#666\">%s</text>\n",
                  px(x), T, px(x), H - B, px(x) + 2, T + 10, stage.c_str());
    out << buf;
  }
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  int k = 0;
  for (const auto& [name, s] : series) {
    const char* color = colors[k % 6];
    out << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(s.x[i]), py(s.y[i]));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof(buf), "<text x=\"%g\" y=\"%d\" font-size=\"12\" fill=\"%s\">%s loss</text>\n", W - R - 90,
                  static_cast<int>(T) + 14 * (k + 1), color, name.c_str());
    out << buf;
    ++k;
  }
  out << "</svg>\n";
}

}  // namespace tivgan::cli
