#include "stacknet/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stacknet {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v, int precision = 2) {
  if (!std::isfinite(v)) v = 0.0;
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

std::string fmt_tick(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const SvgOptions& opt) {
  const double ml = 60, mr = 16, mt = opt.title.empty() ? 16 : 34, mb = 40;
  const double pw = opt.width - ml - mr;
  const double ph = opt.height - mt - mb;

  bool any = false;
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        any = true;
      } else {
        xlo = std::min(xlo, s.x[i]);
        xhi = std::max(xhi, s.x[i]);
        ylo = std::min(ylo, s.y[i]);
        yhi = std::max(yhi, s.y[i]);
      }
    }
  auto widen = [](double& lo, double& hi) {
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1.0, std::abs(hi));
    lo -= 0.05 * span;
    hi += 0.05 * span;
  };
  widen(xlo, xhi);
  widen(ylo, yhi);

  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * pw; };
  auto py = [&](double y) { return mt + ph - (y - ylo) / (yhi - ylo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
     << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  os << "<rect width=\"" << opt.width << "\" height=\"" << opt.height
     << "\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    os << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"14\">"
       << opt.title << "</text>\n";

  // frame + ticks
  os << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
     << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  const int nticks = 5;
  for (int t = 0; t <= nticks; ++t) {
    const double fx = xlo + (xhi - xlo) * t / nticks;
    const double fy = ylo + (yhi - ylo) * t / nticks;
    os << "<line x1=\"" << fmt(px(fx)) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\""
       << fmt(px(fx)) << "\" y2=\"" << fmt(mt + ph + 5) << "\" stroke=\"#333333\"/>\n";
    os << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << fmt(mt + ph + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << fmt_tick(fx) << "</text>\n";
    os << "<line x1=\"" << fmt(ml - 5) << "\" y1=\"" << fmt(py(fy)) << "\" x2=\"" << fmt(ml)
       << "\" y2=\"" << fmt(py(fy)) << "\" stroke=\"#333333\"/>\n";
    os << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(py(fy) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << fmt_tick(fy) << "</text>\n";
  }

  std::size_t color_idx = 0;
  double legend_y = mt + 14;
  for (const auto& s : series) {
    const std::string color =
        s.color.empty() ? kPalette[color_idx % (sizeof(kPalette) / sizeof(kPalette[0]))]
                        : s.color;
    ++color_idx;
    const std::size_t npts = std::min(s.x.size(), s.y.size());
    if (s.points_only) {
      for (std::size_t i = 0; i < npts; ++i)
        os << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i]))
           << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    } else if (npts > 0) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < npts; ++i) {
        if (i) os << ' ';
        os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
      }
      os << "\"/>\n";
    }
    if (!s.label.empty()) {
      os << "<rect x=\"" << fmt(ml + pw - 150) << "\" y=\"" << fmt(legend_y - 8)
         << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
      os << "<text x=\"" << fmt(ml + pw - 136) << "\" y=\"" << fmt(legend_y + 1)
         << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
      legend_y += 15;
    }
  }
  os << "</svg>\n";
  return os.str();
}

void emit_svg(const std::vector<Series>& series, const std::string& path,
              const SvgOptions& opt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << render_svg(series, opt);
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace stacknet
