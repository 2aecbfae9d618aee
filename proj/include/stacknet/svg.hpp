#pragma once

#include <string>
#include <vector>

namespace stacknet {

// One plotted series: a polyline, or scatter dots when points_only.
struct Series {
  std::vector<double> x, y;
  std::string label;
  std::string color;  // empty = pick from the palette
  bool points_only = false;
};

struct SvgOptions {
  int width = 720;
  int height = 480;
  std::string title;
};

// Standalone SVG line/scatter chart; no external renderer involved. Output
// bytes are a deterministic function of the inputs. Axes cover the data
// range with a 5% margin on each side.
void emit_svg(const std::vector<Series>& series, const std::string& path,
              const SvgOptions& opt = {});
std::string render_svg(const std::vector<Series>& series, const SvgOptions& opt = {});

}  // namespace stacknet
