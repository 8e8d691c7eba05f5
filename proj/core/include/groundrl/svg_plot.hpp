#pragma once

#include <string>
#include <vector>

namespace groundrl {

struct Series {
  std::string label;
  std::vector<double> values;
};

// Minimal static line chart (x = index) as a standalone SVG document.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::vector<Series>& series);

}  // namespace groundrl
