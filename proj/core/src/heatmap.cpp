#include "groundrl/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "groundrl/errors.hpp"

namespace groundrl {

HeatmapDoc make_heatmap(std::span<const std::string> tokens, std::span<const double> eps,
                        std::optional<double> absolute_scale) {
  if (tokens.size() != eps.size()) {
    throw ConfigError("heatmap: " + std::to_string(tokens.size()) + " tokens but " + std::to_string(eps.size()) +
                      " scores");
  }
  if (absolute_scale && !(*absolute_scale > 0.0)) throw ConfigError("heatmap: absolute scale must be > 0");
  HeatmapDoc doc;
  doc.tokens.assign(tokens.begin(), tokens.end());
  doc.eps.assign(eps.begin(), eps.end());
  double scale = 0.0;
  if (absolute_scale) {
    scale = *absolute_scale;
  } else {
    for (double e : eps) scale = std::max(scale, std::abs(e));
  }
  doc.intensity.resize(eps.size(), 0.0);
  if (scale > 0.0) {
    for (std::size_t t = 0; t < eps.size(); ++t) doc.intensity[t] = std::min(1.0, std::abs(eps[t]) / scale);
  }
  return doc;
}

int intensity_level(double intensity) {
  const double clamped = std::clamp(intensity, 0.0, 1.0);
  return static_cast<int>(std::lround(clamped * (kIntensityLevels - 1)));
}

Rgb heat_color(double eps, int level) {
  // Light-to-dark shade within one hue family; level 0 keeps a faint tint so
  // the sign stays readable even for tiny scores.
  const int strong = 235 - (level * 200) / (kIntensityLevels - 1);
  const int weak = 255 - (level * 95) / (kIntensityLevels - 1);
  if (eps > 0.0) return {strong, weak, strong};   // green family
  if (eps < 0.0) return {weak, strong, strong};   // red family
  return {255, 255, 255};
}

namespace {

std::string signed_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.3f", v);
  return buf;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_heatmap(const HeatmapDoc& doc, HeatmapFormat format) {
  if (doc.tokens.size() != doc.eps.size() || doc.eps.size() != doc.intensity.size()) {
    throw ConfigError("heatmap: inconsistent document lengths");
  }
  std::ostringstream os;
  switch (format) {
    case HeatmapFormat::Plain:
      for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
        if (t > 0) os << ' ';
        os << doc.tokens[t] << '[' << signed_score(doc.eps[t]) << ']';
      }
      os << '\n';
      break;
    case HeatmapFormat::Ansi:
      for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
        if (t > 0) os << ' ';
        const Rgb c = heat_color(doc.eps[t], intensity_level(doc.intensity[t]));
        const bool dark = c.r + c.g + c.b < 450;
        os << "\x1b[48;2;" << c.r << ';' << c.g << ';' << c.b << 'm' << (dark ? "\x1b[97m" : "\x1b[30m")
           << doc.tokens[t] << "\x1b[0m";
      }
      os << '\n';
      break;
    case HeatmapFormat::Html: {
      os << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Evidential contribution</title>\n"
         << "<style>body{font-family:monospace;line-height:2}"
         << ".tok{padding:2px 4px;margin:1px;border-radius:3px}"
         << ".pos{border-bottom:2px solid #1b7a1b}.neg{border-bottom:2px solid #a01b1b}"
         << ".zero{border-bottom:2px solid #bbb}</style></head><body>\n<p>\n";
      for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
        const int level = intensity_level(doc.intensity[t]);
        const Rgb c = heat_color(doc.eps[t], level);
        const char* cls = doc.eps[t] > 0.0 ? "pos" : (doc.eps[t] < 0.0 ? "neg" : "zero");
        os << "<span class=\"tok " << cls << "\" data-level=\"" << level << "\" style=\"background:rgb(" << c.r
           << ',' << c.g << ',' << c.b << ')' << (c.r + c.g + c.b < 450 ? ";color:#fff" : "") << "\" title=\"eps="
           << signed_score(doc.eps[t]) << "\">" << html_escape(doc.tokens[t]) << "</span>\n";
      }
      os << "</p>\n</body></html>\n";
      break;
    }
  }
  return os.str();
}

std::string render_heatmap(std::span<const std::string> tokens, std::span<const double> eps,
                           HeatmapFormat format) {
  return render_heatmap(make_heatmap(tokens, eps), format);
}

}  // namespace groundrl
