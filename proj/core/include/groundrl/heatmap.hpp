#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace groundrl {

enum class HeatmapFormat { Ansi, Plain, Html };

inline constexpr int kIntensityLevels = 256;

struct HeatmapDoc {
  std::vector<std::string> tokens;
  std::vector<double> eps;
  std::vector<double> intensity;  // |eps_t| / scale, clamped to [0, 1]
};

// Per-rollout scale (max |eps|) unless `absolute_scale` is given.
HeatmapDoc make_heatmap(std::span<const std::string> tokens, std::span<const double> eps,
                        std::optional<double> absolute_scale = std::nullopt);

// Quantized intensity level in [0, 255].
int intensity_level(double intensity);

// Ansi: 24-bit background colors, green for eps > 0 and red for eps < 0,
// darker for larger |eps|. Plain: "token[+0.123]" annotations. Html: one
// self-contained page with inline styles.
std::string render_heatmap(const HeatmapDoc& doc, HeatmapFormat format);

std::string render_heatmap(std::span<const std::string> tokens, std::span<const double> eps,
                           HeatmapFormat format);

struct Rgb {
  int r = 255, g = 255, b = 255;
  bool operator==(const Rgb&) const = default;
};

// Color for one token; sign picks the hue family, level the shade.
Rgb heat_color(double eps, int level);

}  // namespace groundrl
