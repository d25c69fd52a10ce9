#include "figsynth/color.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace figsynth {

namespace {

constexpr std::array<NamedColor, 16> kBaseColors = {{
    {"red", {0xFF, 0x00, 0x00}},
    {"orange", {0xFF, 0xA5, 0x00}},
    {"yellow", {0xFF, 0xFF, 0x00}},
    {"green", {0x00, 0x80, 0x00}},
    {"blue", {0x00, 0x00, 0xFF}},
    {"purple", {0x80, 0x00, 0x80}},
    {"pink", {0xFF, 0xC0, 0xCB}},
    {"brown", {0xA5, 0x2A, 0x2A}},
    {"black", {0x00, 0x00, 0x00}},
    {"white", {0xFF, 0xFF, 0xFF}},
    {"gray", {0x80, 0x80, 0x80}},
    {"cyan", {0x00, 0xFF, 0xFF}},
    {"magenta", {0xFF, 0x00, 0xFF}},
    {"navy", {0x00, 0x00, 0x80}},
    {"teal", {0x00, 0x80, 0x80}},
    {"olive", {0x80, 0x80, 0x00}},
}};

// Extra shades per color word, mostly from common plotting palettes, so that
// e.g. a steel blue reads as "blue" rather than "gray".
constexpr NamedColor kShades[] = {
    {"blue", {0x1F, 0x77, 0xB4}},    {"blue", {0x46, 0x82, 0xB4}},    {"blue", {0x41, 0x69, 0xE1}},
    {"blue", {0x64, 0x95, 0xED}},    {"blue", {0x1E, 0x90, 0xFF}},    {"blue", {0x00, 0x00, 0xCD}},
    {"blue", {0x87, 0xCE, 0xEB}},    {"blue", {0xAD, 0xD8, 0xE6}},    {"green", {0x2C, 0xA0, 0x2C}},
    {"green", {0x22, 0x8B, 0x22}},   {"green", {0x32, 0xCD, 0x32}},   {"green", {0x3C, 0xB3, 0x71}},
    {"green", {0x90, 0xEE, 0x90}},   {"green", {0x00, 0x64, 0x00}},   {"red", {0xD6, 0x27, 0x28}},
    {"red", {0xDC, 0x14, 0x3C}},     {"red", {0xB2, 0x22, 0x22}},     {"red", {0x8B, 0x00, 0x00}},
    {"orange", {0xFF, 0x7F, 0x0E}},  {"orange", {0xFF, 0x8C, 0x00}},  {"purple", {0x94, 0x67, 0xBD}},
    {"purple", {0x8A, 0x2B, 0xE2}},  {"purple", {0x93, 0x70, 0xDB}},  {"purple", {0x66, 0x33, 0x99}},
    {"purple", {0x4B, 0x00, 0x82}},  {"pink", {0xE3, 0x77, 0xC2}},    {"pink", {0xFF, 0x69, 0xB4}},
    {"pink", {0xFF, 0xB6, 0xC1}},    {"pink", {0xDB, 0x70, 0x93}},    {"brown", {0x8C, 0x56, 0x4B}},
    {"brown", {0xD2, 0x69, 0x1E}},   {"brown", {0x8B, 0x45, 0x13}},   {"brown", {0xA0, 0x52, 0x2D}},
    {"gray", {0x7F, 0x7F, 0x7F}},    {"gray", {0xA9, 0xA9, 0xA9}},    {"gray", {0xC0, 0xC0, 0xC0}},
    {"gray", {0x69, 0x69, 0x69}},    {"gray", {0xD3, 0xD3, 0xD3}},    {"olive", {0xBC, 0xBD, 0x22}},
    {"olive", {0x6B, 0x8E, 0x23}},   {"cyan", {0x17, 0xBE, 0xCF}},    {"cyan", {0x00, 0xCE, 0xD1}},
    {"cyan", {0x40, 0xE0, 0xD0}},    {"yellow", {0xFF, 0xD7, 0x00}},  {"teal", {0x00, 0x8B, 0x8B}},
    {"teal", {0x20, 0xB2, 0xAA}},    {"navy", {0x19, 0x19, 0x70}},    {"magenta", {0xC7, 0x15, 0x85}},
    {"white", {0xF5, 0xF5, 0xF5}},
};

struct Lab {
  double l, a, b;
};

double srgb_to_linear(std::uint8_t c) {
  const double v = c / 255.0;
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

Lab to_lab(Rgb c) {
  const double r = srgb_to_linear(c.r);
  const double g = srgb_to_linear(c.g);
  const double b = srgb_to_linear(c.b);
  // D65 white point.
  const double x = (0.4124 * r + 0.3576 * g + 0.1805 * b) / 0.95047;
  const double y = (0.2126 * r + 0.7152 * g + 0.0722 * b) / 1.00000;
  const double z = (0.0193 * r + 0.1192 * g + 0.9505 * b) / 1.08883;
  const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<Rgb> parse_hex_color(std::string_view text) {
  if (text.size() != 7 || text[0] != '#') return std::nullopt;
  std::array<int, 6> d{};
  for (int i = 0; i < 6; ++i) {
    d[i] = hex_digit(text[i + 1]);
    if (d[i] < 0) return std::nullopt;
  }
  return Rgb{static_cast<std::uint8_t>(d[0] * 16 + d[1]),
             static_cast<std::uint8_t>(d[2] * 16 + d[3]),
             static_cast<std::uint8_t>(d[4] * 16 + d[5])};
}

std::string to_hex(Rgb color) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", color.r, color.g, color.b);
  return buf;
}

std::span<const NamedColor> base_colors() { return kBaseColors; }

std::string_view nearest_color_name(Rgb color) {
  const Lab target = to_lab(color);
  std::string_view best;
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](const NamedColor& named) {
    const Lab lab = to_lab(named.rgb);
    const double d = (lab.l - target.l) * (lab.l - target.l) +
                     (lab.a - target.a) * (lab.a - target.a) +
                     (lab.b - target.b) * (lab.b - target.b);
    if (d < best_d) {
      best_d = d;
      best = named.name;
    }
  };
  for (const auto& named : kBaseColors) consider(named);
  for (const auto& named : kShades) consider(named);
  return best;
}

}  // namespace figsynth

namespace figsynth {

namespace {

constexpr std::array<NamedColor, 15> kRepresentative = {{
    {"blue", {0x28, 0x3C, 0xFF}},
    {"orange", {0xFF, 0x8C, 0x1A}},
    {"green", {0x2C, 0x9A, 0x2C}},
    {"red", {0xF5, 0x1E, 0x1E}},
    {"purple", {0x7B, 0x2D, 0x8E}},
    {"brown", {0x8C, 0x3B, 0x2B}},
    {"pink", {0xF2, 0x9A, 0xB8}},
    {"gray", {0x80, 0x80, 0x80}},
    {"olive", {0x80, 0x80, 0x10}},
    {"cyan", {0x20, 0xD8, 0xE8}},
    {"navy", {0x14, 0x1E, 0x78}},
    {"teal", {0x10, 0x80, 0x80}},
    {"magenta", {0xF0, 0x28, 0xE8}},
    {"yellow", {0xF5, 0xE6, 0x14}},
    {"black", {0x20, 0x20, 0x20}},
}};

}  // namespace

std::span<const NamedColor> representative_colors() { return kRepresentative; }

}  // namespace figsynth
