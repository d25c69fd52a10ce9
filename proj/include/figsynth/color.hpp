#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace figsynth {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

// Accepts exactly "#RRGGBB" (case-insensitive hex digits).
std::optional<Rgb> parse_hex_color(std::string_view text);
std::string to_hex(Rgb color);

struct NamedColor {
  std::string_view name;
  Rgb rgb;
};

// The 16 color words used for color answers.
std::span<const NamedColor> base_colors();

// Color word of the nearest reference shade by CIE76 distance in L*a*b*.
// Every word has its base color plus a few common shades; ties go to the
// earlier entry.
std::string_view nearest_color_name(Rgb color);

}  // namespace figsynth

namespace figsynth {

// Chart-friendly swatches, one per base color word except white. Each maps
// back to its own name under nearest_color_name.
std::span<const NamedColor> representative_colors();

}  // namespace figsynth
