#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "figsynth/chart_model.hpp"
#include "figsynth/rng.hpp"
#include "json.hpp"

namespace figsynth {

enum class TitleMode { Absent, Center, MiddleLeft, Right };

// pos1..pos6 are upper-left, upper-center, upper-right, lower-left,
// lower-center, lower-right.
enum class LegendMode { Absent, UpperLeft, UpperCenter, UpperRight, LowerLeft, LowerCenter, LowerRight };

enum class MarkerStyle {
  None,
  Circle,
  Square,
  TriangleUp,
  TriangleDown,
  Diamond,
  Plus,
  X,
  Star,
  Pentagon,
};

inline constexpr std::array<TitleMode, 4> kAllTitleModes = {
    TitleMode::Absent, TitleMode::Center, TitleMode::MiddleLeft, TitleMode::Right};
inline constexpr std::array<LegendMode, 7> kAllLegendModes = {
    LegendMode::Absent,    LegendMode::UpperLeft,   LegendMode::UpperCenter, LegendMode::UpperRight,
    LegendMode::LowerLeft, LegendMode::LowerCenter, LegendMode::LowerRight};
inline constexpr std::array<MarkerStyle, 10> kAllMarkerStyles = {
    MarkerStyle::None,         MarkerStyle::Circle,  MarkerStyle::Square, MarkerStyle::TriangleUp,
    MarkerStyle::TriangleDown, MarkerStyle::Diamond, MarkerStyle::Plus,   MarkerStyle::X,
    MarkerStyle::Star,         MarkerStyle::Pentagon};
inline constexpr std::array<double, 3> kFontScales = {0.85, 1.0, 1.2};
inline constexpr std::array<int, 3> kCanvasWidths = {640, 800, 960};

struct Aspect {
  int w;
  int h;
};
inline constexpr std::array<Aspect, 3> kAspects = {{{4, 3}, {16, 9}, {1, 1}}};

std::string_view title_mode_name(TitleMode mode);
std::optional<TitleMode> title_mode_from_name(std::string_view name);
std::string_view legend_mode_name(LegendMode mode);
std::optional<LegendMode> legend_mode_from_name(std::string_view name);
std::string_view marker_style_name(MarkerStyle style);
std::optional<MarkerStyle> marker_style_from_name(std::string_view name);

struct FontFace {
  std::string_view family;
  std::string_view file;  // under <asset_dir>/fonts
};
// The seven bundled faces.
std::span<const FontFace> font_faces();

struct AppearanceSpec {
  std::string font_family = "dejavu-sans";
  double font_scale = 1.0;
  TitleMode title_mode = TitleMode::Center;
  LegendMode legend_mode = LegendMode::Absent;
  MarkerStyle marker_style = MarkerStyle::None;
  bool spines = true;
  bool show_numbers = false;
  int width = 800;
  int height = 600;
  // Perturbs gridline gray and background tint only.
  std::uint64_t palette_jitter_seed = 0;

  bool operator==(const AppearanceSpec&) const = default;
};

// Grouped, stacked and pie charts always carry a legend.
bool legend_required(ChartType type);
// Line and scatter draw markers; every other type uses MarkerStyle::None.
bool uses_markers(ChartType type);

// Human-readable reasons `app` cannot be used for `type`; empty when it can.
std::vector<std::string> appearance_problems(ChartType type, const AppearanceSpec& app);

nlohmann::json to_json(const AppearanceSpec& app);
// Throws ParseFailure.
AppearanceSpec appearance_from_json(const nlohmann::json& j);

// Independent uniform draw over each axis, subject to the per-type rules.
AppearanceSpec sample_appearance(ChartType type, Rng& rng);
// The single style used when appearance randomization is switched off.
AppearanceSpec fixed_appearance(ChartType type);
// Size of the discrete appearance space (palette seed excluded, the nine
// canvas sizes included).
std::uint64_t appearance_space_size(ChartType type);

struct RectD {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
};

struct BarShape {
  std::size_t series = 0;
  std::size_t point = 0;
  RectD rect;  // pixels
  double base = 0;  // data units along the value axis
  double top = 0;
};

struct WedgeShape {
  std::size_t point = 0;
  double start_deg = 0;  // clockwise from 12 o'clock
  double sweep_deg = 0;
};

struct PointShape {
  std::size_t series = 0;
  std::size_t point = 0;
  double px = 0;
  double py = 0;
};

// Pixel geometry of the plotted marks.
struct PlotLayout {
  RectD plot;
  double value_min = 0;
  double value_max = 1;
  std::vector<double> value_ticks;
  // Numeric x axis (scatter, line with x values).
  bool numeric_x = false;
  double x_min = 0;
  double x_max = 1;
  std::vector<double> x_ticks;
  std::vector<std::string> categories;
  std::vector<BarShape> bars;
  std::vector<WedgeShape> wedges;
  std::vector<PointShape> points;
  double pie_cx = 0;
  double pie_cy = 0;
  double pie_radius = 0;
};

// Throws RenderError when the data is invalid or the appearance does not fit
// the chart type.
PlotLayout compute_layout(const ChartData& data, const AppearanceSpec& app);

struct RenderedFigure {
  std::vector<unsigned char> png_bytes;
  int width = 0;
  int height = 0;
  // FNV-1a over the canvas size and the raw BGR pixels.
  std::uint64_t content_hash = 0;
};

RenderedFigure render_figure(const ChartData& data, const AppearanceSpec& app);
// content_hash of render_figure(data, app) without PNG encoding.
std::uint64_t render_hash(const ChartData& data, const AppearanceSpec& app);

// content_hash of a PNG produced by render_figure. Throws RenderError.
std::uint64_t image_hash(const std::vector<unsigned char>& png_bytes);

struct RenderJob {
  ChartData data;
  AppearanceSpec appearance;
};

struct IndexedError {
  std::size_t index = 0;
  std::string message;
};

struct RenderBatchResult {
  // Same order as the input; empty where the job failed.
  std::vector<std::optional<RenderedFigure>> figures;
  std::vector<IndexedError> errors;
};

// Throws ConfigError when parallelism < 1.
RenderBatchResult render_batch(std::span<const RenderJob> jobs, int parallelism);

}  // namespace figsynth
