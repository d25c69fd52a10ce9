#include "figsynth/render.hpp"

#include <opencv2/core.hpp>
#include <opencv2/freetype.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <thread>

#include "figsynth/assets.hpp"
#include "figsynth/color.hpp"
#include "figsynth/errors.hpp"

namespace figsynth {

using nlohmann::json;

namespace {

constexpr std::array<FontFace, 7> kFaces = {{
    {"dejavu-sans", "DejaVuSans.ttf"},
    {"dejavu-sans-bold", "DejaVuSans-Bold.ttf"},
    {"dejavu-serif", "DejaVuSerif.ttf"},
    {"dejavu-serif-italic", "DejaVuSerif-Italic.ttf"},
    {"dejavu-sans-mono", "DejaVuSansMono.ttf"},
    {"stix-general", "STIXGeneral.ttf"},
    {"stix-general-italic", "STIXGeneralItalic.ttf"},
}};

constexpr std::array<std::string_view, 4> kTitleNames = {"absent", "center", "middle-left", "right"};
constexpr std::array<std::string_view, 7> kLegendNames = {
    "absent", "upper-left", "upper-center", "upper-right", "lower-left", "lower-center", "lower-right"};
constexpr std::array<std::string_view, 10> kMarkerNames = {
    "none", "circle", "square", "triangle-up", "triangle-down",
    "diamond", "plus", "x", "star", "pentagon"};

template <class E, std::size_t N>
std::optional<E> enum_from_name(const std::array<std::string_view, N>& names, std::string_view name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<E>(i);
  }
  return std::nullopt;
}

const FontFace* find_face(std::string_view family) {
  for (const auto& f : kFaces) {
    if (f.family == family) return &f;
  }
  return nullptr;
}

int canvas_height(int width, Aspect a) { return width * a.h / a.w; }

bool canvas_ok(int width, int height) {
  if (std::find(kCanvasWidths.begin(), kCanvasWidths.end(), width) == kCanvasWidths.end()) {
    return false;
  }
  return std::any_of(kAspects.begin(), kAspects.end(),
                     [&](Aspect a) { return canvas_height(width, a) == height; });
}

cv::freetype::FreeType2& font_for(const std::string& family) {
  thread_local std::map<std::string, cv::Ptr<cv::freetype::FreeType2>> cache;
  if (auto it = cache.find(family); it != cache.end()) return *it->second;
  const FontFace* face = find_face(family);
  if (!face) throw RenderError("unknown font family: " + family);
  const auto path = asset_dir() / "fonts" / std::string(face->file);
  if (!std::filesystem::exists(path)) throw RenderError("font file not found: " + path.string());
  auto ft = cv::freetype::createFreeType2();
  try {
    ft->loadFontData(path.string(), 0);
  } catch (const cv::Exception& e) {
    throw RenderError("cannot load font " + path.string() + ": " + e.what());
  }
  return *cache.emplace(family, ft).first->second;
}

// Invalid UTF-8 bytes become '?'.
std::string sanitize_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    }
    if (!ok) {
      out.push_back('?');
      ++i;
      continue;
    }
    if (c >= 0x20 || c == 0x09) {
      out.append(s.substr(i, len));
    } else {
      out.push_back(' ');
    }
    i += len;
  }
  return out;
}

cv::Scalar bgr(Rgb c) { return cv::Scalar(c.b, c.g, c.r); }

cv::Scalar hex_bgr(const std::string& hex) {
  auto c = parse_hex_color(hex);
  if (!c) throw RenderError("bad color: " + hex);
  return bgr(*c);
}

cv::Scalar text_on(cv::Scalar fill) {
  const double lum = 0.114 * fill[0] + 0.587 * fill[1] + 0.299 * fill[2];
  return lum > 150 ? cv::Scalar(30, 30, 30) : cv::Scalar(255, 255, 255);
}

struct Style {
  double unit = 1;
  int tick_px = 12;
  int label_px = 14;
  int title_px = 18;
  int number_px = 10;
  int legend_px = 12;
  int pad = 12;
  int tick_len = 5;
  int marker_r = 4;
  int line_w = 2;
  cv::Scalar bg;
  cv::Scalar grid;
  cv::Scalar ink{40, 40, 40};
  cv::Scalar axis{70, 70, 70};
};

Style make_style(const AppearanceSpec& app) {
  Style st;
  st.unit = std::clamp(std::sqrt(double(app.width) * app.height / (800.0 * 600.0)), 0.75, 1.3);
  const double s = st.unit * app.font_scale;
  st.tick_px = std::max(9, int(std::lround(12 * s)));
  st.label_px = std::max(10, int(std::lround(14 * s)));
  st.title_px = std::max(12, int(std::lround(18 * s)));
  st.number_px = std::max(8, int(std::lround(10 * s)));
  st.legend_px = std::max(9, int(std::lround(12 * s)));
  st.pad = int(std::lround(12 * st.unit));
  st.tick_len = int(std::lround(5 * st.unit));
  st.marker_r = std::max(3, int(std::lround(4.5 * st.unit)));
  st.line_w = std::max(1, int(std::lround(2 * st.unit)));
  Rng j(mix64(app.palette_jitter_seed ^ 0x9e3779b97f4a7c15ULL));
  const double g = 200 + double(j.below(36));
  st.grid = cv::Scalar(g, g, g);
  st.bg = cv::Scalar(255 - double(j.below(10)), 255 - double(j.below(10)), 255 - double(j.below(10)));
  return st;
}

class Painter {
 public:
  Painter(cv::Mat& img, cv::freetype::FreeType2& ft) : img_(img), ft_(ft) {}

  int width(const std::string& s, int px) const {
    if (s.empty()) return 0;
    int base = 0;
    return ft_.getTextSize(s, px, -1, &base).width;
  }

  // Text with its line box's top-left corner at (x, top).
  void text(const std::string& s, double x, double top, int px, cv::Scalar color) {
    if (s.empty()) return;
    const cv::Point org(int(std::lround(x)), int(std::lround(top + 0.8 * px)));
    ft_.putText(img_, s, org, px, color, -1, cv::LINE_AA, true);
  }

  // Text turned 90 degrees counter-clockwise, centered on (cx, cy).
  void text_up(const std::string& s, double cx, double cy, int px, cv::Scalar color, cv::Scalar bg) {
    if (s.empty()) return;
    const int w = width(s, px) + 4;
    const int h = int(std::ceil(px * 1.25));
    cv::Mat tmp(h, w, CV_8UC3, bg);
    ft_.putText(tmp, s, cv::Point(2, int(std::lround(0.85 * px))), px, color, -1, cv::LINE_AA, true);
    cv::Mat rot;
    cv::rotate(tmp, rot, cv::ROTATE_90_COUNTERCLOCKWISE);
    paste(rot, int(std::lround(cx - rot.cols / 2.0)), int(std::lround(cy - rot.rows / 2.0)), bg);
  }

  // Rotated text whose right end sits at (cx, top): for category labels
  // hanging below an axis.
  void text_down_from(const std::string& s, double cx, double top, int px, cv::Scalar color,
                      cv::Scalar bg) {
    if (s.empty()) return;
    const int w = width(s, px) + 4;
    const int h = int(std::ceil(px * 1.25));
    cv::Mat tmp(h, w, CV_8UC3, bg);
    ft_.putText(tmp, s, cv::Point(2, int(std::lround(0.85 * px))), px, color, -1, cv::LINE_AA, true);
    cv::Mat rot;
    cv::rotate(tmp, rot, cv::ROTATE_90_COUNTERCLOCKWISE);
    paste(rot, int(std::lround(cx - rot.cols / 2.0)), int(std::lround(top)), bg);
  }

  // Longest prefix (plus "...") no wider than max_w.
  std::string fit(const std::string& s, int px, double max_w) const {
    if (width(s, px) <= max_w) return s;
    std::string cut = s;
    while (!cut.empty()) {
      std::size_t i = cut.size() - 1;
      while (i > 0 && (static_cast<unsigned char>(cut[i]) & 0xC0) == 0x80) --i;
      cut.erase(i);
      if (width(cut + "...", px) <= max_w) return cut + "...";
    }
    return "...";
  }

 private:
  void paste(const cv::Mat& src, int x, int y, cv::Scalar bg) {
    const cv::Rect dst_rect = cv::Rect(x, y, src.cols, src.rows) & cv::Rect(0, 0, img_.cols, img_.rows);
    if (dst_rect.empty()) return;
    const cv::Rect src_rect(dst_rect.x - x, dst_rect.y - y, dst_rect.width, dst_rect.height);
    cv::Mat part = src(src_rect);
    cv::Mat diff;
    cv::absdiff(part, bg, diff);
    cv::Mat gray;
    cv::cvtColor(diff, gray, cv::COLOR_BGR2GRAY);
    part.copyTo(img_(dst_rect), gray > 0);
  }

  cv::Mat& img_;
  cv::freetype::FreeType2& ft_;
};

struct Axis {
  double lo = 0;
  double hi = 1;
  std::vector<double> ticks;
};

Axis nice_axis(double lo, double hi, int target = 5) {
  if (!(hi > lo)) {
    const double d = lo == 0 ? 1.0 : std::fabs(lo) * 0.1;
    lo -= d;
    hi += d;
  }
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 2.5 ? 2.5 : norm <= 5 ? 5 : 10;
  step *= mag;
  const auto k_lo = static_cast<long long>(std::floor(lo / step + 1e-9));
  const auto k_hi = static_cast<long long>(std::ceil(hi / step - 1e-9));
  Axis a;
  a.lo = double(k_lo) * step;
  a.hi = double(k_hi) * step;
  for (long long k = k_lo; k <= k_hi; ++k) {
    double t = double(k) * step;
    if (std::fabs(t) < step * 1e-9) t = 0;
    a.ticks.push_back(t);
  }
  return a;
}

enum class SwatchKind { Box, Line, Marker };

struct LegendEntry {
  std::string text;
  cv::Scalar color;
};

struct Frame {
  PlotLayout layout;
  Style style;
  bool horizontal = false;  // categories on the left, values along x
  bool axes = true;
  bool rotate_categories = false;
  std::vector<std::string> category_text;
  std::vector<std::string> value_tick_text;
  std::vector<std::string> x_tick_text;
  std::string title;
  double title_x = 0;
  double title_top = 0;
  std::vector<LegendEntry> legend;
  SwatchKind swatch = SwatchKind::Box;
  RectD legend_box;
  bool direct_labels = false;
  std::vector<std::string> direct_text;
};

double legend_row_h(const Style& st) { return st.legend_px * 1.45; }

double swatch_w(const Style& st, SwatchKind kind) {
  return kind == SwatchKind::Line ? st.legend_px * 2.0 : st.legend_px * 0.9;
}

RectD place_box(const RectD& area, double w, double h, LegendMode mode, double inset) {
  RectD box{0, 0, w, h};
  switch (mode) {
    case LegendMode::UpperLeft:
    case LegendMode::LowerLeft:
      box.x = area.x + inset;
      break;
    case LegendMode::UpperCenter:
    case LegendMode::LowerCenter:
      box.x = area.x + (area.w - w) / 2;
      break;
    default:
      box.x = area.x + area.w - w - inset;
  }
  const bool upper = mode == LegendMode::UpperLeft || mode == LegendMode::UpperCenter ||
                     mode == LegendMode::UpperRight;
  box.y = upper ? area.y + inset : area.y + area.h - h - inset;
  return box;
}

void ensure_renderable(const ChartData& data, const AppearanceSpec& app) {
  const auto report = validate_chart_data(data);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw RenderError("invalid chart data: " + v.rule + " at " + v.path);
  }
  const auto problems = appearance_problems(data.chart_type, app);
  if (!problems.empty()) throw RenderError("appearance does not fit chart: " + problems.front());
}

Frame build_frame(const ChartData& data, const AppearanceSpec& app, const Painter& p) {
  Frame f;
  Style& st = f.style;
  st = make_style(app);
  PlotLayout& L = f.layout;
  const ChartType type = data.chart_type;
  const double W = app.width;
  const double H = app.height;

  // Legend entries.
  if (type == ChartType::Pie) {
    const Series& s = data.series.front();
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      f.legend.push_back({sanitize_utf8(point_key(s.points[i])), hex_bgr(point_fill(s, i))});
    }
  } else {
    for (const auto& s : data.series) f.legend.push_back({sanitize_utf8(s.name), hex_bgr(s.color)});
  }
  f.swatch = type == ChartType::Line ? SwatchKind::Line
             : type == ChartType::Scatter ? SwatchKind::Marker
                                          : SwatchKind::Box;
  if (app.legend_mode != LegendMode::Absent) {
    double text_w = 0;
    for (auto& e : f.legend) {
      e.text = p.fit(e.text, st.legend_px, 0.3 * W);
      text_w = std::max(text_w, double(p.width(e.text, st.legend_px)));
    }
    const double inner = st.legend_px * 0.6;
    f.legend_box.w = inner * 3 + swatch_w(st, f.swatch) + text_w;
    f.legend_box.h = inner * 1.2 + legend_row_h(st) * double(f.legend.size());
  }

  // Title row.
  double top = st.pad;
  if (app.title_mode != TitleMode::Absent && !data.title.empty()) {
    f.title = p.fit(sanitize_utf8(data.title), st.title_px, W - 2.0 * st.pad);
    f.title_top = top;
    top += st.title_px * 1.35 + st.pad * 0.5;
  }

  if (type == ChartType::Pie) {
    f.axes = false;
    RectD area{double(st.pad), top, W - 2.0 * st.pad, H - top - st.pad};
    const LegendMode lm = app.legend_mode;
    const bool center = lm == LegendMode::UpperCenter || lm == LegendMode::LowerCenter;
    const bool upper = lm == LegendMode::UpperLeft || lm == LegendMode::UpperCenter ||
                       lm == LegendMode::UpperRight;
    RectD pie_area = area;
    if (lm != LegendMode::Absent) {
      f.legend_box = place_box(area, f.legend_box.w, f.legend_box.h, lm, 0);
      if (center) {
        pie_area.h -= f.legend_box.h + st.pad;
        if (upper) pie_area.y += f.legend_box.h + st.pad;
      } else {
        pie_area.w -= f.legend_box.w + st.pad;
        if (lm == LegendMode::UpperLeft || lm == LegendMode::LowerLeft) {
          pie_area.x += f.legend_box.w + st.pad;
        }
      }
    }
    L.plot = pie_area;
    L.pie_cx = pie_area.x + pie_area.w / 2;
    L.pie_cy = pie_area.y + pie_area.h / 2;
    L.pie_radius = std::max(10.0, 0.46 * std::min(pie_area.w, pie_area.h));
    const Series& s = data.series.front();
    double total = 0;
    for (const auto& pt : s.points) total += pt.value;
    double start = 0;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const double sweep = 360.0 * s.points[i].value / total;
      L.wedges.push_back({i, start, sweep});
      start += sweep;
    }
    L.categories = category_keys(data);
    if (f.title.size() && app.title_mode != TitleMode::Absent) {
      const double tw = p.width(f.title, st.title_px);
      f.title_x = app.title_mode == TitleMode::Center       ? (W - tw) / 2
                  : app.title_mode == TitleMode::MiddleLeft ? st.pad
                                                            : W - st.pad - tw;
    }
    return f;
  }

  f.horizontal = is_horizontal(type);
  const bool labels = uses_labels(data);
  L.numeric_x = !labels;
  L.categories = labels ? category_keys(data) : std::vector<std::string>{};

  // Value axis range.
  double lo = 0;
  double hi = 0;
  bool first = true;
  const bool bars = type != ChartType::Line && type != ChartType::Scatter;
  if (is_stacked(type)) {
    std::map<std::string, double> sums;
    for (const auto& s : data.series) {
      for (const auto& pt : s.points) sums[point_key(pt)] += pt.value;
    }
    for (const auto& [k, v] : sums) hi = std::max(hi, v);
  } else {
    for (const auto& s : data.series) {
      for (const auto& pt : s.points) {
        lo = first ? pt.value : std::min(lo, pt.value);
        hi = first ? pt.value : std::max(hi, pt.value);
        first = false;
      }
    }
  }
  if (bars) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    const double span = hi - lo;
    if (app.show_numbers) {
      if (hi > 0) hi += 0.08 * span;
      if (lo < 0) lo -= 0.08 * span;
    }
  } else {
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += (app.show_numbers ? 0.1 : 0.05) * span;
  }
  const Axis va = nice_axis(lo, hi);
  L.value_min = va.lo;
  L.value_max = va.hi;
  L.value_ticks = va.ticks;
  for (double t : va.ticks) f.value_tick_text.push_back(format_number(t));

  if (L.numeric_x) {
    double xl = 0, xh = 0;
    bool fx = true;
    for (const auto& s : data.series) {
      for (const auto& pt : s.points) {
        const double x = pt.x.value_or(0);
        xl = fx ? x : std::min(xl, x);
        xh = fx ? x : std::max(xh, x);
        fx = false;
      }
    }
    const double span = xh - xl;
    const Axis xa = nice_axis(xl - 0.03 * span, xh + 0.03 * span);
    L.x_min = xa.lo;
    L.x_max = xa.hi;
    L.x_ticks = xa.ticks;
    for (double t : xa.ticks) f.x_tick_text.push_back(format_number(t));
  }

  int value_tick_w = 0;
  for (const auto& t : f.value_tick_text) value_tick_w = std::max(value_tick_w, p.width(t, st.tick_px));
  for (const auto& c : L.categories) f.category_text.push_back(sanitize_utf8(c));

  const std::string x_label = sanitize_utf8(data.x_label);
  const std::string y_label = sanitize_utf8(data.y_label);
  const double label_row = st.label_px * 1.4;
  const double tick_row = st.tick_px * 1.3;

  // Direct series labels for unlabeled multi-series line/scatter charts.
  double direct_w = 0;
  if ((type == ChartType::Line || type == ChartType::Scatter) && data.series.size() > 1 &&
      app.legend_mode == LegendMode::Absent) {
    f.direct_labels = true;
    for (const auto& s : data.series) {
      f.direct_text.push_back(p.fit(sanitize_utf8(s.name), st.tick_px, 0.18 * W));
      direct_w = std::max(direct_w, double(p.width(f.direct_text.back(), st.tick_px)));
    }
  }

  if (!f.title.empty()) {
    // keep the top value tick label clear of the title row
  } else {
    top = std::max(top, st.pad + st.tick_px * 0.6);
  }

  double left = 0, right = 0, bottom = 0;
  if (f.horizontal) {
    double cat_w = 0;
    for (auto& c : f.category_text) {
      c = p.fit(c, st.tick_px, 0.3 * W);
      cat_w = std::max(cat_w, double(p.width(c, st.tick_px)));
    }
    left = st.pad + (x_label.empty() ? 0 : label_row) + cat_w + st.tick_len + 4;
    bottom = st.pad + (y_label.empty() ? 0 : label_row) + tick_row + st.tick_len + 2;
    const double last_w = f.value_tick_text.empty() ? 0 : p.width(f.value_tick_text.back(), st.tick_px);
    right = st.pad + last_w / 2;
  } else {
    left = st.pad + (y_label.empty() ? 0 : label_row) + value_tick_w + st.tick_len + 4;
    right = st.pad + (direct_w > 0 ? direct_w + st.marker_r + 6 : 0);
    if (L.numeric_x && !f.x_tick_text.empty()) {
      right = std::max(right, st.pad + p.width(f.x_tick_text.back(), st.tick_px) / 2.0);
    }
    double cat_h = tick_row;
    if (!L.numeric_x) {
      const double plot_w = W - left - right;
      const double slot = plot_w / double(std::max<std::size_t>(1, f.category_text.size()));
      double widest = 0;
      for (const auto& c : f.category_text) widest = std::max(widest, double(p.width(c, st.tick_px)));
      if (widest > slot * 0.92) {
        f.rotate_categories = true;
        const double max_h = 0.28 * H;
        widest = 0;
        for (auto& c : f.category_text) {
          c = p.fit(c, st.tick_px, max_h);
          widest = std::max(widest, double(p.width(c, st.tick_px)));
        }
        cat_h = widest + 6;
      }
    }
    bottom = st.pad + (x_label.empty() ? 0 : label_row) + cat_h + st.tick_len + 2;
  }
  L.plot = RectD{left, top, std::max(40.0, W - left - right), std::max(40.0, H - top - bottom)};
  const RectD& P = L.plot;

  if (app.legend_mode != LegendMode::Absent) {
    f.legend_box = place_box(P, f.legend_box.w, f.legend_box.h, app.legend_mode, st.pad * 0.5);
  }
  if (!f.title.empty()) {
    const double tw = p.width(f.title, st.title_px);
    f.title_x = app.title_mode == TitleMode::Center       ? (W - tw) / 2
                : app.title_mode == TitleMode::MiddleLeft ? P.x
                                                          : P.x + P.w - tw;
    f.title_x = std::clamp(f.title_x, double(st.pad), std::max(double(st.pad), W - st.pad - tw));
  }

  const double vspan = L.value_max - L.value_min;
  auto value_px = [&](double v) {
    return f.horizontal ? P.x + P.w * (v - L.value_min) / vspan
                        : P.y + P.h * (L.value_max - v) / vspan;
  };

  std::map<std::string, std::size_t> cat_index;
  for (std::size_t i = 0; i < L.categories.size(); ++i) cat_index.emplace(L.categories[i], i);
  const double n_cat = double(std::max<std::size_t>(1, L.categories.size()));
  const double slot = (f.horizontal ? P.h : P.w) / n_cat;

  if (bars) {
    const std::size_t m = data.series.size();
    std::vector<double> stack_top(L.categories.size(), 0.0);
    for (std::size_t si = 0; si < m; ++si) {
      const Series& s = data.series[si];
      for (std::size_t pi = 0; pi < s.points.size(); ++pi) {
        const std::size_t ci = cat_index.at(point_key(s.points[pi]));
        const double v = s.points[pi].value;
        double thick = 0, offset = 0, base = 0, top_v = v;
        if (is_grouped(type)) {
          const double group = 0.8 * slot;
          thick = group / double(m);
          offset = (slot - group) / 2 + double(si) * thick;
        } else {
          thick = 0.65 * slot;
          offset = (slot - thick) / 2;
        }
        if (is_stacked(type)) {
          base = stack_top[ci];
          top_v = base + v;
          stack_top[ci] = top_v;
        }
        const double a = value_px(base);
        const double b = value_px(top_v);
        RectD r;
        if (f.horizontal) {
          r = {std::min(a, b), P.y + double(ci) * slot + offset, std::fabs(b - a), thick};
        } else {
          r = {P.x + double(ci) * slot + offset, std::min(a, b), thick, std::fabs(b - a)};
        }
        L.bars.push_back({si, pi, r, base, top_v});
      }
    }
  } else {
    for (std::size_t si = 0; si < data.series.size(); ++si) {
      const Series& s = data.series[si];
      for (std::size_t pi = 0; pi < s.points.size(); ++pi) {
        const DataPoint& pt = s.points[pi];
        double px = 0;
        if (L.numeric_x) {
          px = P.x + P.w * (pt.x.value_or(0) - L.x_min) / (L.x_max - L.x_min);
        } else {
          px = P.x + (double(cat_index.at(point_key(pt))) + 0.5) * slot;
        }
        L.points.push_back({si, pi, px, value_px(pt.value)});
      }
    }
  }
  return f;
}

cv::Point fx(double x, double y) {
  return cv::Point(int(std::lround(x * 16)), int(std::lround(y * 16)));
}

constexpr int kShift = 4;

void fill_poly(cv::Mat& img, const std::vector<cv::Point>& pts, cv::Scalar color) {
  const cv::Point* data = pts.data();
  const int n = int(pts.size());
  cv::fillPoly(img, &data, &n, 1, color, cv::LINE_AA, kShift);
}

void draw_marker(cv::Mat& img, MarkerStyle m, double cx, double cy, double r, cv::Scalar c) {
  auto ring = [&](int n, double rot_deg, double r_out, double r_in) {
    std::vector<cv::Point> pts;
    const int k = r_in > 0 ? 2 * n : n;
    for (int i = 0; i < k; ++i) {
      const double rr = (r_in > 0 && i % 2 == 1) ? r_in : r_out;
      const double a = (rot_deg + 360.0 * i / k) * std::numbers::pi / 180.0;
      pts.push_back(fx(cx + rr * std::sin(a), cy - rr * std::cos(a)));
    }
    fill_poly(img, pts, c);
  };
  const int stroke = std::max(2, int(std::lround(r / 2)));
  switch (m) {
    case MarkerStyle::None:
      break;
    case MarkerStyle::Circle:
      cv::circle(img, fx(cx, cy), int(std::lround(r * 16)), c, cv::FILLED, cv::LINE_AA, kShift);
      break;
    case MarkerStyle::Square:
      ring(4, 45, r * 1.2, 0);
      break;
    case MarkerStyle::TriangleUp:
      ring(3, 0, r * 1.3, 0);
      break;
    case MarkerStyle::TriangleDown:
      ring(3, 180, r * 1.3, 0);
      break;
    case MarkerStyle::Diamond:
      ring(4, 0, r * 1.35, 0);
      break;
    case MarkerStyle::Plus:
      cv::line(img, fx(cx - r * 1.2, cy), fx(cx + r * 1.2, cy), c, stroke, cv::LINE_AA, kShift);
      cv::line(img, fx(cx, cy - r * 1.2), fx(cx, cy + r * 1.2), c, stroke, cv::LINE_AA, kShift);
      break;
    case MarkerStyle::X:
      cv::line(img, fx(cx - r, cy - r), fx(cx + r, cy + r), c, stroke, cv::LINE_AA, kShift);
      cv::line(img, fx(cx - r, cy + r), fx(cx + r, cy - r), c, stroke, cv::LINE_AA, kShift);
      break;
    case MarkerStyle::Star:
      ring(5, 0, r * 1.45, r * 0.6);
      break;
    case MarkerStyle::Pentagon:
      ring(5, 0, r * 1.2, 0);
      break;
  }
}

void draw_wedge(cv::Mat& img, double cx, double cy, double r, double start, double sweep,
                cv::Scalar color) {
  std::vector<cv::Point> pts;
  pts.push_back(fx(cx, cy));
  const int steps = std::max(2, int(std::ceil(sweep)));
  for (int i = 0; i <= steps; ++i) {
    const double a = (start + sweep * i / steps) * std::numbers::pi / 180.0;
    pts.push_back(fx(cx + r * std::sin(a), cy - r * std::cos(a)));
  }
  fill_poly(img, pts, color);
}

cv::Mat paint(const ChartData& data, const AppearanceSpec& app) {
  ensure_renderable(data, app);
  auto& ft = font_for(app.font_family);
  cv::Mat img;
  Painter measure(img, ft);
  const Frame f = build_frame(data, app, measure);
  const Style& st = f.style;
  const PlotLayout& L = f.layout;
  const RectD& P = L.plot;
  img = cv::Mat(app.height, app.width, CV_8UC3, st.bg);
  Painter p(img, ft);
  const ChartType type = data.chart_type;

  if (f.axes) {
    const double vspan = L.value_max - L.value_min;
    auto value_px = [&](double v) {
      return f.horizontal ? P.x + P.w * (v - L.value_min) / vspan
                          : P.y + P.h * (L.value_max - v) / vspan;
    };
    // Grid.
    for (double t : L.value_ticks) {
      const double q = value_px(t);
      if (f.horizontal) {
        cv::line(img, fx(q, P.y), fx(q, P.y + P.h), st.grid, 1, cv::LINE_AA, kShift);
      } else {
        cv::line(img, fx(P.x, q), fx(P.x + P.w, q), st.grid, 1, cv::LINE_AA, kShift);
      }
    }
    if (L.numeric_x) {
      for (double t : L.x_ticks) {
        const double q = P.x + P.w * (t - L.x_min) / (L.x_max - L.x_min);
        cv::line(img, fx(q, P.y), fx(q, P.y + P.h), st.grid, 1, cv::LINE_AA, kShift);
      }
    }

    // Marks.
    for (const auto& b : L.bars) {
      const Series& s = data.series[b.series];
      const cv::Point p0(int(std::lround(b.rect.x)), int(std::lround(b.rect.y)));
      const cv::Point p1(int(std::lround(b.rect.x + b.rect.w)), int(std::lround(b.rect.y + b.rect.h)));
      if (p1.x > p0.x && p1.y > p0.y) {
        cv::rectangle(img, cv::Rect(p0, p1), hex_bgr(s.color), cv::FILLED);
      }
    }
    if (!L.bars.empty() && L.value_min <= 0 && L.value_max >= 0) {
      const double z = value_px(0);
      if (f.horizontal) {
        cv::line(img, fx(z, P.y), fx(z, P.y + P.h), st.axis, 1, cv::LINE_AA, kShift);
      } else {
        cv::line(img, fx(P.x, z), fx(P.x + P.w, z), st.axis, 1, cv::LINE_AA, kShift);
      }
    }
    if (type == ChartType::Line) {
      for (std::size_t si = 0; si < data.series.size(); ++si) {
        std::vector<PointShape> pts;
        for (const auto& q : L.points) {
          if (q.series == si) pts.push_back(q);
        }
        std::stable_sort(pts.begin(), pts.end(),
                         [](const PointShape& a, const PointShape& b) { return a.px < b.px; });
        std::vector<cv::Point> poly;
        for (const auto& q : pts) poly.push_back(fx(q.px, q.py));
        cv::polylines(img, poly, false, hex_bgr(data.series[si].color), st.line_w, cv::LINE_AA, kShift);
      }
    }
    for (const auto& q : L.points) {
      draw_marker(img, app.marker_style, q.px, q.py, st.marker_r, hex_bgr(data.series[q.series].color));
    }

    // Frame and ticks.
    if (app.spines) {
      cv::rectangle(img, fx(P.x, P.y), fx(P.x + P.w, P.y + P.h), st.axis, 1, cv::LINE_AA, kShift);
    }
    for (std::size_t i = 0; i < L.value_ticks.size(); ++i) {
      const double q = value_px(L.value_ticks[i]);
      const std::string& t = f.value_tick_text[i];
      const int tw = p.width(t, st.tick_px);
      if (f.horizontal) {
        const double y = P.y + P.h;
        cv::line(img, fx(q, y), fx(q, y + st.tick_len), st.axis, 1, cv::LINE_AA, kShift);
        p.text(t, q - tw / 2.0, y + st.tick_len + 2, st.tick_px, st.ink);
      } else {
        cv::line(img, fx(P.x - st.tick_len, q), fx(P.x, q), st.axis, 1, cv::LINE_AA, kShift);
        p.text(t, P.x - st.tick_len - 3 - tw, q - st.tick_px * 0.55, st.tick_px, st.ink);
      }
    }
    if (L.numeric_x) {
      for (std::size_t i = 0; i < L.x_ticks.size(); ++i) {
        const double q = P.x + P.w * (L.x_ticks[i] - L.x_min) / (L.x_max - L.x_min);
        const std::string& t = f.x_tick_text[i];
        const double y = P.y + P.h;
        cv::line(img, fx(q, y), fx(q, y + st.tick_len), st.axis, 1, cv::LINE_AA, kShift);
        p.text(t, q - p.width(t, st.tick_px) / 2.0, y + st.tick_len + 2, st.tick_px, st.ink);
      }
    } else {
      const double n = double(std::max<std::size_t>(1, f.category_text.size()));
      for (std::size_t i = 0; i < f.category_text.size(); ++i) {
        const std::string& c = f.category_text[i];
        if (f.horizontal) {
          const double slot = P.h / n;
          const double cy = P.y + (double(i) + 0.5) * slot;
          cv::line(img, fx(P.x - st.tick_len, cy), fx(P.x, cy), st.axis, 1, cv::LINE_AA, kShift);
          p.text(c, P.x - st.tick_len - 3 - p.width(c, st.tick_px), cy - st.tick_px * 0.55, st.tick_px,
                 st.ink);
        } else {
          const double slot = P.w / n;
          const double cx = P.x + (double(i) + 0.5) * slot;
          const double y = P.y + P.h;
          cv::line(img, fx(cx, y), fx(cx, y + st.tick_len), st.axis, 1, cv::LINE_AA, kShift);
          if (f.rotate_categories) {
            p.text_down_from(c, cx, y + st.tick_len + 3, st.tick_px, st.ink, st.bg);
          } else {
            p.text(c, cx - p.width(c, st.tick_px) / 2.0, y + st.tick_len + 2, st.tick_px, st.ink);
          }
        }
      }
    }

    // Axis titles: x_label names the category axis, y_label the value axis.
    const std::string x_label = sanitize_utf8(data.x_label);
    const std::string y_label = sanitize_utf8(data.y_label);
    const std::string& bottom_title = f.horizontal ? y_label : x_label;
    const std::string& left_title = f.horizontal ? x_label : y_label;
    if (!bottom_title.empty()) {
      const std::string t = p.fit(bottom_title, st.label_px, P.w);
      p.text(t, P.x + (P.w - p.width(t, st.label_px)) / 2.0,
             app.height - st.pad - st.label_px * 1.2, st.label_px, st.ink);
    }
    if (!left_title.empty()) {
      const std::string t = p.fit(left_title, st.label_px, P.h);
      p.text_up(t, st.pad + st.label_px * 0.6, P.y + P.h / 2, st.label_px, st.ink, st.bg);
    }

    // Value annotations.
    if (app.show_numbers) {
      for (const auto& b : L.bars) {
        const Series& s = data.series[b.series];
        const std::string t = format_number(s.points[b.point].value);
        const int tw = p.width(t, st.number_px);
        const double v = s.points[b.point].value;
        if (is_stacked(type)) {
          const bool fits = f.horizontal ? (b.rect.w >= tw + 4 && b.rect.h >= st.number_px)
                                         : (b.rect.h >= st.number_px * 1.1 && b.rect.w >= tw + 2);
          if (fits) {
            p.text(t, b.rect.x + (b.rect.w - tw) / 2, b.rect.y + (b.rect.h - st.number_px) / 2,
                   st.number_px, text_on(hex_bgr(s.color)));
          }
        } else if (f.horizontal) {
          const double x = v >= 0 ? b.rect.x + b.rect.w + 3 : b.rect.x - 3 - tw;
          p.text(t, x, b.rect.y + (b.rect.h - st.number_px) / 2, st.number_px, st.ink);
        } else {
          const double y = v >= 0 ? b.rect.y - st.number_px * 1.15 : b.rect.y + b.rect.h + 2;
          p.text(t, b.rect.x + (b.rect.w - tw) / 2, y, st.number_px, st.ink);
        }
      }
      for (const auto& q : L.points) {
        const std::string t = format_number(data.series[q.series].points[q.point].value);
        p.text(t, q.px - p.width(t, st.number_px) / 2.0, q.py - st.marker_r - st.number_px * 1.2,
               st.number_px, st.ink);
      }
    }

    if (f.direct_labels) {
      for (std::size_t si = 0; si < data.series.size(); ++si) {
        const PointShape* last = nullptr;
        for (const auto& q : L.points) {
          if (q.series == si && (!last || q.px >= last->px)) last = &q;
        }
        if (!last) continue;
        p.text(f.direct_text[si], last->px + st.marker_r + 4, last->py - st.tick_px * 0.55, st.tick_px,
               hex_bgr(data.series[si].color));
      }
    }
  } else {
    const Series& s = data.series.front();
    for (const auto& w : L.wedges) {
      draw_wedge(img, L.pie_cx, L.pie_cy, L.pie_radius, w.start_deg, w.sweep_deg,
                 hex_bgr(point_fill(s, w.point)));
    }
    if (L.wedges.size() > 1) {
      for (const auto& w : L.wedges) {
        const double a = w.start_deg * std::numbers::pi / 180.0;
        cv::line(img, fx(L.pie_cx, L.pie_cy),
                 fx(L.pie_cx + L.pie_radius * std::sin(a), L.pie_cy - L.pie_radius * std::cos(a)), st.bg,
                 std::max(1, st.line_w - 1), cv::LINE_AA, kShift);
      }
    }
    if (app.spines) {
      cv::circle(img, fx(L.pie_cx, L.pie_cy), int(std::lround(L.pie_radius * 16)), st.axis, 1,
                 cv::LINE_AA, kShift);
    }
    if (app.show_numbers) {
      for (const auto& w : L.wedges) {
        const double a = (w.start_deg + w.sweep_deg / 2) * std::numbers::pi / 180.0;
        const double r = L.pie_radius * 0.68;
        const std::string t = format_number(s.points[w.point].value);
        const int tw = p.width(t, st.number_px);
        p.text(t, L.pie_cx + r * std::sin(a) - tw / 2.0,
               L.pie_cy - r * std::cos(a) - st.number_px * 0.55, st.number_px,
               text_on(hex_bgr(point_fill(s, w.point))));
      }
    }
  }

  // Legend.
  if (app.legend_mode != LegendMode::Absent) {
    const RectD& B = f.legend_box;
    cv::rectangle(img, fx(B.x, B.y), fx(B.x + B.w, B.y + B.h), st.bg, cv::FILLED, cv::LINE_AA, kShift);
    cv::rectangle(img, fx(B.x, B.y), fx(B.x + B.w, B.y + B.h), cv::Scalar(180, 180, 180), 1, cv::LINE_AA,
                  kShift);
    const double inner = st.legend_px * 0.6;
    const double row = legend_row_h(st);
    const double sw = swatch_w(st, f.swatch);
    for (std::size_t i = 0; i < f.legend.size(); ++i) {
      const auto& e = f.legend[i];
      const double cy = B.y + inner * 0.6 + row * (double(i) + 0.5);
      const double x0 = B.x + inner;
      switch (f.swatch) {
        case SwatchKind::Box:
          cv::rectangle(img, fx(x0, cy - sw / 2), fx(x0 + sw, cy + sw / 2), e.color, cv::FILLED,
                        cv::LINE_AA, kShift);
          break;
        case SwatchKind::Line:
          cv::line(img, fx(x0, cy), fx(x0 + sw, cy), e.color, st.line_w, cv::LINE_AA, kShift);
          draw_marker(img, app.marker_style, x0 + sw / 2, cy, st.marker_r, e.color);
          break;
        case SwatchKind::Marker:
          draw_marker(img, app.marker_style, x0 + sw / 2, cy, st.marker_r, e.color);
          break;
      }
      p.text(e.text, x0 + sw + inner, cy - st.legend_px * 0.55, st.legend_px, st.ink);
    }
  }

  if (!f.title.empty()) p.text(f.title, f.title_x, f.title_top, st.title_px, st.ink);
  return img;
}

std::uint64_t pixel_hash(const cv::Mat& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (std::uint32_t v : {std::uint32_t(img.cols), std::uint32_t(img.rows)}) {
    for (int k = 0; k < 4; ++k) mix(static_cast<unsigned char>(v >> (8 * k)));
  }
  for (int r = 0; r < img.rows; ++r) {
    const unsigned char* row = img.ptr<unsigned char>(r);
    const std::size_t n = std::size_t(img.cols) * img.elemSize();
    for (std::size_t i = 0; i < n; ++i) mix(row[i]);
  }
  return h;
}

}  // namespace

std::string_view title_mode_name(TitleMode mode) { return kTitleNames.at(std::size_t(mode)); }
std::optional<TitleMode> title_mode_from_name(std::string_view name) {
  return enum_from_name<TitleMode>(kTitleNames, name);
}
std::string_view legend_mode_name(LegendMode mode) { return kLegendNames.at(std::size_t(mode)); }
std::optional<LegendMode> legend_mode_from_name(std::string_view name) {
  return enum_from_name<LegendMode>(kLegendNames, name);
}
std::string_view marker_style_name(MarkerStyle style) { return kMarkerNames.at(std::size_t(style)); }
std::optional<MarkerStyle> marker_style_from_name(std::string_view name) {
  return enum_from_name<MarkerStyle>(kMarkerNames, name);
}

std::span<const FontFace> font_faces() { return kFaces; }

bool legend_required(ChartType type) { return is_multi_series_bar(type) || type == ChartType::Pie; }

bool uses_markers(ChartType type) { return type == ChartType::Line || type == ChartType::Scatter; }

std::vector<std::string> appearance_problems(ChartType type, const AppearanceSpec& app) {
  std::vector<std::string> out;
  if (!find_face(app.font_family)) out.push_back("unknown font family '" + app.font_family + "'");
  if (std::find(kFontScales.begin(), kFontScales.end(), app.font_scale) == kFontScales.end()) {
    out.push_back("font_scale must be 0.85, 1.0 or 1.2");
  }
  if (!canvas_ok(app.width, app.height)) {
    out.push_back("canvas " + std::to_string(app.width) + "x" + std::to_string(app.height) +
                  " is not one of the nine supported sizes");
  }
  if (legend_required(type) && app.legend_mode == LegendMode::Absent) {
    out.push_back(std::string(chart_type_name(type)) + " charts need a legend");
  }
  if (uses_markers(type) && app.marker_style == MarkerStyle::None) {
    out.push_back(std::string(chart_type_name(type)) + " charts need a marker style");
  }
  if (!uses_markers(type) && app.marker_style != MarkerStyle::None) {
    out.push_back("markers are only drawn on line and scatter charts");
  }
  return out;
}

json to_json(const AppearanceSpec& app) {
  return json{
      {"font_family", app.font_family},
      {"font_scale", app.font_scale},
      {"title_mode", title_mode_name(app.title_mode)},
      {"legend_mode", legend_mode_name(app.legend_mode)},
      {"marker_style", marker_style_name(app.marker_style)},
      {"spines", app.spines},
      {"show_numbers", app.show_numbers},
      {"canvas", {{"width", app.width}, {"height", app.height}}},
      {"palette_jitter_seed", app.palette_jitter_seed},
  };
}

AppearanceSpec appearance_from_json(const json& j) {
  try {
    AppearanceSpec app;
    app.font_family = j.at("font_family").get<std::string>();
    app.font_scale = j.at("font_scale").get<double>();
    const auto title = title_mode_from_name(j.at("title_mode").get<std::string>());
    const auto legend = legend_mode_from_name(j.at("legend_mode").get<std::string>());
    const auto marker = marker_style_from_name(j.at("marker_style").get<std::string>());
    if (!title || !legend || !marker) throw ParseFailure("unknown appearance enum value");
    app.title_mode = *title;
    app.legend_mode = *legend;
    app.marker_style = *marker;
    app.spines = j.at("spines").get<bool>();
    app.show_numbers = j.at("show_numbers").get<bool>();
    app.width = j.at("canvas").at("width").get<int>();
    app.height = j.at("canvas").at("height").get<int>();
    app.palette_jitter_seed = j.at("palette_jitter_seed").get<std::uint64_t>();
    return app;
  } catch (const json::exception& e) {
    throw ParseFailure(std::string("appearance spec: ") + e.what());
  }
}

AppearanceSpec sample_appearance(ChartType type, Rng& rng) {
  AppearanceSpec app;
  app.font_family = std::string(kFaces[rng.below(kFaces.size())].family);
  app.font_scale = kFontScales[rng.below(kFontScales.size())];
  app.title_mode = kAllTitleModes[rng.below(kAllTitleModes.size())];
  app.legend_mode = legend_required(type) ? kAllLegendModes[1 + rng.below(kAllLegendModes.size() - 1)]
                                          : kAllLegendModes[rng.below(kAllLegendModes.size())];
  app.marker_style = uses_markers(type)
                         ? kAllMarkerStyles[1 + rng.below(kAllMarkerStyles.size() - 1)]
                         : MarkerStyle::None;
  app.spines = rng.below(2) == 1;
  app.show_numbers = rng.below(2) == 1;
  app.width = kCanvasWidths[rng.below(kCanvasWidths.size())];
  app.height = canvas_height(app.width, kAspects[rng.below(kAspects.size())]);
  app.palette_jitter_seed = rng.next();
  return app;
}

AppearanceSpec fixed_appearance(ChartType type) {
  AppearanceSpec app;
  app.legend_mode = LegendMode::UpperRight;
  app.marker_style = uses_markers(type) ? MarkerStyle::Circle : MarkerStyle::None;
  return app;
}

std::uint64_t appearance_space_size(ChartType type) {
  const std::uint64_t legend = legend_required(type) ? kAllLegendModes.size() - 1 : kAllLegendModes.size();
  const std::uint64_t marker = uses_markers(type) ? kAllMarkerStyles.size() - 1 : 1;
  const std::uint64_t canvas = kCanvasWidths.size() * kAspects.size();
  return kFaces.size() * kFontScales.size() * kAllTitleModes.size() * legend * marker * 2 * 2 * canvas;
}

PlotLayout compute_layout(const ChartData& data, const AppearanceSpec& app) {
  ensure_renderable(data, app);
  cv::Mat none;
  Painter measure(none, font_for(app.font_family));
  return build_frame(data, app, measure).layout;
}

RenderedFigure render_figure(const ChartData& data, const AppearanceSpec& app) {
  const cv::Mat img = paint(data, app);
  RenderedFigure out;
  out.width = img.cols;
  out.height = img.rows;
  out.content_hash = pixel_hash(img);
  if (!cv::imencode(".png", img, out.png_bytes, {cv::IMWRITE_PNG_COMPRESSION, 3})) {
    throw RenderError("PNG encoding failed");
  }
  return out;
}

std::uint64_t render_hash(const ChartData& data, const AppearanceSpec& app) {
  return pixel_hash(paint(data, app));
}

std::uint64_t image_hash(const std::vector<unsigned char>& png_bytes) {
  const cv::Mat img = cv::imdecode(png_bytes, cv::IMREAD_COLOR);
  if (img.empty()) throw RenderError("not a decodable image");
  return pixel_hash(img);
}

RenderBatchResult render_batch(std::span<const RenderJob> jobs, int parallelism) {
  if (parallelism < 1) throw ConfigError("parallelism must be at least 1");
  RenderBatchResult out;
  out.figures.resize(jobs.size());
  std::vector<std::optional<std::string>> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out.figures[i] = render_figure(jobs[i].data, jobs[i].appearance);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(std::size_t(parallelism), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) out.errors.push_back({i, *errors[i]});
  }
  return out;
}

}  // namespace figsynth
