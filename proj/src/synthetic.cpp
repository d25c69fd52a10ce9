#include "figsynth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "figsynth/color.hpp"

namespace figsynth {

namespace {

struct CategoryPool {
  const char* axis;
  std::vector<std::string> labels;
};

const std::vector<CategoryPool>& category_pools() {
  static const std::vector<CategoryPool> pools = {
      {"Country", {"USA", "China", "India", "Brazil", "Germany", "Japan", "France", "Canada",
                   "Mexico", "Italy", "Spain", "Kenya", "Egypt", "Norway", "Chile"}},
      {"Region", {"North", "South", "East", "West", "Central", "Northeast", "Southwest",
                  "Midwest", "Coastal", "Mountain"}},
      {"Product", {"Laptops", "Phones", "Tablets", "Monitors", "Printers", "Cameras",
                   "Headphones", "Speakers", "Routers", "Keyboards", "Watches", "Drones"}},
      {"Department", {"Sales", "Marketing", "Finance", "Legal", "Research", "Support",
                      "Operations", "Design", "Logistics", "HR", "IT", "Procurement"}},
      {"City", {"Paris", "Tokyo", "Lagos", "Lima", "Oslo", "Seoul", "Cairo", "Dubai",
                "Sydney", "Toronto", "Madrid", "Berlin", "Mumbai", "Nairobi"}},
      {"Fruit", {"Apples", "Bananas", "Cherries", "Grapes", "Mangoes", "Oranges", "Pears",
                 "Plums", "Kiwis", "Lemons", "Peaches", "Melons"}},
      {"Sector", {"Energy", "Healthcare", "Retail", "Transport", "Agriculture", "Tourism",
                  "Mining", "Education", "Banking", "Telecom", "Media", "Construction"}},
      {"Platform", {"Web", "iOS", "Android", "Desktop", "Console", "Smart TV", "Kiosk",
                    "Wearable"}},
      {"Age group", {"0-17", "18-24", "25-34", "35-44", "45-54", "55-64", "65-74", "75+"}},
      {"Channel", {"Email", "Search", "Social", "Referral", "Direct", "Display", "Video",
                   "Podcast", "Print", "Radio"}},
  };
  return pools;
}

const std::vector<std::string>& months() {
  static const std::vector<std::string> m = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                             "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  return m;
}

const std::vector<std::string>& value_axes() {
  static const std::vector<std::string> v = {
      "Revenue (million USD)", "Units sold", "Share (%)", "Visitors (thousands)",
      "Cost (USD)",            "Score",      "Count",     "Growth rate (%)",
      "Hours",                 "Output (tons)", "Users (millions)", "Index value"};
  return v;
}

const std::vector<std::string>& series_names() {
  static const std::vector<std::string> v = {
      "Online", "In-store", "Domestic", "Export", "Team A", "Team B", "Team C", "Urban",
      "Rural",  "Men",      "Women",    "Basic",  "Premium", "Public", "Private",
      "Morning", "Evening", "Forecast", "Actual", "Target"};
  return v;
}

struct TopicParts {
  std::vector<std::string> subjects;
  std::vector<std::string> measures;
  std::vector<std::string> dimensions;
  std::vector<std::string> frames;
};

const TopicParts& topic_parts() {
  static const TopicParts parts = {
      {"Coffee", "Electric vehicle", "Smartphone", "Wind energy", "Hospital", "Airline",
       "Streaming service", "Bakery", "Bicycle", "Solar panel", "Textbook", "Craft beer",
       "Video game", "Organic produce", "Public library", "Cloud storage", "Museum",
       "Fitness app", "Rail freight", "Tea", "Cinema", "Dental clinic", "Pet food",
       "Water utility", "Online course", "Hotel", "Recycling program", "Farmers market",
       "Cybersecurity", "Wine", "Ride sharing", "Podcast", "Startup", "Chocolate",
       "Housing", "Vaccine", "Marathon", "Newspaper", "Drone delivery", "Ice cream"},
      {"sales", "revenue", "adoption", "usage", "wait times", "satisfaction scores",
       "market share", "subscriptions", "production", "prices", "employment", "exports",
       "downloads", "attendance", "emissions", "returns", "complaints", "budget",
       "profit margins", "energy use", "ratings", "traffic", "costs", "growth"},
      {"by region", "by country", "by month", "by age group", "by product line",
       "by quarter", "by city", "by channel", "by department", "by year", "by platform",
       "by income bracket", "by season", "by weekday", "by store format", "by segment",
       "by customer type", "by sector", "by education level", "by vehicle type"},
      {"", " in 2019", " in 2020", " in 2021", " in 2022", " in 2023", " over the last decade",
       " during the pandemic", " in Europe", " in Asia", " in North America",
       " in rural areas"},
  };
  return parts;
}

double round_places(double v, int places) {
  const double scale = std::pow(10.0, places);
  return std::round(v * scale) / scale;
}

double draw_value(Rng& rng, double lo, double hi, int places) {
  double v = round_places(rng.uniform(lo, hi), places);
  if (v == 0.0) v = 0.0;  // drop negative zero
  return v;
}

std::vector<std::string> draw_colors(Rng& rng, std::size_t n) {
  const auto swatches = representative_colors();
  std::vector<std::size_t> order;
  // Black reads poorly as a fill next to axis ink; keep it for large palettes only.
  for (std::size_t i = 0; i < swatches.size(); ++i) {
    if (swatches[i].name != "black" || n > swatches.size() - 1) order.push_back(i);
  }
  rng.shuffle(order);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const NamedColor& base = swatches[order[i % order.size()]];
    auto jitter = [&](std::uint8_t c) {
      return static_cast<std::uint8_t>(std::clamp(int(c) + int(rng.between(-10, 10)), 0, 255));
    };
    Rgb c{jitter(base.rgb.r), jitter(base.rgb.g), jitter(base.rgb.b)};
    if (nearest_color_name(c) != base.name) c = base.rgb;
    out.push_back(to_hex(c));
  }
  return out;
}

std::vector<std::string> draw_labels(Rng& rng, std::size_t n, std::string& axis) {
  const int kind = static_cast<int>(rng.below(4));
  if (kind == 0) {
    // Consecutive years.
    const long long start = rng.between(1990, 2024 - static_cast<long long>(n));
    axis = "Year";
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(start + (long long)i));
    return out;
  }
  if (kind == 1 && n <= 12) {
    axis = "Month";
    const std::size_t start = rng.below(12 - n + 1);
    return {months().begin() + start, months().begin() + start + n};
  }
  const auto& pools = category_pools();
  const CategoryPool* pool = &pools[rng.below(pools.size())];
  while (pool->labels.size() < n) pool = &pools[rng.below(pools.size())];
  axis = pool->axis;
  std::vector<std::string> out;
  for (std::size_t idx : rng.sample_indices(pool->labels.size(), n)) {
    out.push_back(pool->labels[idx]);
  }
  return out;
}

std::vector<std::string> draw_series_names(Rng& rng, std::size_t n) {
  const auto& names = series_names();
  std::vector<std::string> out;
  for (std::size_t idx : rng.sample_indices(names.size(), n)) out.push_back(names[idx]);
  return out;
}

std::string title_from_topic(const std::string& topic) {
  if (topic.empty()) return "Untitled";
  std::string t = topic;
  if (t[0] >= 'a' && t[0] <= 'z') t[0] = static_cast<char>(t[0] - 'a' + 'A');
  return t;
}

}  // namespace

ChartData random_chart_data(ChartType type, Rng& rng, const std::string& topic) {
  ChartData data;
  data.chart_type = type;
  data.topic = topic;
  data.title = title_from_topic(topic);
  data.y_label = rng.pick(value_axes());

  const int places = static_cast<int>(rng.below(3));
  const double scale = std::pow(10.0, static_cast<double>(rng.between(1, 3)));

  if (type == ChartType::Pie) {
    const std::size_t n = static_cast<std::size_t>(rng.between(2, 7));
    std::string axis;
    auto labels = draw_labels(rng, n, axis);
    data.x_label = axis;
    const auto colors = draw_colors(rng, n + 1);
    Series s{"Share", colors[n], {}};
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::max(draw_value(rng, scale * 0.05, scale, places),
                                std::pow(10.0, -places));
      s.points.push_back({labels[i], std::nullopt, v, colors[i]});
    }
    data.series.push_back(std::move(s));
    return data;
  }

  if (type == ChartType::Scatter) {
    const std::size_t n_series = static_cast<std::size_t>(rng.between(1, 4));
    const auto names = draw_series_names(rng, n_series);
    const auto colors = draw_colors(rng, n_series);
    const double x_lo = static_cast<double>(rng.between(0, 50));
    const double x_span = std::pow(10.0, static_cast<double>(rng.between(1, 2)));
    data.x_label = rng.pick(value_axes());
    for (std::size_t si = 0; si < n_series; ++si) {
      Series s{names[si], colors[si], {}};
      const std::size_t n = static_cast<std::size_t>(rng.between(5, 15));
      for (std::size_t i = 0; i < n; ++i) {
        const double x = draw_value(rng, x_lo, x_lo + x_span, 1);
        s.points.push_back({std::nullopt, x, draw_value(rng, 0, scale, places), std::nullopt});
      }
      data.series.push_back(std::move(s));
    }
    return data;
  }

  if (type == ChartType::Line) {
    const std::size_t n_series = static_cast<std::size_t>(rng.between(1, 4));
    const std::size_t n = static_cast<std::size_t>(rng.between(3, 12));
    const auto names = draw_series_names(rng, n_series);
    const auto colors = draw_colors(rng, n_series);
    const bool numeric_x = rng.chance(0.25);
    std::string axis;
    std::vector<std::string> labels;
    std::vector<double> xs;
    if (numeric_x) {
      const double step = std::pow(10.0, static_cast<double>(rng.between(-1, 1)));
      const double start = round_places(rng.uniform(0, 100), 1);
      for (std::size_t i = 0; i < n; ++i) xs.push_back(round_places(start + step * i, 1));
      axis = "Time (s)";
    } else {
      labels = draw_labels(rng, n, axis);
    }
    data.x_label = axis;
    for (std::size_t si = 0; si < n_series; ++si) {
      Series s{names[si], colors[si], {}};
      double level = rng.uniform(0.2, 0.8) * scale;
      for (std::size_t i = 0; i < n; ++i) {
        level = std::clamp(level + rng.uniform(-0.15, 0.15) * scale, 0.0, scale);
        DataPoint p;
        if (numeric_x) {
          p.x = xs[i];
        } else {
          p.label = labels[i];
        }
        p.value = round_places(level, places);
        if (p.value == 0.0) p.value = 0.0;
        s.points.push_back(std::move(p));
      }
      data.series.push_back(std::move(s));
    }
    return data;
  }

  if (is_multi_series_bar(type)) {
    const std::size_t n_series = static_cast<std::size_t>(rng.between(2, 5));
    const std::size_t n = static_cast<std::size_t>(rng.between(2, 8));
    std::string axis;
    const auto labels = draw_labels(rng, n, axis);
    data.x_label = axis;
    const auto names = draw_series_names(rng, n_series);
    const auto colors = draw_colors(rng, n_series);
    for (std::size_t si = 0; si < n_series; ++si) {
      Series s{names[si], colors[si], {}};
      for (std::size_t i = 0; i < n; ++i) {
        s.points.push_back({labels[i], std::nullopt, draw_value(rng, 0, scale, places),
                            std::nullopt});
      }
      data.series.push_back(std::move(s));
    }
    return data;
  }

  // Single-series bars.
  const std::size_t n = static_cast<std::size_t>(rng.between(3, 12));
  std::string axis;
  const auto labels = draw_labels(rng, n, axis);
  data.x_label = axis;
  const auto colors = draw_colors(rng, 1);
  Series s{draw_series_names(rng, 1).front(), colors[0], {}};
  const double lo = type == ChartType::DivergingBar ? -scale : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.points.push_back({labels[i], std::nullopt, draw_value(rng, lo, scale, places),
                        std::nullopt});
  }
  if (type == ChartType::DivergingBar) {
    const double unit = std::pow(10.0, -places);
    const bool pos = std::any_of(s.points.begin(), s.points.end(),
                                 [](const DataPoint& p) { return p.value > 0; });
    const bool neg = std::any_of(s.points.begin(), s.points.end(),
                                 [](const DataPoint& p) { return p.value < 0; });
    if (!pos || !neg) {
      s.points[0].value = std::max(std::fabs(s.points[0].value), unit);
      s.points[1].value = -std::max(std::fabs(s.points[1].value), unit);
    }
  }
  data.series.push_back(std::move(s));
  return data;
}

std::string random_topic(Rng& rng) {
  const auto& parts = topic_parts();
  return rng.pick(parts.subjects) + " " + rng.pick(parts.measures) + " " +
         rng.pick(parts.dimensions) + rng.pick(parts.frames);
}

}  // namespace figsynth
