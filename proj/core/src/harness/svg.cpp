#include "opvi/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "opvi/harness/trace_io.hpp"

namespace opvi {

namespace {

constexpr double kCanvas = 480.0;
constexpr double kMargin = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string svg_open(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"white\"/>\n";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<double> contour_levels(const MixtureGrid& grid, std::span<const double> masses) {
  const auto n = static_cast<std::size_t>(grid.cell_mass.size());
  if (n == 0) throw ConfigError("contour levels need a nonempty grid");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double* mass = grid.cell_mass.data();
  const double* logd = grid.log_density.data();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logd[a] > logd[b]; });
  std::vector<double> levels;
  for (double q : masses) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("contour masses must lie in (0, 1)");
    double cum = 0.0;
    double level = logd[order.back()];
    for (std::size_t idx : order) {
      cum += mass[idx];
      if (cum >= q) {
        level = logd[idx];
        break;
      }
    }
    levels.push_back(level);
  }
  return levels;
}

std::vector<Segment> marching_squares(const Matrix& f, double level) {
  std::vector<Segment> out;
  // Linear interpolation of the crossing between two corners.
  auto cross = [&](double a, double b) { return (level - a) / (b - a); };
  for (Eigen::Index r = 0; r + 1 < f.rows(); ++r) {
    for (Eigen::Index c = 0; c + 1 < f.cols(); ++c) {
      const double v00 = f(r, c), v01 = f(r, c + 1), v11 = f(r + 1, c + 1), v10 = f(r + 1, c);
      const int code = (v00 >= level ? 1 : 0) | (v01 >= level ? 2 : 0) | (v11 >= level ? 4 : 0) |
                       (v10 >= level ? 8 : 0);
      if (code == 0 || code == 15) continue;
      const double x = static_cast<double>(c);
      const double y = static_cast<double>(r);
      // Edge midpoints: top (r), right (c+1), bottom (r+1), left (c).
      const std::array<std::array<double, 2>, 4> e = {{
          {x + cross(v00, v01), y},
          {x + 1.0, y + cross(v01, v11)},
          {x + cross(v10, v11), y + 1.0},
          {x, y + cross(v00, v10)},
      }};
      auto seg = [&](int a, int b) { out.push_back({e[a][0], e[a][1], e[b][0], e[b][1]}); };
      switch (code) {
        case 1: case 14: seg(3, 0); break;
        case 2: case 13: seg(0, 1); break;
        case 3: case 12: seg(3, 1); break;
        case 4: case 11: seg(1, 2); break;
        case 6: case 9: seg(0, 2); break;
        case 7: case 8: seg(3, 2); break;
        case 5: {
          const bool centre = 0.25 * (v00 + v01 + v11 + v10) >= level;
          if (centre) { seg(3, 2); seg(0, 1); } else { seg(3, 0); seg(1, 2); }
          break;
        }
        case 10: {
          const bool centre = 0.25 * (v00 + v01 + v11 + v10) >= level;
          if (centre) { seg(3, 0); seg(1, 2); } else { seg(0, 1); seg(3, 2); }
          break;
        }
        default: break;
      }
    }
  }
  return out;
}

std::string scatter_svg(const ParticleMatrix& particles, const GridWindow& w, const MixtureGrid* grid) {
  if (particles.cols() != 2) throw ConfigError("scatter plots need 2-D particles");
  const double size = kCanvas + 2 * kMargin;
  const double sx = kCanvas / (w.theta1_hi - w.theta1_lo);
  const double sy = kCanvas / (w.theta2_hi - w.theta2_lo);
  auto px = [&](double t1) { return kMargin + (t1 - w.theta1_lo) * sx; };
  auto py = [&](double t2) { return kMargin + (w.theta2_hi - t2) * sy; };

  std::string s = svg_open(size, size);
  s += "<defs><clipPath id=\"plot\"><rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" +
       num(kCanvas) + "\" height=\"" + num(kCanvas) + "\"/></clipPath></defs>\n";
  s += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" + num(kCanvas) + "\" height=\"" +
       num(kCanvas) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(kMargin + kCanvas / 2) + "\" y=\"" + num(size - 8) +
       "\" text-anchor=\"middle\" font-size=\"12\">theta1 [" + num(w.theta1_lo) + ", " + num(w.theta1_hi) +
       "]</text>\n";
  s += "<text x=\"12\" y=\"" + num(kMargin + kCanvas / 2) + "\" font-size=\"12\" transform=\"rotate(-90 12 " +
       num(kMargin + kCanvas / 2) + ")\" text-anchor=\"middle\">theta2 [" + num(w.theta2_lo) + ", " +
       num(w.theta2_hi) + "]</text>\n";

  if (grid != nullptr) {
    const auto levels = contour_levels(*grid);
    const char* colours[] = {"#1f3a93", "#3a6fd8", "#9ab8f0"};
    const double g1 = (grid->window.theta1_hi - grid->window.theta1_lo) / static_cast<double>(grid->resolution);
    const double g2 = (grid->window.theta2_hi - grid->window.theta2_lo) / static_cast<double>(grid->resolution);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      std::string d;
      for (const auto& sg : marching_squares(grid->log_density, levels[l])) {
        // Grid index i maps to the cell centre lo + (i + 0.5) * step.
        const double a1 = grid->window.theta1_lo + (sg.x0 + 0.5) * g1;
        const double a2 = grid->window.theta2_lo + (sg.y0 + 0.5) * g2;
        const double b1 = grid->window.theta1_lo + (sg.x1 + 0.5) * g1;
        const double b2 = grid->window.theta2_lo + (sg.y1 + 0.5) * g2;
        d += "M" + num(px(a1)) + " " + num(py(a2)) + "L" + num(px(b1)) + " " + num(py(b2));
      }
      s += "<path class=\"contour\" data-mass=\"" + num(kContourMasses[l % kContourMasses.size()]) +
           "\" clip-path=\"url(#plot)\" fill=\"none\" stroke=\"" + colours[l % 3] + "\" stroke-width=\"1\" d=\"" +
           d + "\"/>\n";
    }
  }

  s += "<g clip-path=\"url(#plot)\" fill=\"#d62728\" fill-opacity=\"0.7\">\n";
  for (Eigen::Index i = 0; i < particles.rows(); ++i) {
    s += "<circle cx=\"" + num(px(particles(i, 0))) + "\" cy=\"" + num(py(particles(i, 1))) + "\" r=\"3\"/>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

std::string series_svg(const std::vector<Series>& series) {
  if (series.empty()) throw ConfigError("nothing to plot");
  const double panel_h = 200.0;
  const double width = kCanvas + 2 * kMargin;
  const double height = static_cast<double>(series.size()) * (panel_h + kMargin) + kMargin;
  std::string s = svg_open(width, height);
  for (std::size_t p = 0; p < series.size(); ++p) {
    const Series& ser = series[p];
    if (ser.x.size() != ser.y.size() || ser.x.empty()) throw ConfigError("series '" + ser.name + "' is empty or ragged");
    const double top = kMargin + static_cast<double>(p) * (panel_h + kMargin);
    const auto [xmin, xmax] = std::minmax_element(ser.x.begin(), ser.x.end());
    const auto [ymin, ymax] = std::minmax_element(ser.y.begin(), ser.y.end());
    const double xr = *xmax > *xmin ? *xmax - *xmin : 1.0;
    const double yr = *ymax > *ymin ? *ymax - *ymin : 1.0;
    s += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(top) + "\" width=\"" + num(kCanvas) + "\" height=\"" +
         num(panel_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(kMargin) + "\" y=\"" + num(top - 6) + "\" font-size=\"12\">" + escape(ser.name) +
         " [" + format_double(*ymin) + ", " + format_double(*ymax) + "]</text>\n";
    std::string d;
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      const double X = kMargin + (ser.x[i] - *xmin) / xr * kCanvas;
      const double Y = top + panel_h - (ser.y[i] - *ymin) / yr * panel_h;
      d += (i ? "L" : "M") + num(X) + " " + num(Y);
    }
    s += "<path fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.2\" d=\"" + d + "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string trace_svg(const std::vector<RoundTrace>& trace) {
  using Getter = std::optional<double> (*)(const RoundTrace&);
  const std::vector<std::pair<std::string, Getter>> cols = {
      {"batch_size", [](const RoundTrace& r) -> std::optional<double> { return static_cast<double>(r.batch_size); }},
      {"grad_error", [](const RoundTrace& r) { return r.grad_error; }},
      {"objective", [](const RoundTrace& r) { return r.objective; }},
      {"regret_cum", [](const RoundTrace& r) { return r.regret_cum; }},
      {"energy_dist", [](const RoundTrace& r) { return r.energy_dist; }},
      {"rmse", [](const RoundTrace& r) { return r.rmse; }},
      {"test_ll", [](const RoundTrace& r) { return r.test_ll; }},
  };
  std::vector<Series> series;
  for (const auto& [name, get] : cols) {
    Series s{name, {}, {}};
    for (const auto& r : trace) {
      if (const auto v = get(r); v && std::isfinite(*v)) {
        s.x.push_back(static_cast<double>(r.t));
        s.y.push_back(*v);
      }
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  return series_svg(series);
}

}  // namespace opvi
