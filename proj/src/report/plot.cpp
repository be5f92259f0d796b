#include "pqa/report/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "pqa/erp/image.hpp"
#include "pqa/io/png_io.hpp"

namespace pqa::report {

namespace {

struct Rgb {
  float r, g, b;
};

constexpr Rgb kWhite{1.0f, 1.0f, 1.0f};
constexpr Rgb kBlack{0.1f, 0.1f, 0.1f};
constexpr Rgb kGrid{0.85f, 0.85f, 0.85f};
constexpr Rgb kPoint{0.15f, 0.35f, 0.8f};
constexpr Rgb kCurve{0.85f, 0.2f, 0.15f};

// 5x7 glyphs, one row per byte (low 5 bits), top row first.
const std::map<char, std::array<uint8_t, 7>> kFont = {
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
    {'e', {0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e}},
};

void set_px(erp::Image& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  img.at(0, y, x) = c.r;
  img.at(1, y, x) = c.g;
  img.at(2, y, x) = c.b;
}

void fill_rect(erp::Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set_px(img, x, y, c);
}

void fill_disc(erp::Image& img, int cx, int cy, int r, Rgb c) {
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx * dx + dy * dy <= r * r) set_px(img, cx + dx, cy + dy, c);
}

void draw_line(erp::Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    set_px(img, static_cast<int>(std::lround(x0 + t * (x1 - x0))),
           static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
  }
}

void draw_text(erp::Image& img, int x, int y, const std::string& s, Rgb c) {
  int cx = x;
  for (char ch : s) {
    auto it = kFont.find(ch);
    if (it != kFont.end()) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (it->second[static_cast<size_t>(row)] & (1u << (4 - col)))
            set_px(img, cx + col, y + row, c);
    }
    cx += 6;
  }
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  int px0, px1, py0, py1;  // plot area in pixels; py0 is the top

  int to_px(double v) const {
    return px0 + static_cast<int>(std::lround((v - x_lo) / (x_hi - x_lo) * (px1 - px0)));
  }
  int to_py(double v) const {
    return py1 - static_cast<int>(std::lround((v - y_lo) / (y_hi - y_lo) * (py1 - py0)));
  }
};

Frame make_frame(const std::vector<double>& x, const std::vector<double>& y,
                 const stats::LogisticParams& rho, int w, int h) {
  Frame f{};
  f.x_lo = *std::min_element(x.begin(), x.end());
  f.x_hi = *std::max_element(x.begin(), x.end());
  f.y_lo = *std::min_element(y.begin(), y.end());
  f.y_hi = *std::max_element(y.begin(), y.end());
  // include the curve's span over the x range
  for (int i = 0; i <= 64; ++i) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * i / 64.0;
    const double yv = stats::logistic_eval(rho, xv);
    f.y_lo = std::min(f.y_lo, yv);
    f.y_hi = std::max(f.y_hi, yv);
  }
  const double xpad = (f.x_hi - f.x_lo) * 0.05 + 1e-12;
  const double ypad = (f.y_hi - f.y_lo) * 0.05 + 1e-12;
  f.x_lo -= xpad;
  f.x_hi += xpad;
  f.y_lo -= ypad;
  f.y_hi += ypad;
  f.px0 = 70;
  f.px1 = w - 20;
  f.py0 = 20;
  f.py1 = h - 50;
  return f;
}

}  // namespace

void render_scatter_png(const std::string& path, const std::vector<double>& x,
                        const std::vector<double>& y, const stats::LogisticParams& rho,
                        const PlotConfig& pc) {
  if (x.size() != y.size()) throw std::invalid_argument("plot: length mismatch");
  if (x.empty()) throw std::invalid_argument("plot: empty data");
  erp::Image img(3, pc.height, pc.width);
  fill_rect(img, 0, 0, pc.width - 1, pc.height - 1, kWhite);
  const Frame f = make_frame(x, y, rho, pc.width, pc.height);

  // grid, ticks and labels
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * i / 4.0;
    const double yv = f.y_lo + (f.y_hi - f.y_lo) * i / 4.0;
    const int px = f.to_px(xv), py = f.to_py(yv);
    draw_line(img, px, f.py0, px, f.py1, kGrid);
    draw_line(img, f.px0, py, f.px1, py, kGrid);
    const std::string xs = fmt_tick(xv), ys = fmt_tick(yv);
    draw_text(img, px - static_cast<int>(xs.size()) * 3, f.py1 + 8, xs, kBlack);
    draw_text(img, f.px0 - 8 - static_cast<int>(ys.size()) * 6, py - 3, ys, kBlack);
  }
  draw_line(img, f.px0, f.py0, f.px0, f.py1, kBlack);
  draw_line(img, f.px0, f.py1, f.px1, f.py1, kBlack);

  // fitted curve, densely sampled
  const int n_seg = 2 * (f.px1 - f.px0);
  int prev_px = 0, prev_py = 0;
  for (int i = 0; i <= n_seg; ++i) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * i / n_seg;
    const int px = f.to_px(xv), py = f.to_py(stats::logistic_eval(rho, xv));
    if (i > 0) draw_line(img, prev_px, prev_py, px, py, kCurve);
    prev_px = px;
    prev_py = py;
  }

  for (size_t i = 0; i < x.size(); ++i)
    fill_disc(img, f.to_px(x[i]), f.to_py(y[i]), 3, kPoint);

  io::save_png(path, img, 8);
}

void render_scatter_svg(const std::string& path, const std::vector<double>& x,
                        const std::vector<double>& y, const stats::LogisticParams& rho,
                        const PlotConfig& pc) {
  if (x.size() != y.size()) throw std::invalid_argument("plot: length mismatch");
  if (x.empty()) throw std::invalid_argument("plot: empty data");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write svg: " + path);
  const Frame f = make_frame(x, y, rho, pc.width, pc.height);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pc.width << "\" height=\""
      << pc.height << "\" viewBox=\"0 0 " << pc.width << ' ' << pc.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * i / 4.0;
    const double yv = f.y_lo + (f.y_hi - f.y_lo) * i / 4.0;
    const int px = f.to_px(xv), py = f.to_py(yv);
    out << "<line x1=\"" << px << "\" y1=\"" << f.py0 << "\" x2=\"" << px << "\" y2=\"" << f.py1
        << "\" stroke=\"#d9d9d9\"/>\n";
    out << "<line x1=\"" << f.px0 << "\" y1=\"" << py << "\" x2=\"" << f.px1 << "\" y2=\"" << py
        << "\" stroke=\"#d9d9d9\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << f.py1 + 16
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_tick(xv) << "</text>\n";
    out << "<text x=\"" << f.px0 - 6 << "\" y=\"" << py + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_tick(yv) << "</text>\n";
  }
  out << "<line x1=\"" << f.px0 << "\" y1=\"" << f.py0 << "\" x2=\"" << f.px0 << "\" y2=\""
      << f.py1 << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << f.px0 << "\" y1=\"" << f.py1 << "\" x2=\"" << f.px1 << "\" y2=\""
      << f.py1 << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (f.px0 + f.px1) / 2 << "\" y=\"" << pc.height - 10
      << "\" font-size=\"12\" text-anchor=\"middle\">" << pc.x_label << "</text>\n";
  out << "<text x=\"14\" y=\"" << (f.py0 + f.py1) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (f.py0 + f.py1) / 2 << ")\">" << pc.y_label << "</text>\n";

  out << "<path fill=\"none\" stroke=\"#d9342b\" stroke-width=\"1.5\" d=\"";
  const int n_seg = 256;
  for (int i = 0; i <= n_seg; ++i) {
    const double xv = f.x_lo + (f.x_hi - f.x_lo) * i / n_seg;
    out << (i == 0 ? 'M' : 'L') << f.to_px(xv) << ' ' << f.to_py(stats::logistic_eval(rho, xv))
        << ' ';
  }
  out << "\"/>\n";

  for (size_t i = 0; i < x.size(); ++i)
    out << "<circle cx=\"" << f.to_px(x[i]) << "\" cy=\"" << f.to_py(y[i])
        << "\" r=\"3\" fill=\"#2659cc\" fill-opacity=\"0.8\"/>\n";
  out << "</svg>\n";
}

}  // namespace pqa::report
