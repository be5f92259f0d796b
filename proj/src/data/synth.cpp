#include "pqa/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "pqa/io/png_io.hpp"

namespace fs = std::filesystem;

namespace pqa::data {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

std::vector<float> gaussian_kernel(double sigma) {
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(static_cast<size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double w = std::exp(-0.5 * (i / sigma) * (i / sigma));
    k[static_cast<size_t>(i + half)] = static_cast<float>(w);
    sum += w;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

}  // namespace

erp::Image make_content(int64_t height, Rng& rng) {
  const int64_t h = height, w = 2 * height;
  erp::Image img(3, h, w);

  // low-frequency directional gradients, different per channel
  for (int64_t c = 0; c < 3; ++c) {
    const double fy = 1.0 + std::floor(rng.uniform() * 3.0);
    const double fx = 1.0 + std::floor(rng.uniform() * 4.0);
    const double py = rng.uniform(), px = rng.uniform();
    const double ramp = 0.2 + 0.3 * rng.uniform();
    for (int64_t y = 0; y < h; ++y) {
      const double vy = std::sin(kTau * (fy * static_cast<double>(y) / static_cast<double>(h) + py));
      const double vr = ramp * static_cast<double>(y) / static_cast<double>(h);
      for (int64_t x = 0; x < w; ++x) {
        const double vx =
            std::cos(kTau * (fx * static_cast<double>(x) / static_cast<double>(w) + px));
        img.at(c, y, x) = static_cast<float>(0.5 + 0.18 * vy + 0.18 * vx + 0.5 * vr - 0.25 * ramp);
      }
    }
  }

  // band-limited noise: coarse white noise, bilinearly upsampled
  const int64_t gh = std::max<int64_t>(4, h / 32), gw = std::max<int64_t>(8, w / 32);
  std::vector<float> coarse(static_cast<size_t>(3 * gh * gw));
  for (auto& v : coarse) v = static_cast<float>(rng.normal());
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < h; ++y) {
      const double sy = static_cast<double>(y) / static_cast<double>(h) * static_cast<double>(gh - 1);
      const auto y0 = static_cast<int64_t>(sy);
      const int64_t y1 = std::min(y0 + 1, gh - 1);
      const double fy = sy - static_cast<double>(y0);
      for (int64_t x = 0; x < w; ++x) {
        const double sx =
            static_cast<double>(x) / static_cast<double>(w) * static_cast<double>(gw - 1);
        const auto x0 = static_cast<int64_t>(sx);
        const int64_t x1 = std::min(x0 + 1, gw - 1);
        const double fx = sx - static_cast<double>(x0);
        auto g = [&](int64_t yy, int64_t xx) {
          return static_cast<double>(coarse[static_cast<size_t>((c * gh + yy) * gw + xx)]);
        };
        const double n = (1 - fy) * ((1 - fx) * g(y0, x0) + fx * g(y0, x1)) +
                         fy * ((1 - fx) * g(y1, x0) + fx * g(y1, x1));
        img.at(c, y, x) += static_cast<float>(0.08 * n);
      }
    }

  // geometric primitives: filled circles and axis-aligned rectangles
  const int n_shapes = 6;
  for (int s = 0; s < n_shapes; ++s) {
    const bool circle = rng.uniform() < 0.5;
    const double color[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double alpha = 0.35 + 0.4 * rng.uniform();
    const auto cy = static_cast<int64_t>(rng.uniform() * static_cast<double>(h));
    const auto cx = static_cast<int64_t>(rng.uniform() * static_cast<double>(w));
    if (circle) {
      const double r = (0.04 + 0.08 * rng.uniform()) * static_cast<double>(h);
      const auto ri = static_cast<int64_t>(std::ceil(r));
      for (int64_t dy = -ri; dy <= ri; ++dy) {
        const int64_t y = cy + dy;
        if (y < 0 || y >= h) continue;
        for (int64_t dx = -ri; dx <= ri; ++dx) {
          if (static_cast<double>(dx * dx + dy * dy) > r * r) continue;
          const int64_t x = ((cx + dx) % w + w) % w;  // wrap longitude
          for (int64_t c = 0; c < 3; ++c)
            img.at(c, y, x) =
                static_cast<float>((1 - alpha) * img.at(c, y, x) + alpha * color[c]);
        }
      }
    } else {
      const auto hh = static_cast<int64_t>((0.03 + 0.07 * rng.uniform()) * static_cast<double>(h));
      const auto hw = static_cast<int64_t>((0.03 + 0.07 * rng.uniform()) * static_cast<double>(w));
      for (int64_t dy = -hh; dy <= hh; ++dy) {
        const int64_t y = cy + dy;
        if (y < 0 || y >= h) continue;
        for (int64_t dx = -hw; dx <= hw; ++dx) {
          const int64_t x = ((cx + dx) % w + w) % w;
          for (int64_t c = 0; c < 3; ++c)
            img.at(c, y, x) =
                static_cast<float>((1 - alpha) * img.at(c, y, x) + alpha * color[c]);
        }
      }
    }
  }

  for (int64_t i = 0; i < img.data.numel(); ++i)
    img.data[i] = clamp01(static_cast<double>(img.data[i]));
  return img;
}

erp::Image gaussian_blur(const erp::Image& img, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be positive");
  const auto k = gaussian_kernel(sigma);
  const auto half = static_cast<int64_t>(k.size() / 2);
  const int64_t c = img.channels(), h = img.height(), w = img.width();
  erp::Image tmp(c, h, w), out(c, h, w);
  // horizontal pass, wrapped
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int64_t i = -half; i <= half; ++i) {
          const int64_t xx = ((x + i) % w + w) % w;
          acc += static_cast<double>(k[static_cast<size_t>(i + half)]) *
                 static_cast<double>(img.at(ch, y, xx));
        }
        tmp.at(ch, y, x) = static_cast<float>(acc);
      }
  // vertical pass, clamped
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int64_t i = -half; i <= half; ++i) {
          const int64_t yy = std::clamp<int64_t>(y + i, 0, h - 1);
          acc += static_cast<double>(k[static_cast<size_t>(i + half)]) *
                 static_cast<double>(tmp.at(ch, yy, x));
        }
        out.at(ch, y, x) = static_cast<float>(acc);
      }
  return out;
}

erp::Image add_gaussian_noise(const erp::Image& img, double sigma, Rng& rng) {
  erp::Image out(img.channels(), img.height(), img.width());
  for (int64_t i = 0; i < img.data.numel(); ++i)
    out.data[i] = clamp01(static_cast<double>(img.data[i]) + sigma * rng.normal());
  return out;
}

erp::Image quantize_levels(const erp::Image& img, int levels) {
  if (levels < 2) throw std::invalid_argument("quantize_levels: need at least 2 levels");
  const double n = levels - 1;
  erp::Image out(img.channels(), img.height(), img.width());
  for (int64_t i = 0; i < img.data.numel(); ++i)
    out.data[i] = clamp01(std::round(static_cast<double>(img.data[i]) * n) / n);
  return out;
}

std::vector<double> blur_sigmas() { return {1.0, 2.0, 4.0, 8.0}; }
std::vector<double> noise_sigmas() { return {0.02, 0.05, 0.1, 0.2}; }
std::vector<int> quant_levels() { return {32, 16, 8, 4}; }

SynthResult synth_dataset(const std::string& out_dir, const SynthConfig& cfg) {
  if (cfg.n_contents < 1) throw std::invalid_argument("synth_dataset: n_contents must be >= 1");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir))
    throw std::runtime_error("synth_dataset: cannot create output directory " + out_dir);

  SynthResult res;
  auto emit = [&](const std::string& id, const erp::Image& img, double mos) {
    const std::string path = (fs::path(out_dir) / (id + ".png")).string();
    io::save_png(path, img, 16);
    ManifestRow row;
    row.image_id = id;
    row.image_path = path;
    row.mos = mos;
    res.manifest.rows.push_back(row);
  };

  for (int64_t ci = 0; ci < cfg.n_contents; ++ci) {
    Rng content_rng(Rng::mix(cfg.seed, static_cast<uint64_t>(ci)));
    const erp::Image ref = make_content(cfg.height, content_rng);
    const std::string stem = "c" + std::to_string(ci);
    emit(stem + "_ref", ref, 5.0);

    const auto blur = blur_sigmas();
    for (size_t li = 0; li < blur.size(); ++li)
      emit(stem + "_blur_l" + std::to_string(li + 1), gaussian_blur(ref, blur[li]),
           5.0 - static_cast<double>(li + 1));

    const auto noise = noise_sigmas();
    for (size_t li = 0; li < noise.size(); ++li) {
      Rng nrng(Rng::mix(Rng::mix(cfg.seed, static_cast<uint64_t>(ci)), 100 + li));
      emit(stem + "_noise_l" + std::to_string(li + 1), add_gaussian_noise(ref, noise[li], nrng),
           5.0 - static_cast<double>(li + 1));
    }

    const auto quant = quant_levels();
    for (size_t li = 0; li < quant.size(); ++li)
      emit(stem + "_quant_l" + std::to_string(li + 1), quantize_levels(ref, quant[li]),
           5.0 - static_cast<double>(li + 1));
  }

  res.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  save_manifest(res.manifest_path, res.manifest, /*split_auto=*/true);
  return res;
}

}  // namespace pqa::data
