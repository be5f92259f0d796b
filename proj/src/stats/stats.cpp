#include "pqa/stats/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace pqa::stats {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_pop(const std::vector<double>& v) {
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double plcc(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("plcc: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("plcc: need at least two samples");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("plcc: undefined correlation for constant input");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    // positions i..j (0-based) share the mean of ranks i+1..j+1
    const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("srcc: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("srcc: need at least two samples");
  return plcc(average_ranks(x), average_ranks(y));
}

double rmse(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("rmse: length mismatch");
  if (x.empty()) throw std::invalid_argument("rmse: empty vectors");
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double logistic_eval(const LogisticParams& p, double x) {
  const double u = std::clamp(p.rho2 * (x - p.rho3), -500.0, 500.0);
  return p.rho1 * (0.5 - 1.0 / (1.0 + std::exp(u))) + p.rho4 * x + p.rho5;
}

std::vector<double> logistic_map(const LogisticParams& p, const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = logistic_eval(p, x[i]);
  return out;
}

namespace {

// Solve a 5x5 linear system in place by Gaussian elimination with partial
// pivoting. Returns false when the matrix is numerically singular.
bool solve5(std::array<std::array<double, 5>, 5>& a, std::array<double, 5>& b) {
  for (int col = 0; col < 5; ++col) {
    int piv = col;
    for (int r = col + 1; r < 5; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < 5; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 5; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int col = 4; col >= 0; --col) {
    double acc = b[col];
    for (int c = col + 1; c < 5; ++c) acc -= a[col][c] * b[c];
    b[col] = acc / a[col][col];
  }
  return true;
}

double ssr_of(const LogisticParams& p, const std::vector<double>& x,
              const std::vector<double>& y) {
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = logistic_eval(p, x[i]) - y[i];
    acc += r * r;
  }
  return acc;
}

struct GnResult {
  LogisticParams p;
  double ssr = std::numeric_limits<double>::infinity();
  bool converged = false;
};

GnResult gauss_newton(LogisticParams p, const std::vector<double>& x,
                      const std::vector<double>& y) {
  const size_t n = x.size();
  GnResult out;
  double ssr = ssr_of(p, x, y);
  double lambda = 1e-3;
  const int max_iter = 300;
  for (int iter = 0; iter < max_iter; ++iter) {
    // Jacobian of residuals r_i = f(x_i) - y_i and gradient J^T r.
    std::array<std::array<double, 5>, 5> jtj{};
    std::array<double, 5> jtr{};
    for (size_t i = 0; i < n; ++i) {
      const double u = std::clamp(p.rho2 * (x[i] - p.rho3), -500.0, 500.0);
      const double s = 1.0 / (1.0 + std::exp(u));
      const double ds = s * (1.0 - s);  // -ds/du has magnitude s(1-s)
      const std::array<double, 5> j = {
          0.5 - s,
          p.rho1 * ds * (x[i] - p.rho3),
          -p.rho1 * ds * p.rho2,
          x[i],
          1.0,
      };
      const double r = p.rho1 * (0.5 - s) + p.rho4 * x[i] + p.rho5 - y[i];
      for (int a = 0; a < 5; ++a) {
        jtr[a] += j[a] * r;
        for (int b = 0; b < 5; ++b) jtj[a][b] += j[a] * j[b];
      }
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      std::array<std::array<double, 5>, 5> a = jtj;
      for (int d = 0; d < 5; ++d) a[d][d] += lambda * (1.0 + jtj[d][d]);
      std::array<double, 5> delta = jtr;
      if (solve5(a, delta)) {
        LogisticParams cand = p;
        cand.rho1 -= delta[0];
        cand.rho2 -= delta[1];
        cand.rho3 -= delta[2];
        cand.rho4 -= delta[3];
        cand.rho5 -= delta[4];
        const double cssr = ssr_of(cand, x, y);
        if (std::isfinite(cssr) && cssr <= ssr) {
          const double step = std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] +
                                        delta[2] * delta[2] + delta[3] * delta[3] +
                                        delta[4] * delta[4]);
          const double improve = ssr - cssr;
          p = cand;
          ssr = cssr;
          lambda = std::max(lambda * 0.3, 1e-12);
          stepped = true;
          if (step <= 1e-12 * (1.0 + std::abs(p.rho3)) || improve <= 1e-15 * (1.0 + ssr) ||
              ssr <= 1e-24) {
            out.p = p;
            out.ssr = ssr;
            out.converged = true;
            return out;
          }
          break;
        }
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!stepped) {
      // Damping maxed out without improvement: treat the current point as a
      // stationary one if the normal-equation gradient is tiny.
      double gnorm = 0.0;
      for (int a = 0; a < 5; ++a) gnorm += jtr[a] * jtr[a];
      out.p = p;
      out.ssr = ssr;
      out.converged = std::sqrt(gnorm) <= 1e-8 * (1.0 + ssr);
      return out;
    }
  }
  out.p = p;
  out.ssr = ssr;
  out.converged = false;
  return out;
}

}  // namespace

LogisticParams logistic_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("logistic_fit: length mismatch");
  if (x.size() < 5) throw std::invalid_argument("logistic_fit: need at least five samples");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("logistic_fit: non-finite x");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("logistic_fit: non-finite y");
  const double sx = stddev_pop(x);
  if (sx == 0.0) throw std::invalid_argument("logistic_fit: constant x");

  LogisticParams init;
  init.rho1 = *std::max_element(y.begin(), y.end()) - *std::min_element(y.begin(), y.end());
  init.rho2 = 1.0 / sx;
  init.rho3 = mean(x);
  init.rho4 = 0.0;
  init.rho5 = mean(y);

  // Deterministic perturbations around the standard start.
  const std::array<std::array<double, 3>, 5> tweaks = {{
      {1.0, 1.0, 0.0},    // the standard initialization itself
      {0.5, 3.0, 0.5},    // steeper, shifted right
      {2.0, 0.3, -0.5},   // shallower, shifted left
      {-1.0, 1.0, 0.0},   // inverted logistic branch
      {1.0, 10.0, 0.0},   // near-step
  }};

  GnResult best;
  bool any_converged = false;
  for (const auto& t : tweaks) {
    LogisticParams p = init;
    p.rho1 *= t[0];
    p.rho2 *= t[1];
    p.rho3 += t[2] * sx;
    GnResult r = gauss_newton(p, x, y);
    if (r.ssr < best.ssr) best = r;
    any_converged = any_converged || r.converged;
    if (r.converged && r.ssr <= 1e-20) break;  // cannot do better
  }

  if (!any_converged) {
    const double res = std::sqrt(best.ssr / static_cast<double>(x.size()));
    throw FitFailure("logistic_fit: no start converged", best.p, res);
  }
  return best.p;
}

}  // namespace pqa::stats
