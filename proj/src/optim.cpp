#include "fb5/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fb5 {

namespace {

struct Simplex {
  std::vector<std::vector<double>> pts;
  std::vector<double> vals;

  void sort() {
    std::vector<size_t> idx(vals.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2(pts.size());
    std::vector<double> v2(vals.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      p2[i] = std::move(pts[idx[i]]);
      v2[i] = vals[idx[i]];
    }
    pts = std::move(p2);
    vals = std::move(v2);
  }
};

}  // namespace

OptimResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, std::vector<double> step,
    const NelderMeadOptions& opts) {
  const size_t n = x0.size();
  if (step.size() != n) throw std::invalid_argument("nelder_mead: size mismatch");

  OptimResult res;
  res.x = x0;

  auto eval = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  res.fmin = eval(x0);

  for (int round = 0; round <= opts.restarts; ++round) {
    Simplex s;
    s.pts.assign(n + 1, res.x);
    s.vals.assign(n + 1, 0.0);
    s.vals[0] = res.fmin;
    for (size_t i = 0; i < n; ++i) {
      s.pts[i + 1][i] += step[i];
      s.vals[i + 1] = eval(s.pts[i + 1]);
    }

    while (res.evals < opts.max_evals) {
      s.sort();

      double diam = 0;
      for (size_t i = 0; i < n; ++i) {
        double lo = s.pts[0][i], hi = lo;
        for (size_t k = 1; k <= n; ++k) {
          lo = std::min(lo, s.pts[k][i]);
          hi = std::max(hi, s.pts[k][i]);
        }
        diam = std::max(diam, hi - lo);
      }
      if (diam < opts.x_tol && s.vals[n] - s.vals[0] < opts.f_tol) {
        res.converged = true;
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (size_t k = 0; k < n; ++k)
        for (size_t i = 0; i < n; ++i) centroid[i] += s.pts[k][i] / double(n);

      auto affine = [&](double c) {
        std::vector<double> p(n);
        for (size_t i = 0; i < n; ++i)
          p[i] = centroid[i] + c * (s.pts[n][i] - centroid[i]);
        return p;
      };

      const auto xr = affine(-1.0);  // reflection
      const double fr = eval(xr);
      if (fr < s.vals[0]) {
        const auto xe = affine(-2.0);  // expansion
        const double fe = eval(xe);
        if (fe < fr) {
          s.pts[n] = xe;
          s.vals[n] = fe;
        } else {
          s.pts[n] = xr;
          s.vals[n] = fr;
        }
      } else if (fr < s.vals[n - 1]) {
        s.pts[n] = xr;
        s.vals[n] = fr;
      } else {
        const bool outside = fr < s.vals[n];
        const auto xc = affine(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < std::min(fr, s.vals[n])) {
          s.pts[n] = xc;
          s.vals[n] = fc;
        } else {
          // shrink toward the best vertex
          for (size_t k = 1; k <= n; ++k) {
            for (size_t i = 0; i < n; ++i)
              s.pts[k][i] = s.pts[0][i] + 0.5 * (s.pts[k][i] - s.pts[0][i]);
            s.vals[k] = eval(s.pts[k]);
          }
        }
      }
    }

    s.sort();
    if (s.vals[0] < res.fmin) {
      res.fmin = s.vals[0];
      res.x = s.pts[0];
    }
    if (res.evals >= opts.max_evals) break;
    // restart with a smaller simplex around the incumbent
    for (auto& st : step) st *= 0.1;
  }
  return res;
}

}  // namespace fb5
