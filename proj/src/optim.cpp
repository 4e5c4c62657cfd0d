#include "specband/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace specband {

namespace {

double guarded(const std::function<double(const std::vector<double>&)>& f,
               const std::vector<double>& x, int& evals) {
  ++evals;
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

double simplex_diameter(const std::vector<std::vector<double>>& pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < pts[i].size(); ++c) {
        const double diff = pts[i][c] - pts[j][c];
        s += diff * diff;
      }
      d = std::max(d, std::sqrt(s));
    }
  return d;
}

}  // namespace

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                     const std::vector<double>& x0, const NmConfig& cfg) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw std::invalid_argument("nelder_mead: empty start point");

  int evals = 0;
  const double f0 = guarded(objective, x0, evals);
  if (!std::isfinite(f0))
    throw std::invalid_argument("nelder_mead: objective not finite at start point");

  std::vector<std::vector<double>> pts(dim + 1, x0);
  std::vector<double> vals(dim + 1);
  vals[0] = f0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double step = cfg.simplex_scale * std::max(1.0, std::fabs(x0[i]));
    pts[i + 1][i] += step;
    vals[i + 1] = guarded(objective, pts[i + 1], evals);
  }

  std::vector<std::size_t> order(dim + 1);
  while (evals < cfg.max_evaluations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    {
      std::vector<std::vector<double>> sp(dim + 1);
      std::vector<double> sv(dim + 1);
      for (std::size_t i = 0; i <= dim; ++i) {
        sp[i] = pts[order[i]];
        sv[i] = vals[order[i]];
      }
      pts = std::move(sp);
      vals = std::move(sv);
    }
    if (simplex_diameter(pts) < cfg.tol) break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t c = 0; c < dim; ++c) centroid[c] += pts[i][c] / static_cast<double>(dim);

    auto along = [&](double coef) {
      std::vector<double> x(dim);
      for (std::size_t c = 0; c < dim; ++c) x[c] = centroid[c] + coef * (centroid[c] - pts[dim][c]);
      return x;
    };

    std::vector<double> xr = along(cfg.reflection);
    const double fr = guarded(objective, xr, evals);

    if (fr < vals[0]) {
      std::vector<double> xe = along(cfg.reflection * cfg.expansion);
      const double fe = guarded(objective, xe, evals);
      if (fe < fr) {
        pts[dim] = std::move(xe);
        vals[dim] = fe;
      } else {
        pts[dim] = std::move(xr);
        vals[dim] = fr;
      }
    } else if (fr < vals[dim - 1]) {
      pts[dim] = std::move(xr);
      vals[dim] = fr;
    } else {
      const bool outside = fr < vals[dim];
      std::vector<double> xc = along(outside ? cfg.reflection * cfg.contraction : -cfg.contraction);
      const double fc = guarded(objective, xc, evals);
      if (fc < std::min(fr, vals[dim])) {
        pts[dim] = std::move(xc);
        vals[dim] = fc;
      } else {
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i <= dim; ++i) {
          for (std::size_t c = 0; c < dim; ++c)
            pts[i][c] = pts[0][c] + cfg.shrink * (pts[i][c] - pts[0][c]);
          vals[i] = guarded(objective, pts[i], evals);
          if (evals >= cfg.max_evaluations) break;
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= dim; ++i)
    if (vals[i] < vals[best]) best = i;
  return NmResult{pts[best], vals[best], evals};
}

}  // namespace specband
