#include "specband/gpr.hpp"

#include "specband/optim.hpp"
#include "specband/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specband {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

SearchBox SearchBox::cube(double lo, double hi, int dim) {
  SearchBox box;
  box.lo = Eigen::VectorXd::Constant(dim, lo);
  box.hi = Eigen::VectorXd::Constant(dim, hi);
  return box;
}

Eigen::VectorXd SearchBox::normalize(const Eigen::VectorXd& raw) const {
  if (raw.size() != lo.size()) throw std::invalid_argument("SearchBox: dimension mismatch");
  Eigen::VectorXd out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double extent = hi[i] - lo[i];
    if (!(extent > 0)) throw std::invalid_argument("SearchBox: zero-extent coordinate");
    out[i] = (raw[i] - lo[i]) / extent;
  }
  return out;
}

Eigen::VectorXd SearchBox::denormalize(const Eigen::VectorXd& unit) const {
  if (unit.size() != lo.size()) throw std::invalid_argument("SearchBox: dimension mismatch");
  Eigen::VectorXd out(unit.size());
  for (Eigen::Index i = 0; i < unit.size(); ++i) {
    const double extent = hi[i] - lo[i];
    if (!(extent > 0)) throw std::invalid_argument("SearchBox: zero-extent coordinate");
    out[i] = lo[i] + unit[i] * extent;
  }
  return out;
}

double kernel_value(const KernelConfig& cfg, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double d2 = (u - v).squaredNorm();
  return cfg.sigma_r * cfg.sigma_r * std::exp(-d2 / (2.0 * cfg.theta_r * cfg.theta_r));
}

GprModel gpr_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                 const KernelConfig& cfg) {
  if (points.rows() < 2) throw std::invalid_argument("gpr_fit: need at least 2 points");
  if (points.rows() != values.size()) throw std::invalid_argument("gpr_fit: size mismatch");
  if (!(cfg.theta_r > 0) || !(cfg.sigma_r > 0) || cfg.nugget < 0)
    throw std::invalid_argument("gpr_fit: invalid kernel configuration");

  const Eigen::Index n = points.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_value(cfg, points.row(i).transpose(), points.row(j).transpose());
      k(i, j) = v;
      k(j, i) = v;
    }
  }

  GprModel model;
  model.inputs = points;
  model.outputs = values;
  model.kernel = cfg;
  model.mean_const = values.mean();

  double nugget = std::max(cfg.nugget, 1e-12);
  const double scale = cfg.sigma_r * cfg.sigma_r;
  Eigen::LLT<Eigen::MatrixXd> llt;
  while (true) {
    Eigen::MatrixXd reg = k + nugget * scale * Eigen::MatrixXd::Identity(n, n);
    llt.compute(reg);
    if (llt.info() == Eigen::Success) break;
    nugget *= 10.0;
    if (nugget > 1e-4) throw std::runtime_error("gpr_fit: Cholesky failed after nugget escalation");
  }
  model.nugget_used = nugget * scale;
  model.chol_l = llt.matrixL();
  Eigen::VectorXd centered = values.array() - model.mean_const;
  model.alpha = llt.solve(centered);
  return model;
}

Posterior gpr_posterior(const GprModel& model, const Eigen::VectorXd& query) {
  if (query.size() != model.inputs.cols())
    throw std::invalid_argument("gpr_posterior: dimension mismatch");
  const Eigen::Index n = model.size();
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i)
    ks[i] = kernel_value(model.kernel, model.inputs.row(i).transpose(), query);

  Posterior post;
  post.mean = model.mean_const + ks.dot(model.alpha);
  Eigen::VectorXd v = model.chol_l.triangularView<Eigen::Lower>().solve(ks);
  const double var = model.kernel.sigma_r * model.kernel.sigma_r - v.squaredNorm();
  post.std = var > 0 ? std::sqrt(var) : 0.0;
  return post;
}

double expected_improvement(const Posterior& post, double y_min) {
  if (post.std <= 0.0) return std::max(y_min - post.mean, 0.0);
  const double z = (y_min - post.mean) / post.std;
  const double ei = (y_min - post.mean) * normal_cdf(z) + post.std * normal_pdf(z);
  return ei > 0 ? ei : 0.0;
}

EiMaximum maximize_ei(const GprModel& model, double y_min, int budget, std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("maximize_ei: budget must be >= 1");
  const int dim = static_cast<int>(model.inputs.cols());
  auto rng = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::MatrixXd cands(budget, dim);
  for (int i = 0; i < budget; ++i)
    for (int d = 0; d < dim; ++d) cands(i, d) = unit(rng);

  std::vector<double> scores(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i)
    scores[static_cast<std::size_t>(i)] =
        expected_improvement(gpr_posterior(model, cands.row(i).transpose()), y_min);

  // Indices of the top candidates, stable in candidate order.
  const int n_polish = std::min(5, budget);
  std::vector<int> top;
  for (int pass = 0; pass < n_polish; ++pass) {
    int best = -1;
    for (int i = 0; i < budget; ++i) {
      if (std::find(top.begin(), top.end(), i) != top.end()) continue;
      if (best < 0 || scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)])
        best = i;
    }
    top.push_back(best);
  }

  auto clamp01 = [](std::vector<double> x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return x;
  };
  auto neg_ei = [&](const std::vector<double>& x) {
    Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(clamp01(x).data(), dim);
    return -expected_improvement(gpr_posterior(model, q), y_min);
  };

  EiMaximum out;
  out.point = cands.row(top[0]).transpose();
  out.ei = scores[static_cast<std::size_t>(top[0])];

  NmConfig nm;
  nm.simplex_scale = 0.05;
  nm.max_evaluations = 200 * dim;
  nm.tol = 1e-9;

  // Polish starts: the top candidates plus the best training input, whose
  // neighborhood carries the local EI ridge during exploitation.
  std::vector<std::vector<double>> starts;
  for (int idx : top) {
    if (scores[static_cast<std::size_t>(idx)] <= 0.0) continue;
    starts.emplace_back(cands.row(idx).begin(), cands.row(idx).end());
  }
  {
    Eigen::Index best_train = 0;
    model.outputs.minCoeff(&best_train);
    starts.emplace_back(model.inputs.row(best_train).begin(), model.inputs.row(best_train).end());
  }
  for (const auto& x0 : starts) {
    NmResult res = nelder_mead(neg_ei, x0, nm);
    if (-res.value > out.ei) {
      std::vector<double> xp = clamp01(res.x);
      out.point = Eigen::Map<const Eigen::VectorXd>(xp.data(), dim);
      out.ei = -res.value;
    }
  }

  if (out.ei <= 0.0) {
    // Flat acquisition surface: report the first random candidate.
    out.flat = true;
    out.point = cands.row(0).transpose();
    out.ei = 0.0;
  }
  return out;
}

}  // namespace specband
