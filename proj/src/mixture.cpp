#include "specband/mixture.hpp"

#include "specband/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace specband {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

// log N(x; mu, Sigma) evaluator with the Cholesky factor computed once.
struct GaussianLogDensity {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
  int d = 0;

  explicit GaussianLogDensity(const Eigen::MatrixXd& cov) : llt(cov), d(static_cast<int>(cov.rows())) {
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("GaussianLogDensity: covariance not positive definite");
    log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& mu) const {
    Eigen::VectorXd z = llt.matrixL().solve(x - mu);
    return -0.5 * (d * kLog2Pi + log_det + z.squaredNorm());
  }
};

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Floor covariance eigenvalues at cov_floor_rel * mean(diag) (with a tiny
// absolute backstop) and re-symmetrize.
Eigen::MatrixXd floor_covariance(const Eigen::MatrixXd& cov, double cov_floor_rel) {
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  const double mean_diag = sym.diagonal().mean();
  const double floor = std::max(cov_floor_rel * std::max(mean_diag, 0.0), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Mixture log density of one class model at x.
double mixture_log_density(const MixtureModel& m, const GaussianLogDensity& dens,
                           const Eigen::VectorXd& x) {
  Eigen::VectorXd terms(m.k);
  for (int j = 0; j < m.k; ++j) {
    const double lw = m.weights[j] > 0 ? std::log(m.weights[j])
                                       : -std::numeric_limits<double>::infinity();
    terms[j] = lw + dens(x, m.means.row(j).transpose());
  }
  return log_sum_exp(terms);
}

Eigen::MatrixXd rows_for_class(const EnergyMatrix& energies, ClassLabel label) {
  Eigen::Index n = 0;
  for (ClassLabel l : energies.labels)
    if (l == label) ++n;
  Eigen::MatrixXd out(n, energies.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < energies.rows(); ++i)
    if (energies.labels[static_cast<std::size_t>(i)] == label) out.row(r++) = energies.values.row(i);
  return out;
}

}  // namespace

DevianceConfig DevianceConfig::from_w0(double w0) {
  if (!(w0 > 1.0)) throw std::invalid_argument("DevianceConfig: w0 must exceed 1");
  DevianceConfig cfg;
  cfg.w0 = w0;
  cfg.eta = 1.0 / std::log(w0);
  return cfg;
}

KmeansInit kmeans_init(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw std::invalid_argument("kmeans_init: k must be >= 1");
  if (n < k) throw std::invalid_argument("kmeans_init: fewer points than clusters");

  auto rng = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding.
  Eigen::MatrixXd centers(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = points.row(first(rng));
  Eigen::VectorXd d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double target = unit(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);  // all points coincide with existing centers
    }
    centers.row(c) = points.row(pick);
    d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  // Lloyd iterations.
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
      counts[assign[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Re-seed an empty cluster at the point farthest from its centroid-set.
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = (points.row(i) - centers.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = points.row(far);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }

  KmeansInit out;
  out.means = centers;
  out.weights = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) out.weights[assign[static_cast<std::size_t>(i)]] += 1.0;
  out.weights /= static_cast<double>(n);
  out.assignments = std::move(assign);
  return out;
}

std::pair<MixtureModel, EmReport> em_fit(const Eigen::MatrixXd& points, int k,
                                         const KmeansInit& init, const EmSettings& settings) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (d < 1) throw std::invalid_argument("em_fit: dimension must be >= 1");
  if (n < k) throw std::invalid_argument("em_fit: fewer points than components");

  MixtureModel model;
  model.k = k;
  model.means = init.means;
  model.weights = init.weights.cwiseMax(1e-10);
  model.weights /= model.weights.sum();

  // Initial shared covariance from the hard k-means assignment.
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd r = points.row(i).transpose() -
                        model.means.row(init.assignments[static_cast<std::size_t>(i)]).transpose();
    cov += r * r.transpose();
  }
  cov /= static_cast<double>(n);
  model.cov = floor_covariance(cov, settings.cov_floor_rel);

  EmReport report;
  if (settings.track_means) report.mean_trace.push_back(model.means);

  Eigen::MatrixXd resp(n, k);
  for (int iter = 0; iter < settings.max_iter; ++iter) {
    // E step in log space.
    GaussianLogDensity dens(model.cov);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd lp(k);
      for (int j = 0; j < k; ++j)
        lp[j] = std::log(model.weights[j]) + dens(points.row(i).transpose(), model.means.row(j).transpose());
      const double lse = log_sum_exp(lp);
      ll += lse;
      resp.row(i) = (lp.array() - lse).exp();
    }
    report.log_likelihood.push_back(ll);

    // M step.
    Eigen::VectorXd nk = resp.colwise().sum().transpose().cwiseMax(1e-300);
    Eigen::VectorXd new_weights = nk / static_cast<double>(n);
    Eigen::MatrixXd new_means(k, d);
    for (int j = 0; j < k; ++j) new_means.row(j) = (resp.col(j).transpose() * points) / nk[j];
    Eigen::MatrixXd new_cov = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < k; ++j) {
      Eigen::MatrixXd centered = points.rowwise() - new_means.row(j);
      new_cov += centered.transpose() * resp.col(j).asDiagonal() * centered;
    }
    new_cov /= static_cast<double>(n);
    new_cov = floor_covariance(new_cov, settings.cov_floor_rel);

    double change = (new_weights - model.weights).cwiseAbs().maxCoeff();
    change = std::max(change, (new_means - model.means).cwiseAbs().maxCoeff());
    change = std::max(change, (new_cov - model.cov).cwiseAbs().maxCoeff());

    model.weights = new_weights;
    model.means = new_means;
    model.cov = new_cov;
    report.iterations_run = iter + 1;
    report.final_change = change;
    if (settings.track_means) report.mean_trace.push_back(model.means);

    if (change < settings.tol) {
      report.converged = true;
      break;
    }
  }
  return {std::move(model), std::move(report)};
}

std::pair<MixtureModel, EmReport> em_fit(const Eigen::MatrixXd& points, int k,
                                         const EmSettings& settings) {
  const int starts = std::max(1, settings.n_starts);
  if (starts == 1) return em_fit(points, k, kmeans_init(points, k, settings.seed), settings);

  std::pair<MixtureModel, EmReport> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    const std::uint64_t seed = derive_seed(settings.seed, static_cast<std::uint64_t>(s));
    auto fit = em_fit(points, k, kmeans_init(points, k, seed), settings);
    const double ll = fit.second.log_likelihood.empty()
                          ? -std::numeric_limits<double>::infinity()
                          : fit.second.log_likelihood.back();
    if (ll > best_ll) {
      best_ll = ll;
      best = std::move(fit);
    }
  }
  return best;
}

MdaClassifier fit_mda(const EnergyMatrix& energies, int k, const EmSettings& settings) {
  Eigen::MatrixXd pts_a = rows_for_class(energies, ClassLabel::A);
  Eigen::MatrixXd pts_b = rows_for_class(energies, ClassLabel::B);
  if (pts_a.rows() == 0 || pts_b.rows() == 0)
    throw std::invalid_argument("fit_mda: both classes must be present");
  if (pts_a.rows() < k || pts_b.rows() < k)
    throw std::invalid_argument("fit_mda: a class has fewer rows than components");

  // The two class mixtures are fitted independently; the same seed keeps
  // the pipeline symmetric under class-wise data transformations.
  auto [model_a, rep_a] = em_fit(pts_a, k, settings);
  auto [model_b, rep_b] = em_fit(pts_b, k, settings);
  model_a.label = ClassLabel::A;
  model_b.label = ClassLabel::B;

  const double na = static_cast<double>(pts_a.rows());
  const double nb = static_cast<double>(pts_b.rows());
  Eigen::MatrixXd pooled = (na * model_a.cov + nb * model_b.cov) / (na + nb);
  pooled = floor_covariance(pooled, settings.cov_floor_rel);
  model_a.cov = pooled;
  model_b.cov = pooled;

  MdaClassifier clf;
  clf.model_a = std::move(model_a);
  clf.model_b = std::move(model_b);
  clf.priors = Eigen::Vector2d(na / (na + nb), nb / (na + nb));
  return clf;
}

std::pair<double, double> class_posterior(const MdaClassifier& clf, const Eigen::VectorXd& x) {
  if (x.size() != clf.dim()) throw std::invalid_argument("class_posterior: dimension mismatch");
  GaussianLogDensity dens(clf.model_a.cov);  // shared matrix, one factorization
  const double la = std::log(clf.priors[0]) + mixture_log_density(clf.model_a, dens, x);
  const double lb = std::log(clf.priors[1]) + mixture_log_density(clf.model_b, dens, x);
  // p_a + p_b == 1 holds exactly by construction.
  const double pa = 1.0 / (1.0 + std::exp(lb - la));
  return {pa, 1.0 - pa};
}

double deviance(const EnergyMatrix& energies, const MdaClassifier& clf, const BandSet& bands,
                const DevianceConfig& cfg) {
  if (energies.cols() != clf.dim()) throw std::invalid_argument("deviance: dimension mismatch");
  const double width = bands.total_width();
  if (!(width > 0)) throw std::invalid_argument("deviance: total band width must be positive");

  GaussianLogDensity dens(clf.model_a.cov);
  double sum_log = 0.0;
  for (Eigen::Index i = 0; i < energies.rows(); ++i) {
    const Eigen::VectorXd x = energies.values.row(i).transpose();
    const double la = std::log(clf.priors[0]) + mixture_log_density(clf.model_a, dens, x);
    const double lb = std::log(clf.priors[1]) + mixture_log_density(clf.model_b, dens, x);
    const double p_true = energies.labels[static_cast<std::size_t>(i)] == ClassLabel::A
                              ? 1.0 / (1.0 + std::exp(lb - la))
                              : 1.0 / (1.0 + std::exp(la - lb));
    sum_log += std::log(std::max(p_true, cfg.prob_floor));
  }
  const double fit_term = -2.0 * sum_log / static_cast<double>(energies.rows());
  return fit_term + cfg.eta * std::log(width);
}

std::vector<ClassLabel> classify(const MdaClassifier& clf, const EnergyMatrix& energies) {
  std::vector<ClassLabel> out(static_cast<std::size_t>(energies.rows()));
  for (Eigen::Index i = 0; i < energies.rows(); ++i) {
    auto [pa, pb] = class_posterior(clf, energies.values.row(i).transpose());
    out[static_cast<std::size_t>(i)] = pa >= pb ? ClassLabel::A : ClassLabel::B;
  }
  return out;
}

double accuracy(const std::vector<ClassLabel>& labels, const std::vector<ClassLabel>& truth) {
  if (labels.size() != truth.size() || labels.empty())
    throw std::invalid_argument("accuracy: label vectors must be non-empty and equal length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

nlohmann::json model_to_json(const MixtureModel& m) {
  nlohmann::json j;
  j["class"] = class_name(m.label);
  j["k"] = m.k;
  j["d"] = m.dim();
  j["weights"] = std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size());
  j["means"] = nlohmann::json::array();
  for (int r = 0; r < m.k; ++r) {
    std::vector<double> row(m.means.row(r).begin(), m.means.row(r).end());
    j["means"].push_back(row);
  }
  std::vector<double> cov;
  for (int r = 0; r < m.dim(); ++r)
    for (int c = 0; c < m.dim(); ++c) cov.push_back(m.cov(r, c));
  j["cov_row_major"] = cov;
  return j;
}

MixtureModel model_from_json(const nlohmann::json& j) {
  MixtureModel m;
  m.label = j.at("class").get<std::string>() == "A" ? ClassLabel::A : ClassLabel::B;
  m.k = j.at("k").get<int>();
  const int d = j.at("d").get<int>();
  auto w = j.at("weights").get<std::vector<double>>();
  m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.means.resize(m.k, d);
  for (int r = 0; r < m.k; ++r) {
    auto row = j.at("means")[static_cast<std::size_t>(r)].get<std::vector<double>>();
    m.means.row(r) = Eigen::Map<Eigen::VectorXd>(row.data(), d).transpose();
  }
  auto cov = j.at("cov_row_major").get<std::vector<double>>();
  m.cov.resize(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m.cov(r, c) = cov[static_cast<std::size_t>(r * d + c)];
  return m;
}

}  // namespace

std::string mda_to_json(const MdaClassifier& clf) {
  nlohmann::json j;
  j["model_a"] = model_to_json(clf.model_a);
  j["model_b"] = model_to_json(clf.model_b);
  j["priors"] = {clf.priors[0], clf.priors[1]};
  return j.dump(2);
}

MdaClassifier mda_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  MdaClassifier clf;
  clf.model_a = model_from_json(j.at("model_a"));
  clf.model_b = model_from_json(j.at("model_b"));
  auto p = j.at("priors").get<std::vector<double>>();
  clf.priors = Eigen::Vector2d(p[0], p[1]);
  return clf;
}

}  // namespace specband
