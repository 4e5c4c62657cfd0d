#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "specband/mixture.hpp"
#include "specband/random.hpp"
#include "specband/spectra.hpp"
#include "specband/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace specband;

namespace {

Eigen::MatrixXd gaussian_blob(int n, const Eigen::VectorXd& mean, double sdev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sdev);
  Eigen::MatrixXd pts(n, mean.size());
  for (int i = 0; i < n; ++i)
    for (Eigen::Index d = 0; d < mean.size(); ++d) pts(i, d) = mean[d] + noise(rng);
  return pts;
}

Eigen::MatrixXd vstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

std::vector<double> sorted_means_1d(const MixtureModel& m) {
  std::vector<double> v(m.means.data(), m.means.data() + m.means.rows());
  std::sort(v.begin(), v.end());
  return v;
}

EnergyMatrix as_energy(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  EnergyMatrix e;
  e.values = vstack(a, b);
  e.labels.assign(static_cast<std::size_t>(a.rows()), ClassLabel::A);
  e.labels.insert(e.labels.end(), static_cast<std::size_t>(b.rows()), ClassLabel::B);
  return e;
}

}  // namespace

TEST_CASE("kmeans_init: K=1 closed form") {
  Eigen::MatrixXd pts = gaussian_blob(50, Eigen::Vector2d(3.0, -1.0), 0.5, 1);
  KmeansInit init = kmeans_init(pts, 1, 9);
  CHECK((init.means.row(0).transpose() - pts.colwise().mean().transpose()).norm() < 1e-12);
  CHECK(init.weights[0] == 1.0);
}

TEST_CASE("kmeans_init: two well-separated blobs") {
  Eigen::MatrixXd a = gaussian_blob(200, Eigen::Vector2d(0.0, 0.0), 0.05, 2);
  Eigen::MatrixXd b = gaussian_blob(200, Eigen::Vector2d(5.0, 5.0), 0.05, 3);
  Eigen::MatrixXd pts = vstack(a, b);
  KmeansInit init = kmeans_init(pts, 2, 11);

  Eigen::Vector2d blob_a = a.colwise().mean();
  Eigen::Vector2d blob_b = b.colwise().mean();
  const double d0a = (init.means.row(0).transpose() - blob_a).norm();
  const double d0b = (init.means.row(0).transpose() - blob_b).norm();
  const Eigen::Vector2d first = d0a < d0b ? blob_a : blob_b;
  const Eigen::Vector2d second = d0a < d0b ? blob_b : blob_a;
  CHECK((init.means.row(0).transpose() - first).norm() < 0.1);
  CHECK((init.means.row(1).transpose() - second).norm() < 0.1);
  CHECK(init.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("kmeans_init: identical points exercise the empty-cluster path") {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Ones(20, 2) * 3.0;
  KmeansInit init = kmeans_init(pts, 2, 4);
  CHECK((init.means.row(0) - init.means.row(1)).norm() == 0.0);
  CHECK(init.means(0, 0) == 3.0);
}

TEST_CASE("kmeans_init: errors") {
  Eigen::MatrixXd pts = gaussian_blob(3, Eigen::Vector2d(0, 0), 1.0, 5);
  CHECK_THROWS(kmeans_init(pts, 4, 1));
  CHECK_THROWS(kmeans_init(pts, 0, 1));
}

TEST_CASE("em_fit: K=1 reproduces the closed-form MLE immediately") {
  Eigen::MatrixXd pts = gaussian_blob(300, Eigen::Vector2d(2.0, -4.0), 1.3, 6);
  EmSettings settings;
  auto [model, report] = em_fit(pts, 1, settings);

  Eigen::VectorXd mean = pts.colwise().mean();
  Eigen::MatrixXd centered = pts.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(pts.rows());

  CHECK((model.means.row(0).transpose() - mean).norm() < 1e-9);
  CHECK((model.cov - cov).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(model.weights[0] == doctest::Approx(1.0));
  CHECK(report.iterations_run <= 2);
  CHECK(report.converged);
}

TEST_CASE("em_fit: separated 1-d pair recovers truth within the contraction ball") {
  // Equal-weight unit-variance pair at means 3 and 21, N = 1500 draws:
  // estimates should land within lambda * separation = 0.9 of the truth.
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> comp(0, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd pts(1500, 1);
  for (int i = 0; i < 1500; ++i) pts(i, 0) = (comp(rng) ? 21.0 : 3.0) + noise(rng);

  EmSettings settings;
  settings.seed = 13;
  auto [model, report] = em_fit(pts, 2, settings);
  std::vector<double> means = sorted_means_1d(model);
  CHECK(std::fabs(means[0] - 3.0) < 0.9);
  CHECK(std::fabs(means[1] - 21.0) < 0.9);
}

TEST_CASE("em_fit: perfectly separated clusters match hard-assignment means") {
  Eigen::MatrixXd a = gaussian_blob(100, Eigen::Vector2d(0.0, 0.0), 0.01, 8);
  Eigen::MatrixXd b = gaussian_blob(100, Eigen::Vector2d(100.0, 100.0), 0.01, 9);
  Eigen::MatrixXd pts = vstack(a, b);
  EmSettings settings;
  settings.seed = 3;
  auto [model, report] = em_fit(pts, 2, settings);

  Eigen::Vector2d mean_a = a.colwise().mean();
  Eigen::Vector2d mean_b = b.colwise().mean();
  const bool first_is_a = (model.means.row(0).transpose() - mean_a).norm() <
                          (model.means.row(0).transpose() - mean_b).norm();
  const Eigen::Vector2d m0 = first_is_a ? mean_a : mean_b;
  const Eigen::Vector2d m1 = first_is_a ? mean_b : mean_a;
  CHECK((model.means.row(0).transpose() - m0).norm() < 1e-6);
  CHECK((model.means.row(1).transpose() - m1).norm() < 1e-6);
}

TEST_CASE("em_fit: log-likelihood trace is non-decreasing") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 60 + trial * 15;
    Eigen::MatrixXd pts(n, 2);
    for (int i = 0; i < n; ++i) {
      const double shift = pick(rng) < 0.4 ? 0.0 : 2.5;
      pts(i, 0) = shift + noise(rng);
      pts(i, 1) = -shift + 0.5 * noise(rng);
    }
    EmSettings settings;
    settings.seed = 100 + static_cast<std::uint64_t>(trial);
    auto [model, report] = em_fit(pts, 1 + trial % 3, settings);
    for (std::size_t t = 1; t < report.log_likelihood.size(); ++t)
      CHECK(report.log_likelihood[t] >= report.log_likelihood[t - 1] - 1e-8);
  }
}

TEST_CASE("em_fit: row permutation leaves the fitted mixture identical") {
  std::mt19937_64 rng(20);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd pts(240, 1);
  for (int i = 0; i < 240; ++i) pts(i, 0) = (i % 2 ? 0.0 : 6.0) + noise(rng);

  Eigen::MatrixXd shuffled = pts;
  std::vector<int> order(240);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 0; i < 240; ++i) shuffled.row(i) = pts.row(order[static_cast<std::size_t>(i)]);

  EmSettings settings;
  settings.seed = 55;
  auto [m1, r1] = em_fit(pts, 2, settings);
  auto [m2, r2] = em_fit(shuffled, 2, settings);
  std::vector<double> a = sorted_means_1d(m1);
  std::vector<double> b = sorted_means_1d(m2);
  CHECK(std::fabs(a[0] - b[0]) < 1e-9);
  CHECK(std::fabs(a[1] - b[1]) < 1e-9);
  CHECK((m1.cov - m2.cov).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("em_fit: degenerate zero-variance data is floored, never throws") {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(30, 2);
  EmSettings settings;
  auto [model, report] = em_fit(pts, 2, settings);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.cov);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("fit_mda: mirrored classes produce mirrored means and shared covariance") {
  Eigen::MatrixXd a(200, 2);
  std::mt19937_64 rng(30);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double shift = i % 2 ? 4.0 : 1.0;
    a(i, 0) = shift + noise(rng);
    a(i, 1) = 2.0 * shift + noise(rng);
  }
  Eigen::MatrixXd b = -a;
  EnergyMatrix energies = as_energy(a, b);
  MdaClassifier clf = fit_mda(energies, 2, EmSettings{});

  Eigen::MatrixXd ma = clf.model_a.means;
  Eigen::MatrixXd mb = clf.model_b.means;
  auto row_key = [](const Eigen::MatrixXd& m, int r) { return m(r, 0); };
  std::vector<int> ia{0, 1}, ib{0, 1};
  std::sort(ia.begin(), ia.end(), [&](int x, int y) { return row_key(ma, x) < row_key(ma, y); });
  std::sort(ib.begin(), ib.end(), [&](int x, int y) { return -row_key(mb, x) < -row_key(mb, y); });
  for (int j = 0; j < 2; ++j)
    CHECK((ma.row(ia[static_cast<std::size_t>(j)]) + mb.row(ib[static_cast<std::size_t>(j)])).norm() < 1e-6);

  CHECK((clf.model_a.cov - clf.model_b.cov).cwiseAbs().maxCoeff() == 0.0);
  CHECK(clf.priors[0] == doctest::Approx(0.5));
}

TEST_CASE("fit_mda: identical point clouds give posteriors equal to priors") {
  Eigen::MatrixXd pts = gaussian_blob(150, Eigen::Vector2d(1.0, 2.0), 1.0, 40);
  EnergyMatrix energies = as_energy(pts, pts);
  MdaClassifier clf = fit_mda(energies, 2, EmSettings{});
  for (int i = 0; i < 10; ++i) {
    auto [pa, pb] = class_posterior(clf, pts.row(i).transpose());
    CHECK(pa == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("fit_mda: errors when a class is missing or too small") {
  Eigen::MatrixXd pts = gaussian_blob(10, Eigen::Vector2d(0, 0), 1.0, 50);
  EnergyMatrix only_a;
  only_a.values = pts;
  only_a.labels.assign(10, ClassLabel::A);
  CHECK_THROWS(fit_mda(only_a, 2, EmSettings{}));

  EnergyMatrix tiny = as_energy(pts.topRows(2), pts.bottomRows(8));
  CHECK_THROWS(fit_mda(tiny, 3, EmSettings{}));
}

TEST_CASE("class_posterior: symmetry, dominance, and normalization") {
  MixtureModel m;
  m.k = 1;
  m.weights = Eigen::VectorXd::Ones(1);
  m.means = Eigen::MatrixXd::Zero(1, 1);
  m.cov = Eigen::MatrixXd::Identity(1, 1);

  MdaClassifier equal;
  equal.model_a = m;
  equal.model_b = m;
  auto [pa, pb] = class_posterior(equal, Eigen::VectorXd::Constant(1, 0.7));
  CHECK(pa == doctest::Approx(0.5));
  CHECK(pa + pb == 1.0);

  MdaClassifier split = equal;
  split.model_b.means(0, 0) = 40.0;
  auto [qa, qb] = class_posterior(split, Eigen::VectorXd::Zero(1));
  CHECK(qa > 0.999);

  // Sum-to-one across arbitrary inputs, including far tails.
  std::mt19937_64 rng(60);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  for (int i = 0; i < 300; ++i) {
    auto [ra, rb] = class_posterior(split, Eigen::VectorXd::Constant(1, u(rng)));
    CHECK(std::fabs(ra + rb - 1.0) <= 1e-12);
    CHECK(ra >= 0.0);
    CHECK(rb >= 0.0);
  }
}

TEST_CASE("class_posterior: matches direct density-ratio arithmetic in 1-d") {
  MdaClassifier clf;
  clf.model_a.k = 2;
  clf.model_a.weights = Eigen::Vector2d(0.3, 0.7);
  clf.model_a.means = Eigen::MatrixXd(2, 1);
  clf.model_a.means << -1.0, 2.0;
  clf.model_a.cov = Eigen::MatrixXd::Constant(1, 1, 1.44);
  clf.model_b.k = 2;
  clf.model_b.weights = Eigen::Vector2d(0.5, 0.5);
  clf.model_b.means = Eigen::MatrixXd(2, 1);
  clf.model_b.means << 0.5, 4.0;
  clf.model_b.cov = clf.model_a.cov;
  clf.priors = Eigen::Vector2d(0.6, 0.4);

  auto normal_pdf = [](double x, double mu, double var) {
    return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * M_PI * var);
  };
  for (double x : {-2.0, 0.0, 0.9, 3.3}) {
    const double fa = 0.3 * normal_pdf(x, -1.0, 1.44) + 0.7 * normal_pdf(x, 2.0, 1.44);
    const double fb = 0.5 * normal_pdf(x, 0.5, 1.44) + 0.5 * normal_pdf(x, 4.0, 1.44);
    const double expected = 0.6 * fa / (0.6 * fa + 0.4 * fb);
    auto [pa, pb] = class_posterior(clf, Eigen::VectorXd::Constant(1, x));
    CHECK(std::fabs(pa - expected) < 1e-12);
  }
}

TEST_CASE("deviance: clip-free penalty term only") {
  // Classes separated by ~1000 sigma: every posterior rounds to exactly 1.
  Eigen::MatrixXd a = gaussian_blob(60, Eigen::Vector2d(0.0, 0.0), 1.0, 70);
  Eigen::MatrixXd b = gaussian_blob(60, Eigen::Vector2d(4000.0, 4000.0), 1.0, 71);
  EnergyMatrix energies = as_energy(a, b);
  MdaClassifier clf = fit_mda(energies, 1, EmSettings{});

  BandSet bands{{Band{10.0, 18.0}}};  // |alpha| = 8
  DevianceConfig cfg = DevianceConfig::from_w0(100.0);
  const double d = deviance(energies, clf, bands, cfg);
  CHECK(d == doctest::Approx(std::log(8.0) / std::log(100.0)).epsilon(1e-9));
  CHECK(d == doctest::Approx(0.4515).epsilon(1e-3));
}

TEST_CASE("deviance: linear in eta") {
  Eigen::MatrixXd a = gaussian_blob(40, Eigen::Vector2d(0.0, 0.0), 1.0, 80);
  Eigen::MatrixXd b = gaussian_blob(40, Eigen::Vector2d(3.0, 1.0), 1.0, 81);
  EnergyMatrix energies = as_energy(a, b);
  MdaClassifier clf = fit_mda(energies, 1, EmSettings{});
  BandSet bands{{Band{2.0, 7.0}}};

  DevianceConfig c1 = DevianceConfig::from_w0(100.0);
  c1.eta = 0.3;
  DevianceConfig c2 = c1;
  c2.eta = 0.6;
  const double d1 = deviance(energies, clf, bands, c1);
  const double d2 = deviance(energies, clf, bands, c2);
  CHECK(d2 - d1 == doctest::Approx(0.3 * std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("deviance: fit term is nonnegative and zero only at unit posteriors") {
  Eigen::MatrixXd a = gaussian_blob(50, Eigen::Vector2d(0.0, 0.0), 1.0, 90);
  Eigen::MatrixXd b = gaussian_blob(50, Eigen::Vector2d(1.0, 0.5), 1.0, 91);
  EnergyMatrix energies = as_energy(a, b);
  MdaClassifier clf = fit_mda(energies, 2, EmSettings{});
  BandSet unit_width{{Band{5.0, 6.0}}};  // |alpha| = 1 so the penalty vanishes
  DevianceConfig cfg = DevianceConfig::from_w0(100.0);
  CHECK(deviance(energies, clf, unit_width, cfg) > 0.0);
}

TEST_CASE("deviance: invalid width") {
  Eigen::MatrixXd a = gaussian_blob(30, Eigen::Vector2d(0.0, 0.0), 1.0, 95);
  EnergyMatrix energies = as_energy(a, a);
  MdaClassifier clf = fit_mda(energies, 1, EmSettings{});
  BandSet bands;  // empty: zero width
  DevianceConfig cfg = DevianceConfig::from_w0(100.0);
  CHECK_THROWS(deviance(energies, clf, bands, cfg));
}

TEST_CASE("classify: argmax with ties toward class A; accuracy arithmetic") {
  MixtureModel m;
  m.k = 1;
  m.weights = Eigen::VectorXd::Ones(1);
  m.means = Eigen::MatrixXd::Zero(1, 1);
  m.cov = Eigen::MatrixXd::Identity(1, 1);
  MdaClassifier clf;
  clf.model_a = m;
  clf.model_b = m;
  clf.model_b.means(0, 0) = 2.0;

  EnergyMatrix pts;
  pts.values = Eigen::MatrixXd(3, 1);
  pts.values << 0.0, 2.0, 1.0;  // A side, B side, exact tie
  pts.labels = {ClassLabel::A, ClassLabel::B, ClassLabel::B};

  std::vector<ClassLabel> got = classify(clf, pts);
  CHECK(got[0] == ClassLabel::A);
  CHECK(got[1] == ClassLabel::B);
  CHECK(got[2] == ClassLabel::A);  // tie rule
  CHECK(accuracy(got, pts.labels) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("K=1 MDA matches the closed-form linear-discriminant posterior") {
  Eigen::MatrixXd a = gaussian_blob(400, Eigen::Vector2d(0.0, 0.0), 1.0, 101);
  Eigen::MatrixXd b = gaussian_blob(400, Eigen::Vector2d(2.0, 1.0), 1.0, 102);
  EnergyMatrix energies = as_energy(a, b);
  MdaClassifier clf = fit_mda(energies, 1, EmSettings{});

  // Closed-form two-Gaussian oracle built from the same sample moments.
  Eigen::Vector2d mean_a = a.colwise().mean();
  Eigen::Vector2d mean_b = b.colwise().mean();
  Eigen::MatrixXd ca = a.rowwise() - mean_a.transpose();
  Eigen::MatrixXd cb = b.rowwise() - mean_b.transpose();
  Eigen::MatrixXd pooled =
      (ca.transpose() * ca + cb.transpose() * cb) / static_cast<double>(a.rows() + b.rows());
  Eigen::MatrixXd prec = pooled.inverse();

  for (int i = 0; i < 25; ++i) {
    Eigen::Vector2d x = energies.values.row(i).transpose();
    const double qa = -0.5 * ((x - mean_a).transpose() * prec * (x - mean_a))(0, 0);
    const double qb = -0.5 * ((x - mean_b).transpose() * prec * (x - mean_b))(0, 0);
    const double expected = 1.0 / (1.0 + std::exp(qb - qa));
    auto [pa, pb] = class_posterior(clf, x);
    CHECK(std::fabs(pa - expected) < 1e-9);
  }
}

TEST_CASE("MdaClassifier JSON round trip") {
  Eigen::MatrixXd a = gaussian_blob(60, Eigen::Vector2d(0.0, 1.0), 1.0, 111);
  Eigen::MatrixXd b = gaussian_blob(60, Eigen::Vector2d(3.0, -1.0), 1.0, 112);
  MdaClassifier clf = fit_mda(as_energy(a, b), 2, EmSettings{});
  MdaClassifier back = mda_from_json(mda_to_json(clf));
  CHECK((back.model_a.means - clf.model_a.means).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.model_b.cov - clf.model_b.cov).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.priors == clf.priors);
  auto [pa1, pb1] = class_posterior(clf, Eigen::Vector2d(1.0, 0.0));
  auto [pa2, pb2] = class_posterior(back, Eigen::Vector2d(1.0, 0.0));
  CHECK(pa1 == pa2);
}
