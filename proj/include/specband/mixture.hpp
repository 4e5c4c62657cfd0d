#pragma once

#include "specband/spectra.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace specband {

// Gaussian mixture for one class: K components with individual weights and
// means and a single covariance matrix shared by all components.
struct MixtureModel {
  ClassLabel label = ClassLabel::A;
  int k = 0;
  Eigen::VectorXd weights;   // K, simplex
  Eigen::MatrixXd means;     // K x d
  Eigen::MatrixXd cov;       // d x d, symmetric positive definite

  int dim() const { return static_cast<int>(means.cols()); }
};

// Two-class mixture discriminant classifier. Both class models carry the
// identical pooled covariance; priors are the empirical class fractions.
struct MdaClassifier {
  MixtureModel model_a;
  MixtureModel model_b;
  Eigen::Vector2d priors{0.5, 0.5};

  int dim() const { return model_a.dim(); }
};

// Deviance settings. eta defaults to 1/log(w0) so the width penalty runs
// from 0 at |alpha| = 1 to 1 at |alpha| = w0.
struct DevianceConfig {
  double w0 = 100.0;
  double eta = 0.21714724095162588;  // 1/log(100)
  double prob_floor = 1e-12;

  static DevianceConfig from_w0(double w0);
};

struct EmReport {
  int iterations_run = 0;
  std::vector<double> log_likelihood;  // one entry per iteration
  bool converged = false;
  double final_change = 0.0;
  std::vector<Eigen::MatrixXd> mean_trace;  // filled when EmSettings::track_means
};

struct EmSettings {
  int max_iter = 200;
  double tol = 1e-8;
  double cov_floor_rel = 1e-6;  // eigenvalue floor as a fraction of mean diagonal
  std::uint64_t seed = 1;
  bool track_means = false;
  // K-means restarts per fit; the run with the best final log-likelihood
  // wins. One start reproduces a single seeded fit exactly.
  int n_starts = 1;
};

struct KmeansInit {
  Eigen::MatrixXd means;             // K x d
  Eigen::VectorXd weights;           // K
  std::vector<int> assignments;      // n
};

// K-means++ seeding followed by Lloyd iterations; weights are the cluster
// fractions. A cluster that empties is re-seeded at the point farthest from
// its centroid. Deterministic given seed.
KmeansInit kmeans_init(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

// EM for the shared-covariance Gaussian mixture, started from `init`.
// Stops after settings.max_iter iterations or when the largest absolute
// parameter change falls below settings.tol. Covariance eigenvalues are
// floored at cov_floor_rel * mean(diag). Densities are evaluated in log
// space; underflow never raises.
std::pair<MixtureModel, EmReport> em_fit(const Eigen::MatrixXd& points, int k,
                                         const KmeansInit& init, const EmSettings& settings);

// Convenience: kmeans_init + em_fit.
std::pair<MixtureModel, EmReport> em_fit(const Eigen::MatrixXd& points, int k,
                                         const EmSettings& settings);

// Fits each class's mixture independently, pools the two within-class
// covariance estimates (weighted by sample counts) and re-assigns the pooled
// matrix to both models; priors become the empirical class fractions.
MdaClassifier fit_mda(const EnergyMatrix& energies, int k, const EmSettings& settings);

// Bayes posterior pair (p(A|x), p(B|x)), computed in log space; the two
// components sum to 1 exactly.
std::pair<double, double> class_posterior(const MdaClassifier& clf, const Eigen::VectorXd& x);

// Adjusted deviance: -2 * mean(log posterior of the true class, clipped
// below at prob_floor) + eta * log(total band width).
double deviance(const EnergyMatrix& energies, const MdaClassifier& clf, const BandSet& bands,
                const DevianceConfig& cfg);

// Argmax-posterior labels, ties broken toward class A.
std::vector<ClassLabel> classify(const MdaClassifier& clf, const EnergyMatrix& energies);
double accuracy(const std::vector<ClassLabel>& labels, const std::vector<ClassLabel>& truth);

std::string mda_to_json(const MdaClassifier& clf);
MdaClassifier mda_from_json(const std::string& text);

}  // namespace specband
