#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace specband {

// Squared-exponential kernel settings on the normalized unit box:
// k(u, v) = sigma_r^2 * exp(-|u - v|^2 / (2 theta_r^2)).
struct KernelConfig {
  double theta_r = 0.99;
  double sigma_r = 9.0;
  double nugget = 1e-8;
};

// Axis-aligned search box with an exact affine map to/from [0,1]^m.
struct SearchBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static SearchBox cube(double lo, double hi, int dim);

  int dim() const { return static_cast<int>(lo.size()); }
  Eigen::VectorXd normalize(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& unit) const;
};

struct Posterior {
  double mean = 0.0;
  double std = 0.0;
};

// Gaussian-process regressor over unit-box inputs with a constant estimated
// mean. Immutable once fitted.
struct GprModel {
  Eigen::MatrixXd inputs;      // P x m, in [0,1]^m
  Eigen::VectorXd outputs;     // P
  KernelConfig kernel;
  double mean_const = 0.0;
  double nugget_used = 0.0;
  Eigen::MatrixXd chol_l;      // lower Cholesky factor of K + nugget I
  Eigen::VectorXd alpha;       // (K + nugget I)^-1 (y - mean)

  Eigen::Index size() const { return inputs.rows(); }
};

double kernel_value(const KernelConfig& cfg, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// Fits the GP, escalating the nugget by x10 (up to 1e-4) whenever the
// Cholesky factorization fails. Throws after the last escalation.
GprModel gpr_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                 const KernelConfig& cfg);

// Predictive mean and standard deviation at one query point.
Posterior gpr_posterior(const GprModel& model, const Eigen::VectorXd& query);

// Closed-form expected improvement below y_min (Jones et al.):
// (y_min - m) Phi(z) + s phi(z) with z = (y_min - m)/s for s > 0,
// max(y_min - m, 0) for s = 0.
double expected_improvement(const Posterior& post, double y_min);

struct EiMaximum {
  Eigen::VectorXd point;  // unit box
  double ei = 0.0;
  bool flat = false;      // no candidate showed positive improvement
};

// Multi-start EI maximization: `budget` uniform candidates scored, the top
// five polished with Nelder-Mead on -EI (clamped to the unit box).
// Deterministic given seed, ties broken by candidate index.
EiMaximum maximize_ei(const GprModel& model, double y_min, int budget, std::uint64_t seed);

}  // namespace specband
