#pragma once

#include "specband/mixture.hpp"
#include "specband/spectra.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace specband {

// Synthetic two-class benchmark. Each class is pure unit noise except over
// its own active band, where grid points carry a two-component value: noise
// with weight 4/5 and a bump component with weight 1/5 whose mean peaks
// mid-band. Bump sites are drawn per realization: usually exactly one
// in-band site is active, occasionally two, occasionally none, so each
// site's marginal equals the bump weight (one site in five on the default
// grid) while full-band coverage is required to see every realization.
struct SynthConfig {
  double grid_lo = 0.0;
  double grid_hi = 100.0;
  double grid_step = 1.0;
  int n_per_class = 1000;
  std::uint64_t seed = 1;
  Band band_a{21.0, 25.0};
  Band band_b{51.0, 55.0};
  double dormant_prob = 0.12;    // realizations with no bump site at all
  double bump_peak_a = 69.0;     // bump mean at the band center
  double bump_peak_b = 84.0;
  double bump_slope = 16.0;      // mean decays by slope * |f - center|

  FrequencyGrid make_grid() const;
  BandSet true_bands() const { return BandSet{{band_a, band_b}}; }
};

// Draws the two class sets. Realizations are generated from per-realization
// derived seeds, so results do not depend on worker count or call order.
std::pair<SpectrumSet, SpectrumSet> generate_synthetic(const SynthConfig& cfg, int threads = 1);

// Sum of absolute boundary differences after sorting both band sets by lo.
// Throws if the band counts differ.
double total_absolute_error(const BandSet& bands, const BandSet& truth);

struct OverlapStats {
  double complete_fraction = 0.0;  // every truth band fully inside some solution band
  double partial_fraction = 0.0;   // at least one truth band intersected
  double mean_width_ratio = 0.0;   // mean(solution width / truth width) - 1
};

OverlapStats overlap_stats(const std::vector<BandSet>& history, const BandSet& truth);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Sample-size requirement and convergence bound for well-specified EM.

struct Prop1Params {
  int k = 2;
  int d = 1;
  double pi_min = 0.5;
  double r_min = 18.0;   // smallest pairwise centroid separation
  double r_max = 18.0;   // largest pairwise centroid separation
  double lambda = 0.05;  // in (0, 1/2)
  double delta = 0.05;   // in (0, 1)
  double c = 1.0;        // leading constant of the sample-size requirement
  double c1 = 1.0;       // constant of the error-bound floor

  // 100 K^2 R_max (sqrt(d) + 2 R_max)^2, always recomputed.
  double c_tilde() const;
};

// Right-hand side of the sample-size requirement N/log N > rhs.
double prop1_requirement_rhs(const Prop1Params& p);

// Smallest integer N with N / log N strictly above the requirement.
long long prop1_min_samples(const Prop1Params& p);

// Error bound at iteration t: initial_error / 2^t plus the statistical
// floor. Throws if N is below the sample-size requirement for these params.
double prop1_error_bound(const Prop1Params& p, long long n, int t, double initial_error);

struct Prop1Replication {
  std::vector<double> truth_means;  // sorted ascending
  long long n = 1500;
  int t_max = 60;
  std::uint64_t seed = 1;
  Prop1Params params;
};

struct Prop1RunResult {
  std::vector<double> error_trace;  // max over components, per iteration (0..t)
  std::vector<double> bound_trace;
  bool below_bound = false;         // error <= bound for every t
  int lambda_ball_entry = -1;       // first t with error <= lambda * R_k
};

// One seeded draw-and-fit replication of the 1-d two-component example.
Prop1RunResult prop1_replicate_once(const Prop1Replication& cfg);

// ---------------------------------------------------------------------------
// Misspecified mixture: three-component truth fitted with the symmetric
// two-component model g = 0.5 N(theta, 1) + 0.5 N(-theta, 1).

struct Prop2Params {
  double theta_star = 1.0;
  double sigma = 1.0;
  double rho = 0.04;
  double delta = 0.05;
  double c1 = 1.0;
  double c2 = 1.0;
  double c_prime = 1.0;
  double c_rho = 0.49;  // half-width of the projection interval around theta_star

  double xi() const { return std::abs(theta_star) / sigma; }
  double gamma() const;
};

// i.i.d. draws from the three-component truth with weights (1/4, 1/4, 1/2)
// and means theta*(-rho-1), theta*(rho-1), theta*.
std::vector<double> sample_misspecified(const Prop2Params& p, int n, std::uint64_t seed);

// Sample EM trace for the symmetric model's single parameter:
// theta_{t+1} = mean(x tanh(theta_t x / sigma^2)). trace[0] == theta0.
std::vector<double> em_misspecified(const std::vector<double>& sample, double theta0, int t_max);

// Bound at iteration t around the projection parameter theta_bar.
// Throws if N < c1 log(1/delta).
double prop2_bound(const Prop2Params& p, long long n, int t, double theta0, double theta_bar);

}  // namespace specband
