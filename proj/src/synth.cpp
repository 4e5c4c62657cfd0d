#include "specband/synth.hpp"

#include "specband/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace specband {

FrequencyGrid SynthConfig::make_grid() const {
  FrequencyGrid grid;
  for (double f = grid_lo; f <= grid_hi + 1e-9; f += grid_step) grid.freqs.push_back(f);
  validate_grid(grid);
  return grid;
}

namespace {

std::vector<double> draw_realization(const SynthConfig& cfg, const FrequencyGrid& grid,
                                     ClassLabel label, std::uint64_t seed) {
  auto rng = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Band& band = label == ClassLabel::A ? cfg.band_a : cfg.band_b;
  const double peak = label == ClassLabel::A ? cfg.bump_peak_a : cfg.bump_peak_b;
  const double center = 0.5 * (band.lo + band.hi);

  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.freqs[i] >= band.lo && grid.freqs[i] <= band.hi) sites.push_back(i);

  // Active-site count: 0 with prob q, 2 with prob q, otherwise 1. The mean
  // count is one, so each site's marginal bump probability is 1/|sites|.
  std::vector<std::size_t> active;
  if (!sites.empty()) {
    const double q = cfg.dormant_prob;
    const double u = unit(rng);
    int count = u < q ? 0 : (u < 2.0 * q ? 2 : 1);
    count = std::min<int>(count, static_cast<int>(sites.size()));
    std::vector<std::size_t> pool = sites;
    for (int c = 0; c < count; ++c) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t j = pick(rng);
      active.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }

  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double z = noise(rng);
    if (std::find(active.begin(), active.end(), i) != active.end()) {
      values[i] = peak - cfg.bump_slope * std::fabs(grid.freqs[i] - center) + z;
    } else {
      values[i] = z;
    }
  }
  return values;
}

}  // namespace

std::pair<SpectrumSet, SpectrumSet> generate_synthetic(const SynthConfig& cfg, int threads) {
  if (cfg.n_per_class < 1) throw std::invalid_argument("generate_synthetic: n_per_class must be >= 1");
  if (!(cfg.dormant_prob >= 0.0 && cfg.dormant_prob <= 0.5))
    throw std::invalid_argument("generate_synthetic: dormant_prob must lie in [0, 0.5]");
  FrequencyGrid grid = cfg.make_grid();
  validate_bandset(cfg.true_bands(), grid);

  SpectrumSet a{ClassLabel::A, grid, {}};
  SpectrumSet b{ClassLabel::B, grid, {}};
  a.spectra.resize(static_cast<std::size_t>(cfg.n_per_class));
  b.spectra.resize(static_cast<std::size_t>(cfg.n_per_class));

  auto fill = [&](std::size_t idx) {
    const auto r = static_cast<std::uint64_t>(idx);
    a.spectra[idx] = draw_realization(cfg, grid, ClassLabel::A, derive_seed(cfg.seed, 0, r));
    b.spectra[idx] = draw_realization(cfg, grid, ClassLabel::B, derive_seed(cfg.seed, 1, r));
  };

  const std::size_t n = static_cast<std::size_t>(cfg.n_per_class);
  if (threads <= 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) fill(i);
  } else {
    const int workers = std::min<int>(threads, static_cast<int>(n));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(workers))
          fill(i);
      });
    for (auto& t : pool) t.join();
  }
  return {std::move(a), std::move(b)};
}

double total_absolute_error(const BandSet& bands, const BandSet& truth) {
  if (bands.size() != truth.size())
    throw std::invalid_argument("total_absolute_error: band counts differ");
  auto sorted = [](BandSet s) {
    std::sort(s.bands.begin(), s.bands.end(), [](const Band& x, const Band& y) { return x.lo < y.lo; });
    return s;
  };
  const BandSet bs = sorted(bands);
  const BandSet ts = sorted(truth);
  double err = 0.0;
  for (std::size_t i = 0; i < bs.size(); ++i)
    err += std::fabs(bs.bands[i].lo - ts.bands[i].lo) + std::fabs(bs.bands[i].hi - ts.bands[i].hi);
  return err;
}

OverlapStats overlap_stats(const std::vector<BandSet>& history, const BandSet& truth) {
  if (history.empty()) throw std::invalid_argument("overlap_stats: empty history");
  const double truth_width = truth.total_width();
  OverlapStats out;
  for (const auto& sol : history) {
    bool complete = true;
    bool partial = false;
    for (const Band& t : truth.bands) {
      bool contained = false;
      bool touched = false;
      for (const Band& s : sol.bands) {
        if (s.lo <= t.lo && t.hi <= s.hi) contained = true;
        if (std::min(s.hi, t.hi) > std::max(s.lo, t.lo)) touched = true;
      }
      complete = complete && contained;
      partial = partial || touched;
    }
    if (complete) out.complete_fraction += 1.0;
    if (partial) out.partial_fraction += 1.0;
    out.mean_width_ratio += sol.total_width() / truth_width;
  }
  const double n = static_cast<double>(history.size());
  out.complete_fraction /= n;
  out.partial_fraction /= n;
  out.mean_width_ratio = out.mean_width_ratio / n - 1.0;
  return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: need two equal-length vectors of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

// ---------------------------------------------------------------------------

double Prop1Params::c_tilde() const {
  const double root_d = std::sqrt(static_cast<double>(d));
  return 100.0 * k * k * r_max * (root_d + 2.0 * r_max) * (root_d + 2.0 * r_max);
}

double prop1_requirement_rhs(const Prop1Params& p) {
  if (!(p.lambda > 0 && p.lambda < 0.5)) throw std::invalid_argument("prop1: lambda must be in (0, 1/2)");
  if (!(p.delta > 0 && p.delta < 1)) throw std::invalid_argument("prop1: delta must be in (0, 1)");
  if (!(p.pi_min > 0 && p.r_min > 0 && p.r_max > 0 && p.c > 0))
    throw std::invalid_argument("prop1: parameters must be positive");
  const double lead = p.c * p.k * p.d * std::log(p.c_tilde() / p.delta) / p.pi_min;
  const double one_minus = 1.0 - 2.0 * p.lambda;
  const double second =
      1.0 / (p.lambda * p.lambda * p.pi_min * p.r_min * p.r_min * one_minus * one_minus);
  return lead * std::max(1.0, second);
}

long long prop1_min_samples(const Prop1Params& p) {
  const double rhs = prop1_requirement_rhs(p);
  auto satisfied = [&](long long n) {
    return static_cast<double>(n) / std::log(static_cast<double>(n)) > rhs;
  };
  // N / log N is increasing for N >= 3: bracket exponentially, then bisect.
  long long lo = 3;
  if (satisfied(lo)) return lo;
  long long hi = 8;
  while (!satisfied(hi)) {
    hi *= 2;
    if (hi > (1LL << 60)) throw std::runtime_error("prop1_min_samples: requirement out of range");
  }
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (satisfied(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double prop1_error_bound(const Prop1Params& p, long long n, int t, double initial_error) {
  if (t < 0) throw std::invalid_argument("prop1_error_bound: t must be >= 0");
  const long long required = prop1_min_samples(p);
  if (n < required)
    throw std::invalid_argument("prop1_error_bound: N = " + std::to_string(n) +
                                " is below the sample-size requirement " + std::to_string(required) +
                                "; the bound is invalid there");
  const double floor_term = (p.c1 / p.pi_min) / (1.0 - 2.0 * p.lambda) *
                            std::sqrt(std::log(p.c_tilde() * static_cast<double>(n) / p.delta) /
                                      (static_cast<double>(n) / (p.k * p.d)));
  return std::ldexp(initial_error, -t) + floor_term;
}

Prop1RunResult prop1_replicate_once(const Prop1Replication& cfg) {
  if (cfg.truth_means.size() != static_cast<std::size_t>(cfg.params.k))
    throw std::invalid_argument("prop1_replicate_once: truth means must match k");

  // Draw from the equal-weight unit-variance mixture at the truth means.
  auto rng = make_engine(cfg.seed);
  std::uniform_int_distribution<std::size_t> comp(0, cfg.truth_means.size() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd pts(cfg.n, 1);
  for (long long i = 0; i < cfg.n; ++i) pts(i, 0) = cfg.truth_means[comp(rng)] + noise(rng);

  EmSettings settings;
  settings.max_iter = cfg.t_max;
  settings.tol = 0.0;  // run all t_max iterations so the trace covers every t
  settings.seed = derive_seed(cfg.seed, 7);
  settings.track_means = true;
  auto [model, report] = em_fit(pts, cfg.params.k, settings);

  std::vector<double> truth = cfg.truth_means;
  std::sort(truth.begin(), truth.end());
  auto trace_error = [&](const Eigen::MatrixXd& means) {
    std::vector<double> est(means.data(), means.data() + means.rows());
    std::sort(est.begin(), est.end());
    double err = 0.0;
    for (std::size_t j = 0; j < est.size(); ++j)
      err = std::max(err, std::fabs(est[j] - truth[j]));
    return err;
  };

  Prop1RunResult out;
  out.below_bound = true;
  const double initial_error = trace_error(report.mean_trace.front());
  // R_k equals r_min for the two-component example.
  const double ball = cfg.params.lambda * cfg.params.r_min;
  for (std::size_t t = 0; t < report.mean_trace.size(); ++t) {
    const double err = trace_error(report.mean_trace[t]);
    const double bound = prop1_error_bound(cfg.params, cfg.n, static_cast<int>(t), initial_error);
    out.error_trace.push_back(err);
    out.bound_trace.push_back(bound);
    if (err > bound) out.below_bound = false;
    if (out.lambda_ball_entry < 0 && err <= ball) out.lambda_ball_entry = static_cast<int>(t);
  }
  return out;
}

// ---------------------------------------------------------------------------

double Prop2Params::gamma() const { return std::exp(-c_prime * xi() * xi()); }

std::vector<double> sample_misspecified(const Prop2Params& p, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_misspecified: n must be >= 1");
  if (!(p.sigma > 0)) throw std::invalid_argument("sample_misspecified: sigma must be positive");
  auto rng = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double m1 = p.theta_star * (-p.rho - 1.0);
  const double m2 = p.theta_star * (p.rho - 1.0);
  const double m3 = p.theta_star;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) {
    const double u = unit(rng);
    const double mean = u < 0.25 ? m1 : (u < 0.5 ? m2 : m3);
    v = mean + p.sigma * noise(rng);
  }
  return out;
}

std::vector<double> em_misspecified(const std::vector<double>& sample, double theta0, int t_max) {
  if (sample.empty()) throw std::invalid_argument("em_misspecified: empty sample");
  if (theta0 == 0.0) throw std::invalid_argument("em_misspecified: theta0 must be nonzero");
  if (t_max < 0) throw std::invalid_argument("em_misspecified: t_max must be >= 0");

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(t_max) + 1);
  trace.push_back(theta0);
  double theta = theta0;
  const double inv_n = 1.0 / static_cast<double>(sample.size());
  for (int t = 0; t < t_max; ++t) {
    double next = 0.0;
    for (double x : sample) next += x * std::tanh(theta * x);
    next *= inv_n;
    trace.push_back(next);
    theta = next;
  }
  return trace;
}

double prop2_bound(const Prop2Params& p, long long n, int t, double theta0, double theta_bar) {
  if (t < 0) throw std::invalid_argument("prop2_bound: t must be >= 0");
  const double required = p.c1 * std::log(1.0 / p.delta);
  if (static_cast<double>(n) < required)
    throw std::invalid_argument("prop2_bound: N = " + std::to_string(n) +
                                " is below c1 log(1/delta); the bound is invalid there");
  const double gamma = p.gamma();
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("prop2_bound: gamma must lie in (0,1)");
  const double floor_term = p.c2 / (1.0 - gamma) * std::abs(p.theta_star) *
                            (p.theta_star * p.theta_star + p.sigma * p.sigma) *
                            std::sqrt(std::log(1.0 / p.delta) / static_cast<double>(n));
  return std::pow(gamma, t) * std::fabs(theta0 - theta_bar) + floor_term;
}

}  // namespace specband
