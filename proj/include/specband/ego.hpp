#pragma once

#include "specband/gpr.hpp"
#include "specband/mixture.hpp"
#include "specband/spectra.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace specband {

enum class InitDesign { LatinHypercube, Random };

// Optional improvement-based stop: end the search early when the incumbent
// has not improved by more than tol over the last `window` acquisitions.
struct ImprovementStop {
  double tol = 1e-4;
  int window = 30;
};

struct EgoConfig {
  int l = 2;                 // number of bands
  int n_init = 10;           // initial design size
  int budget = 200;          // acquisition iterations
  std::optional<SearchBox> box;  // defaults to the full grid range per boundary
  DevianceConfig dev = DevianceConfig::from_w0(100.0);
  int k = 3;                 // mixture components per class
  EmSettings em;
  KernelConfig kernel;
  // When set, the kernel's process std is replaced each refit by
  // sigma_auto_scale times the sample std of the observed deviances, which
  // keeps the explore/exploit balance independent of the deviance scale.
  // The fixed sigma_r is used otherwise.
  bool sigma_auto = true;
  double sigma_auto_scale = 2.0;
  int ei_budget = 2000;
  // Fit the classifier on alternating rows and score the deviance on the
  // held-out rows. Kills the optimistic bias that otherwise rewards
  // degenerate bands; disable to score on the fitting data itself.
  bool eval_split = true;
  double min_width = 0.0;    // 0 means two grid spacings
  InitDesign init = InitDesign::LatinHypercube;
  std::optional<ImprovementStop> stop;
  std::uint64_t seed = 1;
};

struct EgoRecord {
  BandSet bands;
  std::vector<double> boundaries;  // repaired boundary vector, Hz
  double y = 0.0;
  bool flat_acquisition = false;
};

struct EgoHistory {
  std::vector<EgoRecord> records;
  int n_init = 0;
  int q = 0;  // acquisitions taken

  int p() const { return static_cast<int>(records.size()); }
  std::size_t best_index() const;
  double best_value() const;
  const EgoRecord& best() const { return records[best_index()]; }
  std::vector<double> incumbent_trace() const;  // running minimum of y
};

struct EgoResult {
  BandSet best_bands;
  double best_y = 0.0;
  EgoHistory history;
  MdaClassifier classifier;  // classifier of the incumbent record
  std::uint64_t seed = 0;
};

struct Evaluation {
  double y = 0.0;
  MdaClassifier classifier;
};

// Energy extraction + MDA fit + deviance for one band set. Deterministic
// given cfg.seed; degenerate energies are absorbed by the covariance floor.
Evaluation evaluate_bands(const BandSet& bands, const SpectrumSet& a, const SpectrumSet& b,
                          const EgoConfig& cfg);

SearchBox default_box(const FrequencyGrid& grid, int l);

// Initial design: n_init boundary vectors sampled over the search box
// (Latin hypercube by default), repaired and evaluated.
EgoHistory initialize_design(const EgoConfig& cfg, const SpectrumSet& a, const SpectrumSet& b);

// Fit the surrogate to the full history (normalized inputs, observed y).
GprModel fit_surrogate(const EgoHistory& history, const EgoConfig& cfg);

// One acquisition: maximize EI, repair, evaluate, append; P and Q grow by
// one and the surrogate is refit on all records.
std::pair<EgoHistory, GprModel> ego_step(EgoHistory history, const GprModel& model,
                                         const SpectrumSet& a, const SpectrumSet& b,
                                         const EgoConfig& cfg);

EgoResult run_ego_mda(const EgoConfig& cfg, const SpectrumSet& a, const SpectrumSet& b);

// Variant starting from pre-evaluated records (used when another method's
// draws serve as the initial design).
EgoResult run_ego_mda(const EgoConfig& cfg, const SpectrumSet& a, const SpectrumSet& b,
                      EgoHistory initial);

// result JSON: bands, deviance trace, incumbent trace, seed, config echo.
std::string ego_result_to_json(const EgoResult& result, const EgoConfig& cfg);
// history CSV: p, q, boundaries..., y, best_so_far
void save_history_csv(const std::string& path, const EgoHistory& history);

}  // namespace specband
