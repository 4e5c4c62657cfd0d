#pragma once

#include "specband/ego.hpp"
#include "specband/mixture.hpp"
#include "specband/optim.hpp"
#include "specband/spectra.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace specband {

// Contiguous equal-width partition of the grid range; the last band absorbs
// any remainder so the bands tile the range exactly.
BandSet uniform_band_grid(const FrequencyGrid& grid, double band_width);

struct RfConfig {
  int n_trees = 200;
  int max_depth = 8;
  int features_per_split = 0;  // 0 means ceil(sqrt(d))
  int min_leaf = 1;
  std::uint64_t seed = 1;
};

// Random forest of CART trees (Gini splits, bootstrap rows, random feature
// subsets). Kept minimal: binary labels, dense features.
class RandomForest {
 public:
  RandomForest(const Eigen::MatrixXd& x, const std::vector<ClassLabel>& y, const RfConfig& cfg);

  ClassLabel predict(const Eigen::VectorXd& x) const;
  std::vector<ClassLabel> predict(const Eigen::MatrixXd& x) const;

  // Total Gini decrease per feature, normalized to sum 1.
  const Eigen::VectorXd& importances() const { return importances_; }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    ClassLabel leaf = ClassLabel::A;
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  Tree build_tree(const Eigen::MatrixXd& x, const std::vector<ClassLabel>& y, std::uint64_t seed,
                  Eigen::VectorXd& gini_sum) const;

  std::vector<Tree> trees_;
  Eigen::VectorXd importances_;
  RfConfig cfg_;
};

// Per-band Gini importances for the uniform-band energies. Throws when only
// one class is present.
Eigen::VectorXd rf_importance(const EnergyMatrix& energies, const RfConfig& cfg);

struct BandResult {
  BandSet bands;
  double deviance = 0.0;
  MdaClassifier classifier;
};

// RF-MDA: energies over the uniform band grid, forest importances, top_l
// bands selected, MDA fitted at those bands.
BandResult rf_mda(const SpectrumSet& a, const SpectrumSet& b, double band_width, int top_l,
                  const RfConfig& rf_cfg, const EgoConfig& eval_cfg);

// Neighborhood for random band draws.
struct RmdaNeighborhood {
  double lo = 0.0;
  double hi = 100.0;
  double width_min = 1.0;
  double width_max = 12.0;
};

struct RmdaDraw {
  BandSet bands;
  double deviance = 0.0;
};

// R-MDA: n_draws random band sets (uniform location and width inside the
// neighborhood), each evaluated with the common MDA settings.
std::vector<RmdaDraw> r_mda(const SpectrumSet& a, const SpectrumSet& b, int l,
                            const RmdaNeighborhood& nb, int n_draws, std::uint64_t seed,
                            const EgoConfig& eval_cfg);

struct NmMdaResult {
  BandSet bands;
  double deviance = 0.0;
  std::vector<double> evaluation_trace;  // every objective evaluation, in order
};

// NM-MDA: Nelder-Mead over the 2L boundary vector with repair inside the
// objective, started from init_bands.
NmMdaResult nm_mda(const SpectrumSet& a, const SpectrumSet& b, const BandSet& init_bands,
                   const NmConfig& nm_cfg, const EgoConfig& eval_cfg);

struct CompareConfig {
  int l = 2;
  int r_draws = 50;
  RmdaNeighborhood neighborhood;
  double rf_band_width = 0.0;  // 0 means grid range / 25
  RfConfig rf;
  NmConfig nm;
  EgoConfig ego;  // shared deviance/EM/K settings; ego budget for the EGO run
  std::uint64_t seed = 1;
};

struct MethodSummary {
  std::string name;
  int count = 0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double best = 0.0;        // lowest deviance the method produced
  double accuracy = 0.0;    // training accuracy of the best band set
  BandSet best_bands;
};

struct CompareTable {
  std::vector<MethodSummary> rows;
  std::string config_hash;  // same DevianceConfig across methods, by construction

  const MethodSummary& row(const std::string& name) const;
};

// Runs R-MDA, RF-MDA, NM-MDA (initialized from RF-MDA's bands) and EGO-MDA
// (initialized from the R-MDA draws) under one common deviance/EM/K
// configuration. Method distributions: R-MDA over its draws, RF-MDA its
// single fit, NM-MDA its evaluation trace, EGO-MDA its acquisition history.
CompareTable compare_methods(const SpectrumSet& a, const SpectrumSet& b, const CompareConfig& cfg);

std::string compare_to_json(const CompareTable& table);
void save_compare_csv(const std::string& path, const CompareTable& table);

}  // namespace specband
