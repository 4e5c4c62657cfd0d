#include "specband/ego.hpp"

#include "specband/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace specband {

namespace {

double resolved_min_width(const EgoConfig& cfg, const FrequencyGrid& grid) {
  // A band narrower than two grid spacings rests on one or two samples;
  // its energy is nearly degenerate and admits spurious optima.
  return cfg.min_width > 0 ? cfg.min_width : 2.0 * grid.min_spacing();
}

SearchBox resolved_box(const EgoConfig& cfg, const FrequencyGrid& grid) {
  if (cfg.box) {
    if (cfg.box->dim() != 2 * cfg.l)
      throw std::invalid_argument("ego: search box dimension must equal 2L");
    return *cfg.box;
  }
  return default_box(grid, cfg.l);
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::size_t EgoHistory::best_index() const {
  if (records.empty()) throw std::runtime_error("EgoHistory: empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].y < records[best].y) best = i;
  return best;
}

double EgoHistory::best_value() const { return records[best_index()].y; }

std::vector<double> EgoHistory::incumbent_trace() const {
  std::vector<double> out;
  out.reserve(records.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    best = std::min(best, r.y);
    out.push_back(best);
  }
  return out;
}

SearchBox default_box(const FrequencyGrid& grid, int l) {
  return SearchBox::cube(grid.min(), grid.max(), 2 * l);
}

namespace {

constexpr int kScoreFolds = 5;

EnergyMatrix take_rows(const EnergyMatrix& energies, const std::vector<Eigen::Index>& rows) {
  EnergyMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), energies.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = energies.values.row(rows[i]);
    out.labels.push_back(energies.labels[static_cast<std::size_t>(rows[i])]);
  }
  return out;
}

int class_count(const EnergyMatrix& energies, ClassLabel label) {
  int n = 0;
  for (ClassLabel l : energies.labels)
    if (l == label) ++n;
  return n;
}

}  // namespace

Evaluation evaluate_bands(const BandSet& bands, const SpectrumSet& a, const SpectrumSet& b,
                          const EgoConfig& cfg) {
  EnergyMatrix energies = energy_matrix(a, b, bands);
  EmSettings em = cfg.em;
  // One fixed fitting stream: re-evaluating the same bands reproduces y.
  em.seed = derive_seed(cfg.seed, 0x6d6461);
  em.n_starts = std::max(em.n_starts, 3);  // smooths fit flips across neighbor band sets

  MdaClassifier clf = fit_mda(energies, cfg.k, em);
  if (cfg.eval_split) {
    // Cross-scored deviance: each fold is scored by the model fitted on the
    // remaining rows, so every realization contributes an out-of-fit term
    // and degenerate bands cannot buy deviance through overfitting.
    std::vector<std::vector<Eigen::Index>> folds(kScoreFolds);
    for (Eigen::Index i = 0; i < energies.rows(); ++i)
      folds[static_cast<std::size_t>(i % kScoreFolds)].push_back(i);

    bool feasible = true;
    const int need = std::max(cfg.k, 2);
    std::vector<EnergyMatrix> held, rest;
    for (int f = 0; f < kScoreFolds && feasible; ++f) {
      std::vector<Eigen::Index> others;
      for (int g = 0; g < kScoreFolds; ++g)
        if (g != f) others.insert(others.end(), folds[static_cast<std::size_t>(g)].begin(),
                                  folds[static_cast<std::size_t>(g)].end());
      std::sort(others.begin(), others.end());
      EnergyMatrix fit_part = take_rows(energies, others);
      EnergyMatrix eval_part = take_rows(energies, folds[static_cast<std::size_t>(f)]);
      feasible = class_count(fit_part, ClassLabel::A) >= need &&
                 class_count(fit_part, ClassLabel::B) >= need &&
                 class_count(eval_part, ClassLabel::A) >= 1 &&
                 class_count(eval_part, ClassLabel::B) >= 1;
      if (feasible) {
        held.push_back(std::move(eval_part));
        rest.push_back(std::move(fit_part));
      }
    }
    if (feasible) {
      double weighted = 0.0;
      for (int f = 0; f < kScoreFolds; ++f) {
        MdaClassifier fold_clf = fit_mda(rest[static_cast<std::size_t>(f)], cfg.k, em);
        weighted += static_cast<double>(held[static_cast<std::size_t>(f)].rows()) *
                    deviance(held[static_cast<std::size_t>(f)], fold_clf, bands, cfg.dev);
      }
      return Evaluation{weighted / static_cast<double>(energies.rows()), std::move(clf)};
    }
  }
  return Evaluation{deviance(energies, clf, bands, cfg.dev), std::move(clf)};
}

namespace {

EgoRecord evaluate_record(const std::vector<double>& raw, const SpectrumSet& a,
                          const SpectrumSet& b, const EgoConfig& cfg, double min_width,
                          MdaClassifier* clf_out) {
  BandSet bands = repair_bandset(raw, min_width, a.grid);
  Evaluation eval = evaluate_bands(bands, a, b, cfg);
  EgoRecord rec;
  rec.boundaries = bands.boundary_vector();
  rec.bands = std::move(bands);
  rec.y = eval.y;
  if (clf_out) *clf_out = std::move(eval.classifier);
  return rec;
}

}  // namespace

EgoHistory initialize_design(const EgoConfig& cfg, const SpectrumSet& a, const SpectrumSet& b) {
  if (cfg.n_init < 2) throw std::invalid_argument("initialize_design: n_init must be >= 2");
  if (cfg.l < 1) throw std::invalid_argument("initialize_design: l must be >= 1");
  const SearchBox box = resolved_box(cfg, a.grid);
  const double min_width = resolved_min_width(cfg, a.grid);
  const int dim = 2 * cfg.l;

  std::vector<std::vector<double>> unit;
  if (cfg.init == InitDesign::LatinHypercube) {
    unit = latin_hypercube(cfg.n_init, dim, derive_seed(cfg.seed, 0x696e6974));
  } else {
    auto rng = make_engine(derive_seed(cfg.seed, 0x696e6974));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    unit.assign(static_cast<std::size_t>(cfg.n_init), std::vector<double>(dim));
    for (auto& row : unit)
      for (auto& v : row) v = u(rng);
  }

  EgoHistory history;
  history.n_init = cfg.n_init;
  history.q = 0;
  for (const auto& row : unit) {
    Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(row.data(), dim);
    Eigen::VectorXd raw = box.denormalize(u);
    history.records.push_back(evaluate_record(
        std::vector<double>(raw.data(), raw.data() + raw.size()), a, b, cfg, min_width, nullptr));
  }
  return history;
}

GprModel fit_surrogate(const EgoHistory& history, const EgoConfig& cfg) {
  if (history.records.empty()) throw std::invalid_argument("fit_surrogate: empty history");
  // The box must match the one used to generate the history. Callers of the
  // public API pass the same cfg throughout, so re-resolving is safe.
  const int dim = static_cast<int>(history.records.front().boundaries.size());
  SearchBox box = cfg.box ? *cfg.box : SearchBox{};
  if (!cfg.box) throw std::invalid_argument("fit_surrogate: cfg.box must be resolved");
  if (box.dim() != dim) throw std::invalid_argument("fit_surrogate: box dimension mismatch");

  const Eigen::Index n = static_cast<Eigen::Index>(history.records.size());
  Eigen::MatrixXd x(n, dim);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = history.records[static_cast<std::size_t>(i)];
    Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(rec.boundaries.data(), dim);
    x.row(i) = box.normalize(raw).transpose();
    y[i] = rec.y;
  }

  KernelConfig kernel = cfg.kernel;
  if (cfg.sigma_auto) {
    // Profile estimate of the process variance given the range parameter:
    // sigma^2 = |L^-1 (y - mean)|^2 / n on the correlation matrix. It
    // starts near the raw spread and shrinks as the surrogate explains the
    // data, handing the acquisition over to exploitation.
    KernelConfig unit = kernel;
    unit.sigma_r = 1.0;
    GprModel corr = gpr_fit(x, y, unit);
    Eigen::VectorXd centered = y.array() - corr.mean_const;
    Eigen::VectorXd v = corr.chol_l.triangularView<Eigen::Lower>().solve(centered);
    const double sigma2 = v.squaredNorm() / static_cast<double>(n);
    kernel.sigma_r = std::max(cfg.sigma_auto_scale * std::sqrt(sigma2), 1e-6);
  }
  return gpr_fit(x, y, kernel);
}

std::pair<EgoHistory, GprModel> ego_step(EgoHistory history, const GprModel& model,
                                         const SpectrumSet& a, const SpectrumSet& b,
                                         const EgoConfig& cfg) {
  const SearchBox box = resolved_box(cfg, a.grid);
  const double min_width = resolved_min_width(cfg, a.grid);

  const std::uint64_t ei_seed = derive_seed(cfg.seed, 0x6569, static_cast<std::uint64_t>(history.q));
  EiMaximum acq = maximize_ei(model, history.best_value(), cfg.ei_budget, ei_seed);

  Eigen::VectorXd raw = box.denormalize(acq.point);
  EgoRecord rec = evaluate_record(std::vector<double>(raw.data(), raw.data() + raw.size()), a, b,
                                  cfg, min_width, nullptr);
  rec.flat_acquisition = acq.flat;
  history.records.push_back(std::move(rec));
  history.q += 1;

  EgoConfig fit_cfg = cfg;
  fit_cfg.box = box;
  GprModel refit = fit_surrogate(history, fit_cfg);
  return {std::move(history), std::move(refit)};
}

namespace {

EgoResult finish(const EgoConfig& cfg, const SpectrumSet& a, const SpectrumSet& b,
                 EgoHistory history) {
  EgoResult result;
  const EgoRecord& best = history.best();
  result.best_bands = best.bands;
  result.best_y = best.y;
  result.seed = cfg.seed;
  // Only the incumbent's classifier is kept; re-evaluating reproduces it
  // exactly under the fixed fitting stream.
  result.classifier = evaluate_bands(best.bands, a, b, cfg).classifier;
  result.history = std::move(history);
  return result;
}

}  // namespace

EgoResult run_ego_mda(const EgoConfig& cfg, const SpectrumSet& a, const SpectrumSet& b,
                      EgoHistory history) {
  if (cfg.budget < 0) throw std::invalid_argument("run_ego_mda: budget must be >= 0");
  EgoConfig run_cfg = cfg;
  run_cfg.box = resolved_box(cfg, a.grid);

  if (cfg.budget == 0 || static_cast<int>(history.records.size()) < 2)
    return finish(run_cfg, a, b, std::move(history));

  GprModel model = fit_surrogate(history, run_cfg);
  int stale = 0;
  double last_best = history.best_value();
  for (int step = 0; step < cfg.budget; ++step) {
    std::tie(history, model) = ego_step(std::move(history), model, a, b, run_cfg);
    if (run_cfg.stop) {
      if (last_best - history.best_value() > run_cfg.stop->tol) {
        stale = 0;
        last_best = history.best_value();
      } else if (++stale >= run_cfg.stop->window) {
        break;
      }
    }
  }
  return finish(run_cfg, a, b, std::move(history));
}

EgoResult run_ego_mda(const EgoConfig& cfg, const SpectrumSet& a, const SpectrumSet& b) {
  return run_ego_mda(cfg, a, b, initialize_design(cfg, a, b));
}

std::string ego_result_to_json(const EgoResult& result, const EgoConfig& cfg) {
  nlohmann::json j;
  j["bands"] = nlohmann::json::parse(bandset_to_json(result.best_bands));
  j["deviance"] = result.best_y;
  j["seed"] = result.seed;
  j["config"] = {{"l", cfg.l},
                 {"n_init", cfg.n_init},
                 {"budget", cfg.budget},
                 {"k", cfg.k},
                 {"w0", cfg.dev.w0},
                 {"eta", cfg.dev.eta},
                 {"theta_r", cfg.kernel.theta_r},
                 {"sigma_r", cfg.kernel.sigma_r},
                 {"sigma_auto", cfg.sigma_auto},
                 {"ei_budget", cfg.ei_budget},
                 {"init", cfg.init == InitDesign::LatinHypercube ? "lhs" : "random"}};
  j["n_init"] = result.history.n_init;
  j["q"] = result.history.q;

  std::vector<double> ys;
  for (const auto& r : result.history.records) ys.push_back(r.y);
  j["deviance_trace"] = ys;
  j["incumbent_trace"] = result.history.incumbent_trace();

  j["history"] = nlohmann::json::array();
  for (const auto& r : result.history.records)
    j["history"].push_back({{"boundaries", r.boundaries}, {"y", r.y}});
  j["classifier"] = nlohmann::json::parse(mda_to_json(result.classifier));
  return j.dump(2);
}

void save_history_csv(const std::string& path, const EgoHistory& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_history_csv: cannot open " + path + " for writing");
  const std::size_t dim = history.records.empty() ? 0 : history.records.front().boundaries.size();
  out << "p,q";
  for (std::size_t i = 0; i < dim / 2; ++i) out << ",lo_" << (i + 1) << ",hi_" << (i + 1);
  out << ",y,best_so_far\n";
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < history.records.size(); ++i) {
    const auto& r = history.records[i];
    best = std::min(best, r.y);
    const int q = static_cast<int>(i) < history.n_init
                      ? 0
                      : static_cast<int>(i) - history.n_init + 1;
    out << (i + 1) << ',' << q;
    for (double v : r.boundaries) out << ',' << format_double(v);
    out << ',' << format_double(r.y) << ',' << format_double(best) << '\n';
  }
}

}  // namespace specband
