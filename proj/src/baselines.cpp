#include "specband/baselines.hpp"

#include "specband/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace specband {

BandSet uniform_band_grid(const FrequencyGrid& grid, double band_width) {
  if (!(band_width > 0)) throw std::invalid_argument("uniform_band_grid: width must be positive");
  const double range = grid.max() - grid.min();
  const int n = std::max(1, static_cast<int>(std::floor(range / band_width + 1e-9)));
  BandSet out;
  out.bands.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lo = grid.min() + band_width * i;
    const double hi = i + 1 == n ? grid.max() : lo + band_width;
    out.bands.push_back(Band{lo, hi});
  }
  validate_bandset(out, grid);
  return out;
}

// ---------------------------------------------------------------------------
// Random forest

namespace {

double gini(double n_a, double n_b) {
  const double n = n_a + n_b;
  if (n <= 0) return 0.0;
  const double pa = n_a / n;
  const double pb = n_b / n;
  return 1.0 - pa * pa - pb * pb;
}

}  // namespace

RandomForest::RandomForest(const Eigen::MatrixXd& x, const std::vector<ClassLabel>& y,
                           const RfConfig& cfg)
    : cfg_(cfg) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()) || x.rows() == 0)
    throw std::invalid_argument("RandomForest: inputs and labels must match and be non-empty");
  if (cfg.n_trees < 1) throw std::invalid_argument("RandomForest: n_trees must be >= 1");
  const bool has_a = std::find(y.begin(), y.end(), ClassLabel::A) != y.end();
  const bool has_b = std::find(y.begin(), y.end(), ClassLabel::B) != y.end();
  if (!has_a || !has_b) throw std::invalid_argument("RandomForest: both classes must be present");

  importances_ = Eigen::VectorXd::Zero(x.cols());
  trees_.reserve(static_cast<std::size_t>(cfg.n_trees));
  for (int t = 0; t < cfg.n_trees; ++t) {
    Eigen::VectorXd gini_sum = Eigen::VectorXd::Zero(x.cols());
    trees_.push_back(build_tree(x, y, derive_seed(cfg.seed, static_cast<std::uint64_t>(t)), gini_sum));
    importances_ += gini_sum;
  }
  const double total = importances_.sum();
  if (total > 0) importances_ /= total;
}

RandomForest::Tree RandomForest::build_tree(const Eigen::MatrixXd& x,
                                            const std::vector<ClassLabel>& y, std::uint64_t seed,
                                            Eigen::VectorXd& gini_sum) const {
  auto rng = make_engine(seed);
  const Eigen::Index n = x.rows();
  const int d = static_cast<int>(x.cols());
  const int mtry = cfg_.features_per_split > 0
                       ? std::min(cfg_.features_per_split, d)
                       : std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d)))));

  std::uniform_int_distribution<Eigen::Index> row_pick(0, n - 1);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = row_pick(rng);

  Tree tree;
  std::vector<int> feat_ids(static_cast<std::size_t>(d));
  std::iota(feat_ids.begin(), feat_ids.end(), 0);

  // Recursive CART growth on the bootstrap sample.
  auto grow = [&](auto&& self, std::vector<Eigen::Index> idx, int depth) -> int {
    double n_a = 0, n_b = 0;
    for (Eigen::Index i : idx) (y[static_cast<std::size_t>(i)] == ClassLabel::A ? n_a : n_b) += 1.0;
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(Node{});
    tree.nodes[static_cast<std::size_t>(node_id)].leaf = n_a >= n_b ? ClassLabel::A : ClassLabel::B;

    const double node_gini = gini(n_a, n_b);
    if (depth >= cfg_.max_depth || node_gini == 0.0 ||
        idx.size() <= static_cast<std::size_t>(2 * cfg_.min_leaf))
      return node_id;

    std::shuffle(feat_ids.begin(), feat_ids.end(), rng);

    int best_feat = -1;
    double best_thresh = 0.0;
    double best_gain = 1e-12;
    for (int fi = 0; fi < mtry; ++fi) {
      const int f = feat_ids[static_cast<std::size_t>(fi)];
      std::vector<Eigen::Index> sorted = idx;
      std::sort(sorted.begin(), sorted.end(),
                [&](Eigen::Index a, Eigen::Index b) { return x(a, f) < x(b, f); });
      double left_a = 0, left_b = 0;
      double right_a = n_a, right_b = n_b;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const bool is_a = y[static_cast<std::size_t>(sorted[i])] == ClassLabel::A;
        (is_a ? left_a : left_b) += 1.0;
        (is_a ? right_a : right_b) -= 1.0;
        if (x(sorted[i], f) == x(sorted[i + 1], f)) continue;
        const double n_left = left_a + left_b;
        const double n_right = right_a + right_b;
        if (n_left < cfg_.min_leaf || n_right < cfg_.min_leaf) continue;
        const double child =
            (n_left * gini(left_a, left_b) + n_right * gini(right_a, right_b)) / (n_a + n_b);
        const double gain = node_gini - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = f;
          best_thresh = 0.5 * (x(sorted[i], f) + x(sorted[i + 1], f));
        }
      }
    }
    if (best_feat < 0) return node_id;

    std::vector<Eigen::Index> left_idx, right_idx;
    for (Eigen::Index i : idx)
      (x(i, best_feat) <= best_thresh ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return node_id;

    gini_sum[best_feat] += best_gain * static_cast<double>(idx.size());
    const int left = self(self, std::move(left_idx), depth + 1);
    const int right = self(self, std::move(right_idx), depth + 1);
    tree.nodes[static_cast<std::size_t>(node_id)].feature = best_feat;
    tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_thresh;
    tree.nodes[static_cast<std::size_t>(node_id)].left = left;
    tree.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  };

  grow(grow, rows, 0);
  return tree;
}

ClassLabel RandomForest::predict(const Eigen::VectorXd& x) const {
  int votes_a = 0;
  for (const Tree& tree : trees_) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
      const Node& nd = tree.nodes[static_cast<std::size_t>(node)];
      node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    if (tree.nodes[static_cast<std::size_t>(node)].leaf == ClassLabel::A) ++votes_a;
  }
  return 2 * votes_a >= static_cast<int>(trees_.size()) ? ClassLabel::A : ClassLabel::B;
}

std::vector<ClassLabel> RandomForest::predict(const Eigen::MatrixXd& x) const {
  std::vector<ClassLabel> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd row = x.row(i).transpose();
    out[static_cast<std::size_t>(i)] = predict(row);
  }
  return out;
}

Eigen::VectorXd rf_importance(const EnergyMatrix& energies, const RfConfig& cfg) {
  RandomForest forest(energies.values, energies.labels, cfg);
  return forest.importances();
}

// ---------------------------------------------------------------------------

BandResult rf_mda(const SpectrumSet& a, const SpectrumSet& b, double band_width, int top_l,
                  const RfConfig& rf_cfg, const EgoConfig& eval_cfg) {
  BandSet uniform = uniform_band_grid(a.grid, band_width);
  if (top_l < 1 || top_l > static_cast<int>(uniform.size()))
    throw std::invalid_argument("rf_mda: top_l out of range for the uniform grid");

  EnergyMatrix energies = energy_matrix(a, b, uniform);
  Eigen::VectorXd imp = rf_importance(energies, rf_cfg);

  std::vector<int> order(uniform.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return imp[i] > imp[j]; });

  BandSet selected;
  for (int i = 0; i < top_l; ++i) selected.bands.push_back(uniform.bands[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  std::sort(selected.bands.begin(), selected.bands.end(),
            [](const Band& x, const Band& y) { return x.lo < y.lo; });

  Evaluation eval = evaluate_bands(selected, a, b, eval_cfg);
  return BandResult{std::move(selected), eval.y, std::move(eval.classifier)};
}

std::vector<RmdaDraw> r_mda(const SpectrumSet& a, const SpectrumSet& b, int l,
                            const RmdaNeighborhood& nb, int n_draws, std::uint64_t seed,
                            const EgoConfig& eval_cfg) {
  if (n_draws < 1) throw std::invalid_argument("r_mda: n_draws must be >= 1");
  if (!(nb.lo >= a.grid.min() && nb.hi <= a.grid.max() && nb.lo < nb.hi))
    throw std::invalid_argument("r_mda: neighborhood outside grid");
  if (!(nb.width_min > 0 && nb.width_min <= nb.width_max && nb.width_max <= nb.hi - nb.lo))
    throw std::invalid_argument("r_mda: invalid width bounds");

  const double min_width = eval_cfg.min_width > 0 ? eval_cfg.min_width : a.grid.min_spacing();
  std::vector<RmdaDraw> out;
  out.reserve(static_cast<std::size_t>(n_draws));
  for (int i = 0; i < n_draws; ++i) {
    auto rng = make_engine(derive_seed(seed, 0x726d6461, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> raw;
    raw.reserve(static_cast<std::size_t>(2 * l));
    for (int band = 0; band < l; ++band) {
      const double width = nb.width_min + (nb.width_max - nb.width_min) * unit(rng);
      const double lo = nb.lo + (nb.hi - width - nb.lo) * unit(rng);
      raw.push_back(lo);
      raw.push_back(lo + width);
    }
    BandSet bands = repair_bandset(std::move(raw), min_width, a.grid);
    Evaluation eval = evaluate_bands(bands, a, b, eval_cfg);
    out.push_back(RmdaDraw{std::move(bands), eval.y});
  }
  return out;
}

NmMdaResult nm_mda(const SpectrumSet& a, const SpectrumSet& b, const BandSet& init_bands,
                   const NmConfig& nm_cfg, const EgoConfig& eval_cfg) {
  validate_bandset(init_bands, a.grid);
  const double min_width = eval_cfg.min_width > 0 ? eval_cfg.min_width : a.grid.min_spacing();

  NmMdaResult result;
  auto objective = [&](const std::vector<double>& raw) {
    BandSet bands = repair_bandset(raw, min_width, a.grid);
    const double y = evaluate_bands(bands, a, b, eval_cfg).y;
    result.evaluation_trace.push_back(y);
    return y;
  };

  NmResult nm = nelder_mead(objective, init_bands.boundary_vector(), nm_cfg);
  result.bands = repair_bandset(nm.x, min_width, a.grid);
  result.deviance = nm.value;
  return result;
}

// ---------------------------------------------------------------------------

namespace {

MethodSummary summarize(const std::string& name, std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("compare_methods: no values for " + name);
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < values.size() ? values[i] * (1.0 - frac) + values[i + 1] * frac : values[i];
  };
  MethodSummary row;
  row.name = name;
  row.count = static_cast<int>(values.size());
  row.min = values.front();
  row.q25 = quantile(0.25);
  row.median = quantile(0.5);
  row.q75 = quantile(0.75);
  row.best = values.front();
  return row;
}

double training_accuracy(const SpectrumSet& a, const SpectrumSet& b, const BandSet& bands,
                         const EgoConfig& cfg) {
  EnergyMatrix energies = energy_matrix(a, b, bands);
  Evaluation eval = evaluate_bands(bands, a, b, cfg);
  return accuracy(classify(eval.classifier, energies), energies.labels);
}

std::string hash_deviance_config(const DevianceConfig& cfg) {
  // FNV-1a over the exact bit patterns of the shared deviance settings.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(cfg.w0);
  mix(cfg.eta);
  mix(cfg.prob_floor);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace

const MethodSummary& CompareTable::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw std::out_of_range("CompareTable: no method named " + name);
}

CompareTable compare_methods(const SpectrumSet& a, const SpectrumSet& b, const CompareConfig& cfg) {
  CompareTable table;
  EgoConfig common = cfg.ego;  // one deviance/EM/K configuration for every method
  common.l = cfg.l;
  common.seed = derive_seed(cfg.seed, 0x636d70);
  table.config_hash = hash_deviance_config(common.dev);

  // R-MDA: the draw deviances are the method's distribution.
  std::vector<RmdaDraw> draws =
      r_mda(a, b, cfg.l, cfg.neighborhood, cfg.r_draws, derive_seed(cfg.seed, 1), common);
  {
    std::vector<double> ys;
    const RmdaDraw* best = &draws.front();
    for (const auto& d : draws) {
      ys.push_back(d.deviance);
      if (d.deviance < best->deviance) best = &d;
    }
    MethodSummary row = summarize("R-MDA", std::move(ys));
    row.best_bands = best->bands;
    row.accuracy = training_accuracy(a, b, best->bands, common);
    table.rows.push_back(std::move(row));
  }

  // RF-MDA: a single fit at the top uniform bands.
  const double width = cfg.rf_band_width > 0 ? cfg.rf_band_width
                                             : (a.grid.max() - a.grid.min()) / 25.0;
  RfConfig rf_cfg = cfg.rf;
  rf_cfg.seed = derive_seed(cfg.seed, 2);
  BandResult rf = rf_mda(a, b, width, cfg.l, rf_cfg, common);
  {
    MethodSummary row = summarize("RF-MDA", {rf.deviance});
    row.best_bands = rf.bands;
    row.accuracy = training_accuracy(a, b, rf.bands, common);
    table.rows.push_back(std::move(row));
  }

  // NM-MDA: simplex refinement of the RF bands; distribution over its
  // objective evaluations.
  NmMdaResult nm = nm_mda(a, b, rf.bands, cfg.nm, common);
  {
    MethodSummary row = summarize("NM-MDA", nm.evaluation_trace);
    row.best_bands = nm.bands;
    row.best = nm.deviance;
    row.accuracy = training_accuracy(a, b, nm.bands, common);
    table.rows.push_back(std::move(row));
  }

  // EGO-MDA: the R-MDA draws double as the initial design; distribution over
  // the acquisition history.
  EgoHistory init;
  init.n_init = static_cast<int>(draws.size());
  for (const auto& d : draws) {
    EgoRecord rec;
    rec.bands = d.bands;
    rec.boundaries = d.bands.boundary_vector();
    rec.y = d.deviance;
    init.records.push_back(std::move(rec));
  }
  EgoResult ego = run_ego_mda(common, a, b, std::move(init));
  {
    std::vector<double> ys;
    for (std::size_t i = static_cast<std::size_t>(ego.history.n_init);
         i < ego.history.records.size(); ++i)
      ys.push_back(ego.history.records[i].y);
    if (ys.empty()) ys.push_back(ego.best_y);
    MethodSummary row = summarize("EGO-MDA", std::move(ys));
    row.best_bands = ego.best_bands;
    row.best = ego.best_y;
    row.accuracy = training_accuracy(a, b, ego.best_bands, common);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string compare_to_json(const CompareTable& table) {
  nlohmann::json j;
  j["config_hash"] = table.config_hash;
  j["methods"] = nlohmann::json::array();
  const double ego_median = table.row("EGO-MDA").median;
  for (const auto& r : table.rows) {
    nlohmann::json jr = {{"name", r.name},       {"count", r.count},   {"min", r.min},
                         {"q25", r.q25},         {"median", r.median}, {"q75", r.q75},
                         {"best", r.best},       {"accuracy", r.accuracy},
                         {"bands", nlohmann::json::parse(bandset_to_json(r.best_bands))}};
    if (r.name != "EGO-MDA" && r.median != 0.0)
      jr["improvement_pct"] = 100.0 * (r.median - ego_median) / r.median;
    j["methods"].push_back(std::move(jr));
  }
  return j.dump(2);
}

void save_compare_csv(const std::string& path, const CompareTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_compare_csv: cannot open " + path + " for writing");
  auto fmt = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  out << "method,count,min,q25,median,q75,best,accuracy,improvement_pct\n";
  const double ego_median = table.row("EGO-MDA").median;
  for (const auto& r : table.rows) {
    out << r.name << ',' << r.count << ',' << fmt(r.min) << ',' << fmt(r.q25) << ','
        << fmt(r.median) << ',' << fmt(r.q75) << ',' << fmt(r.best) << ',' << fmt(r.accuracy)
        << ',';
    if (r.name != "EGO-MDA" && r.median != 0.0)
      out << fmt(100.0 * (r.median - ego_median) / r.median);
    out << '\n';
  }
}

}  // namespace specband
