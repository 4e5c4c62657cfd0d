#include "specband/cli.hpp"

#include "specband/random.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace specband::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

void write_manifest(const std::string& out_dir, const Manifest& manifest) {
  json j;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["tool_version"] = kToolVersion;
  j["inputs"] = manifest.input_hashes;
  j["config"] = manifest.config_echo.empty() ? json::object() : json::parse(manifest.config_echo);
  j["duration_seconds"] = manifest.duration_seconds;
  write_text(join(out_dir, "manifest.json"), j.dump(2));
}

std::pair<std::string, std::string> cmd_synth(const SynthOptions& opts) {
  Stopwatch watch;
  ensure_dir(opts.out_dir);
  SynthConfig cfg;
  cfg.n_per_class = opts.n_per_class;
  cfg.seed = opts.seed;
  auto [a, b] = generate_synthetic(cfg, opts.threads);

  const std::string path_a = join(opts.out_dir, "classA.csv");
  const std::string path_b = join(opts.out_dir, "classB.csv");
  save_spectra_csv(path_a, a);
  save_spectra_csv(path_b, b);

  Manifest manifest;
  manifest.command = "synth";
  manifest.seed = opts.seed;
  manifest.input_hashes["classA.csv"] = hash_file(path_a);
  manifest.input_hashes["classB.csv"] = hash_file(path_b);
  manifest.config_echo =
      json{{"n_per_class", opts.n_per_class}, {"threads", opts.threads}}.dump();
  manifest.duration_seconds = watch.seconds();
  write_manifest(opts.out_dir, manifest);
  return {path_a, path_b};
}

namespace {

EgoConfig make_ego_config(const DiscoverOptions& opts) {
  EgoConfig cfg;
  cfg.l = opts.l;
  cfg.n_init = opts.n_init;
  cfg.budget = opts.iterations;
  cfg.dev = DevianceConfig::from_w0(opts.w0);
  if (opts.eta > 0) cfg.dev.eta = opts.eta;
  cfg.k = opts.k;
  cfg.min_width = opts.min_width;
  cfg.init = opts.init == "random" ? InitDesign::Random : InitDesign::LatinHypercube;
  cfg.kernel.theta_r = opts.gpr_theta;
  if (opts.gpr_sigma > 0) {
    cfg.kernel.sigma_r = opts.gpr_sigma;
    cfg.sigma_auto = false;
  }
  cfg.ei_budget = opts.ei_budget;
  cfg.seed = opts.seed;
  return cfg;
}

}  // namespace

EgoResult cmd_discover(const DiscoverOptions& opts) {
  Stopwatch watch;
  // Validate inputs before any compute.
  SpectrumSet a = load_spectra_csv(opts.class_a_path, ClassLabel::A);
  SpectrumSet b = load_spectra_csv(opts.class_b_path, ClassLabel::B);
  validate_spectrum_set(a);
  validate_spectrum_set(b);
  ensure_dir(opts.out_dir);

  EgoConfig cfg = make_ego_config(opts);
  EgoResult result = run_ego_mda(cfg, a, b);

  write_text(join(opts.out_dir, "result.json"), ego_result_to_json(result, cfg));
  save_bandset_json(join(opts.out_dir, "bands.json"), result.best_bands);
  save_history_csv(join(opts.out_dir, "history.csv"), result.history);

  Manifest manifest;
  manifest.command = "discover";
  manifest.seed = opts.seed;
  manifest.input_hashes[opts.class_a_path] = hash_file(opts.class_a_path);
  manifest.input_hashes[opts.class_b_path] = hash_file(opts.class_b_path);
  manifest.config_echo = json{{"l", opts.l},
                              {"iterations", opts.iterations},
                              {"n_init", opts.n_init},
                              {"w0", opts.w0},
                              {"eta", cfg.dev.eta},
                              {"k", opts.k},
                              {"init", opts.init},
                              {"gpr_theta", opts.gpr_theta},
                              {"gpr_sigma", opts.gpr_sigma},
                              {"ei_budget", opts.ei_budget}}
                             .dump();
  manifest.duration_seconds = watch.seconds();
  write_manifest(opts.out_dir, manifest);
  return result;
}

CompareTable cmd_compare(const CompareOptions& opts) {
  Stopwatch watch;
  if (opts.methods.size() < 2)
    throw std::invalid_argument("cmd_compare: at least two methods are required");
  SpectrumSet a = load_spectra_csv(opts.class_a_path, ClassLabel::A);
  SpectrumSet b = load_spectra_csv(opts.class_b_path, ClassLabel::B);
  validate_spectrum_set(a);
  validate_spectrum_set(b);
  ensure_dir(opts.out_dir);

  CompareConfig cfg;
  cfg.l = opts.l;
  cfg.r_draws = opts.r_draws;
  cfg.rf_band_width = opts.rf_band_width;
  cfg.neighborhood.lo = a.grid.min();
  cfg.neighborhood.hi = a.grid.max();
  cfg.neighborhood.width_min = a.grid.min_spacing();
  cfg.neighborhood.width_max = (a.grid.max() - a.grid.min()) / 8.0;
  cfg.ego.budget = opts.ego_iterations;
  cfg.ego.dev = DevianceConfig::from_w0(opts.w0);
  cfg.ego.k = opts.k;
  cfg.seed = opts.seed;

  CompareTable table = compare_methods(a, b, cfg);

  save_compare_csv(join(opts.out_dir, "compare.csv"), table);
  write_text(join(opts.out_dir, "compare.json"), compare_to_json(table));
  for (const auto& row : table.rows) {
    std::string name = row.name;
    for (char& c : name) c = c == '-' ? '_' : static_cast<char>(std::tolower(c));
    save_bandset_json(join(opts.out_dir, "bands_" + name + ".json"), row.best_bands);
  }

  Manifest manifest;
  manifest.command = "compare";
  manifest.seed = opts.seed;
  manifest.input_hashes[opts.class_a_path] = hash_file(opts.class_a_path);
  manifest.input_hashes[opts.class_b_path] = hash_file(opts.class_b_path);
  manifest.config_echo = json{{"l", opts.l},
                              {"r_draws", opts.r_draws},
                              {"rf_band_width", opts.rf_band_width},
                              {"ego_iterations", opts.ego_iterations},
                              {"w0", opts.w0},
                              {"k", opts.k},
                              {"config_hash", table.config_hash}}
                             .dump();
  manifest.duration_seconds = watch.seconds();
  write_manifest(opts.out_dir, manifest);
  return table;
}

DiagnoseSummary cmd_diagnose(const DiagnoseOptions& opts) {
  Stopwatch watch;
  if (opts.prop != 1 && opts.prop != 2)
    throw std::invalid_argument("cmd_diagnose: prop must be 1 or 2");
  if (opts.runs < 1 || opts.t_max < 0 || opts.n < 1)
    throw std::invalid_argument("cmd_diagnose: invalid runs/t_max/n");
  ensure_dir(opts.out_dir);

  DiagnoseSummary summary;
  summary.runs = opts.runs;

  std::ostringstream csv;
  csv << "t,bound,empirical_mean,empirical_max\n";

  if (opts.prop == 1) {
    Prop1Replication rep;
    rep.truth_means = {opts.mean_lo, opts.mean_hi};
    rep.n = opts.n;
    rep.t_max = opts.t_max;
    rep.params.k = 2;
    rep.params.d = 1;
    rep.params.pi_min = 0.5;
    rep.params.r_min = rep.params.r_max = std::abs(opts.mean_hi - opts.mean_lo);
    rep.params.lambda = opts.lambda;
    rep.params.delta = opts.delta;
    rep.params.c = opts.c_gate;
    rep.params.c1 = opts.c1;

    std::vector<std::vector<double>> errors;
    std::vector<double> bound;
    for (int r = 0; r < opts.runs; ++r) {
      rep.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(r));
      Prop1RunResult run = prop1_replicate_once(rep);
      if (run.below_bound) ++summary.runs_below_bound;
      errors.push_back(run.error_trace);
      if (bound.empty()) bound = run.bound_trace;  // identical shape; E0 varies per run
    }
    for (std::size_t t = 0; t < bound.size(); ++t) {
      double mean = 0.0, mx = 0.0;
      for (const auto& e : errors) {
        mean += e[t];
        mx = std::max(mx, e[t]);
      }
      mean /= static_cast<double>(errors.size());
      csv << t << ',' << bound[t] << ',' << mean << ',' << mx << '\n';
    }
  } else {
    Prop2Params params;
    params.theta_star = opts.theta_star;
    params.rho = opts.rho;
    params.delta = opts.delta;

    std::vector<std::vector<double>> errors;
    std::vector<double> bound;
    for (int r = 0; r < opts.runs; ++r) {
      auto sample = sample_misspecified(params, static_cast<int>(opts.n),
                                        derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
      auto trace = em_misspecified(sample, opts.theta0, opts.t_max);
      const double theta_bar = trace.back();
      bool ok = true;
      std::vector<double> err;
      std::vector<double> bnd;
      for (std::size_t t = 0; t < trace.size(); ++t) {
        const double e = std::fabs(trace[t] - theta_bar);
        const double b = prop2_bound(params, opts.n, static_cast<int>(t), opts.theta0, theta_bar);
        err.push_back(e);
        bnd.push_back(b);
        if (e > b) ok = false;
      }
      if (ok) ++summary.runs_below_bound;
      errors.push_back(std::move(err));
      if (bound.empty()) bound = std::move(bnd);
    }
    for (std::size_t t = 0; t < bound.size(); ++t) {
      double mean = 0.0, mx = 0.0;
      for (const auto& e : errors) {
        mean += e[t];
        mx = std::max(mx, e[t]);
      }
      mean /= static_cast<double>(errors.size());
      csv << t << ',' << bound[t] << ',' << mean << ',' << mx << '\n';
    }
  }

  summary.pass_fraction = static_cast<double>(summary.runs_below_bound) / summary.runs;
  write_text(join(opts.out_dir, "bounds.csv"), csv.str());

  Manifest manifest;
  manifest.command = "diagnose";
  manifest.seed = opts.seed;
  manifest.config_echo = json{{"prop", opts.prop},
                              {"runs", opts.runs},
                              {"t_max", opts.t_max},
                              {"n", opts.n},
                              {"pass_fraction", summary.pass_fraction}}
                             .dump();
  manifest.duration_seconds = watch.seconds();
  write_manifest(opts.out_dir, manifest);
  return summary;
}

std::string cmd_report(const ReportOptions& opts) {
  std::ifstream in(opts.result_path);
  if (!in) throw std::runtime_error("cmd_report: cannot open " + opts.result_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("cmd_report: malformed result file: " + std::string(e.what()));
  }
  if (!j.contains("bands") || !j.contains("deviance"))
    throw std::runtime_error("cmd_report: result file missing bands/deviance");

  BandSet best = bandset_from_json(j.at("bands").dump());

  std::ostringstream out;
  out << "bands (" << best.size() << "):\n";
  for (std::size_t i = 0; i < best.size(); ++i)
    out << "  band " << (i + 1) << ": [" << best.bands[i].lo << ", " << best.bands[i].hi
        << "] Hz  width " << best.bands[i].width() << "\n";
  out << "total width: " << best.total_width() << " Hz\n";
  out << "deviance: " << j.at("deviance").get<double>() << "\n";

  if (!opts.truth_path.empty()) {
    BandSet truth = load_bandset_json(opts.truth_path);
    out << "total absolute error vs truth: " << total_absolute_error(best, truth) << " Hz\n";
    std::vector<BandSet> history;
    if (j.contains("history")) {
      for (const auto& rec : j.at("history")) {
        auto bounds = rec.at("boundaries").get<std::vector<double>>();
        BandSet bs;
        for (std::size_t i = 0; i + 1 < bounds.size(); i += 2)
          bs.bands.push_back(Band{bounds[i], bounds[i + 1]});
        history.push_back(std::move(bs));
      }
    } else {
      history.push_back(best);
    }
    OverlapStats stats = overlap_stats(history, truth);
    out << "history complete-overlap fraction: " << stats.complete_fraction << "\n";
    out << "history partial-overlap fraction: " << stats.partial_fraction << "\n";
    out << "history width ratio (excess over truth): " << stats.mean_width_ratio << "\n";
  }
  return out.str();
}

}  // namespace specband::cli
