#pragma once

#include "specband/baselines.hpp"
#include "specband/ego.hpp"
#include "specband/synth.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace specband::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64 over file bytes, hex encoded.
std::string hash_file(const std::string& path);

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;
  std::string config_echo;  // JSON text
  double duration_seconds = 0.0;
};

void write_manifest(const std::string& out_dir, const Manifest& manifest);

struct SynthOptions {
  int n_per_class = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
};

// Writes classA.csv / classB.csv and the manifest. Returns the file paths.
std::pair<std::string, std::string> cmd_synth(const SynthOptions& opts);

struct DiscoverOptions {
  std::string class_a_path;
  std::string class_b_path;
  int l = 2;
  int iterations = 200;
  int n_init = 10;
  double w0 = 100.0;
  double eta = 0.0;  // 0 means 1/log10(w0)
  int k = 3;
  double min_width = 0.0;
  std::string init = "lhs";  // or "random"
  double gpr_theta = 0.99;
  double gpr_sigma = 0.0;  // 0 means auto-scaled to the deviance spread
  int ei_budget = 2000;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

EgoResult cmd_discover(const DiscoverOptions& opts);

struct CompareOptions {
  std::string class_a_path;
  std::string class_b_path;
  std::vector<std::string> methods{"r", "rf", "nm", "ego"};
  int l = 2;
  int r_draws = 50;
  double rf_band_width = 0.0;
  int ego_iterations = 100;
  double w0 = 100.0;
  int k = 3;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

CompareTable cmd_compare(const CompareOptions& opts);

struct DiagnoseOptions {
  int prop = 1;
  int runs = 100;
  int t_max = 60;
  long long n = 1500;
  std::uint64_t seed = 1;
  // Proposition-1 example settings.
  double mean_lo = 3.0;
  double mean_hi = 21.0;
  double lambda = 0.05;
  double delta = 0.05;
  double c_gate = 0.8;  // Eq.-gate constant for the replication
  double c1 = 1.0;
  // Proposition-2 example settings.
  double theta_star = 1.0;
  double rho = 0.04;
  double theta0 = 0.6;
  std::string out_dir = ".";
};

struct DiagnoseSummary {
  int runs = 0;
  int runs_below_bound = 0;
  double pass_fraction = 0.0;
};

DiagnoseSummary cmd_diagnose(const DiagnoseOptions& opts);

struct ReportOptions {
  std::string result_path;
  std::string truth_path;  // optional BandSet JSON
};

std::string cmd_report(const ReportOptions& opts);

}  // namespace specband::cli
