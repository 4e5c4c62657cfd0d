#include "specband/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>

namespace {

// Minimal JSON config support: values from --config become defaults, flags
// given on the command line take precedence.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    nlohmann::json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (!opt->get_lnames().empty() && opt->count() > 0 && opt->get_configurable())
        j[opt->get_lnames()[0]] = opt->results().back();
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    input >> j;
    std::vector<CLI::ConfigItem> items;
    for (auto it = j.begin(); it != j.end(); ++it) {
      CLI::ConfigItem item;
      item.name = it.key();
      if (it.value().is_array()) {
        for (const auto& v : it.value())
          item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      } else {
        item.inputs.push_back(it.value().is_string() ? it.value().get<std::string>()
                                                     : it.value().dump());
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

}  // namespace

int main(int argc, char** argv) {
  using namespace specband;

  CLI::App app{"Spectral-band discovery for two-class spectra"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file mirroring the flags");
  app.config_formatter(std::make_shared<JsonConfig>());

  cli::SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate the synthetic benchmark spectra");
  synth_cmd->add_option("--n", synth.n_per_class, "Realizations per class")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--threads", synth.threads, "Worker threads")->capture_default_str();
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->capture_default_str();

  cli::DiscoverOptions disc;
  CLI::App* disc_cmd = app.add_subcommand("discover", "Search for discriminating bands");
  disc_cmd->add_option("--class-a", disc.class_a_path, "Class A spectra CSV")->required();
  disc_cmd->add_option("--class-b", disc.class_b_path, "Class B spectra CSV")->required();
  disc_cmd->add_option("--bands", disc.l, "Number of bands L")->capture_default_str();
  disc_cmd->add_option("--iterations", disc.iterations, "Acquisition iterations")->capture_default_str();
  disc_cmd->add_option("--n-init", disc.n_init, "Initial design size")->capture_default_str();
  disc_cmd->add_option("--w0", disc.w0, "Width scale for the deviance penalty")->capture_default_str();
  disc_cmd->add_option("--eta", disc.eta, "Penalty coefficient (default 1/log10 w0)");
  disc_cmd->add_option("--k", disc.k, "Mixture components per class")->capture_default_str();
  disc_cmd->add_option("--min-width", disc.min_width, "Minimum band width (default one grid step)");
  disc_cmd->add_option("--init", disc.init, "Initial design: lhs or random")->capture_default_str();
  disc_cmd->add_option("--gpr-theta", disc.gpr_theta, "Kernel range parameter")->capture_default_str();
  disc_cmd->add_option("--gpr-sigma", disc.gpr_sigma, "Kernel process std (default auto)");
  disc_cmd->add_option("--ei-budget", disc.ei_budget, "EI candidates per iteration")->capture_default_str();
  disc_cmd->add_option("--seed", disc.seed, "Random seed")->capture_default_str();
  disc_cmd->add_option("--out", disc.out_dir, "Output directory")->capture_default_str();

  cli::CompareOptions cmp;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Compare band-search methods");
  cmp_cmd->add_option("--class-a", cmp.class_a_path, "Class A spectra CSV")->required();
  cmp_cmd->add_option("--class-b", cmp.class_b_path, "Class B spectra CSV")->required();
  cmp_cmd->add_option("--methods", cmp.methods, "Methods to run")->capture_default_str();
  cmp_cmd->add_option("--bands", cmp.l, "Number of bands L")->capture_default_str();
  cmp_cmd->add_option("--r-draws", cmp.r_draws, "Random band draws")->capture_default_str();
  cmp_cmd->add_option("--rf-width", cmp.rf_band_width, "Uniform band width (default range/25)");
  cmp_cmd->add_option("--ego-iterations", cmp.ego_iterations, "EGO budget")->capture_default_str();
  cmp_cmd->add_option("--w0", cmp.w0, "Width scale for the deviance penalty")->capture_default_str();
  cmp_cmd->add_option("--k", cmp.k, "Mixture components per class")->capture_default_str();
  cmp_cmd->add_option("--seed", cmp.seed, "Random seed")->capture_default_str();
  cmp_cmd->add_option("--out", cmp.out_dir, "Output directory")->capture_default_str();

  cli::DiagnoseOptions diag;
  CLI::App* diag_cmd = app.add_subcommand("diagnose", "EM convergence-bound diagnostics");
  diag_cmd->add_option("--prop", diag.prop, "Diagnostic 1 or 2")->capture_default_str();
  diag_cmd->add_option("--runs", diag.runs, "Seeded runs")->capture_default_str();
  diag_cmd->add_option("--t-max", diag.t_max, "Iterations per run")->capture_default_str();
  diag_cmd->add_option("--n", diag.n, "Sample size")->capture_default_str();
  diag_cmd->add_option("--mean-lo", diag.mean_lo, "Lower truth mean (prop 1)")->capture_default_str();
  diag_cmd->add_option("--mean-hi", diag.mean_hi, "Upper truth mean (prop 1)")->capture_default_str();
  diag_cmd->add_option("--lambda", diag.lambda, "Contraction radius fraction")->capture_default_str();
  diag_cmd->add_option("--delta", diag.delta, "Failure probability")->capture_default_str();
  diag_cmd->add_option("--c-gate", diag.c_gate, "Sample-size gate constant")->capture_default_str();
  diag_cmd->add_option("--c1", diag.c1, "Bound floor constant")->capture_default_str();
  diag_cmd->add_option("--theta-star", diag.theta_star, "True parameter (prop 2)")->capture_default_str();
  diag_cmd->add_option("--rho", diag.rho, "Component separation (prop 2)")->capture_default_str();
  diag_cmd->add_option("--theta0", diag.theta0, "EM start (prop 2)")->capture_default_str();
  diag_cmd->add_option("--seed", diag.seed, "Random seed")->capture_default_str();
  diag_cmd->add_option("--out", diag.out_dir, "Output directory")->capture_default_str();

  cli::ReportOptions rep;
  CLI::App* rep_cmd = app.add_subcommand("report", "Summarize a discovery result");
  rep_cmd->add_option("--result", rep.result_path, "result.json from discover")->required();
  rep_cmd->add_option("--truth", rep.truth_path, "Optional truth BandSet JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      auto [pa, pb] = cli::cmd_synth(synth);
      std::cout << "wrote " << pa << " and " << pb << "\n";
    } else if (*disc_cmd) {
      EgoResult result = cli::cmd_discover(disc);
      std::cout << "best deviance " << result.best_y << " after " << result.history.p()
                << " evaluations; outputs in " << disc.out_dir << "\n";
    } else if (*cmp_cmd) {
      CompareTable table = cli::cmd_compare(cmp);
      for (const auto& row : table.rows)
        std::cout << row.name << ": median " << row.median << ", best " << row.best
                  << ", accuracy " << row.accuracy << "\n";
    } else if (*diag_cmd) {
      cli::DiagnoseSummary s = cli::cmd_diagnose(diag);
      std::cout << "runs below bound: " << s.runs_below_bound << "/" << s.runs << " ("
                << 100.0 * s.pass_fraction << "%)\n";
    } else if (*rep_cmd) {
      std::cout << cli::cmd_report(rep);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
