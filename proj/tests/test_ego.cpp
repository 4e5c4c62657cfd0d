#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "specband/ego.hpp"
#include "specband/random.hpp"
#include "specband/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace specband;

namespace {

// Small benchmark instance that keeps the loop fast.
std::pair<SpectrumSet, SpectrumSet> small_data(std::uint64_t seed, int n = 120) {
  SynthConfig cfg;
  cfg.n_per_class = n;
  cfg.seed = seed;
  return generate_synthetic(cfg);
}

EgoConfig small_config(std::uint64_t seed) {
  EgoConfig cfg;
  cfg.l = 2;
  cfg.n_init = 6;
  cfg.budget = 4;
  cfg.k = 2;
  cfg.ei_budget = 300;
  cfg.seed = seed;
  return cfg;
}

// One energetic band in class A against pure noise in class B; the bump is
// always on, so a single band finding it separates the classes.
std::pair<SpectrumSet, SpectrumSet> toy_bump(std::uint64_t seed, double lo, double hi, int n) {
  FrequencyGrid grid;
  for (double f = 0.0; f <= 100.0; f += 1.0) grid.freqs.push_back(f);
  auto rng = make_engine(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  SpectrumSet a{ClassLabel::A, grid, {}};
  SpectrumSet b{ClassLabel::B, grid, {}};
  for (int r = 0; r < n; ++r) {
    std::vector<double> va(grid.size()), vb(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const bool in = grid.freqs[i] >= lo && grid.freqs[i] <= hi;
      va[i] = (in ? 6.0 : 0.0) + noise(rng);
      vb[i] = noise(rng);
    }
    a.spectra.push_back(std::move(va));
    b.spectra.push_back(std::move(vb));
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

TEST_CASE("initialize_design: counters, determinism, stratified coverage") {
  auto [a, b] = small_data(3);
  EgoConfig cfg = small_config(3);
  cfg.n_init = 5;

  EgoHistory h = initialize_design(cfg, a, b);
  CHECK(h.p() == 5);
  CHECK(h.q == 0);
  CHECK(h.n_init == 5);

  EgoHistory h2 = initialize_design(cfg, a, b);
  REQUIRE(h2.p() == h.p());
  for (int i = 0; i < h.p(); ++i) {
    CHECK(h.records[static_cast<std::size_t>(i)].boundaries ==
          h2.records[static_cast<std::size_t>(i)].boundaries);
    CHECK(h.records[static_cast<std::size_t>(i)].y == h2.records[static_cast<std::size_t>(i)].y);
  }

  // Latin hypercube stratification: with n_init >= 10 every coordinate
  // reaches below 0.2 and above 0.8 in unit coordinates (before repair).
  const int n = 12;
  auto unit = latin_hypercube(n, 4, 77);
  for (int d = 0; d < 4; ++d) {
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
      lo = std::min(lo, unit[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)]);
      hi = std::max(hi, unit[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)]);
    }
    CHECK(lo < 0.2);
    CHECK(hi > 0.8);
  }
}

TEST_CASE("evaluate_bands: deterministic and tolerant of degenerate bands") {
  auto [a, b] = small_data(5);
  EgoConfig cfg = small_config(5);

  BandSet bands{{{21, 25}, {51, 55}}};
  Evaluation e1 = evaluate_bands(bands, a, b, cfg);
  Evaluation e2 = evaluate_bands(bands, a, b, cfg);
  CHECK(e1.y == e2.y);

  // A band pair sitting wholly in flat noise still evaluates.
  BandSet noise_bands{{{60, 62}, {80, 82}}};
  Evaluation e3 = evaluate_bands(noise_bands, a, b, cfg);
  CHECK(std::isfinite(e3.y));
  CHECK(e3.y > e1.y);
}

TEST_CASE("evaluate_bands: worked benchmark values") {
  SynthConfig scfg;
  scfg.n_per_class = 1000;
  scfg.seed = 11;
  auto [a, b] = generate_synthetic(scfg);
  EgoConfig cfg;
  cfg.l = 2;
  cfg.k = 3;
  cfg.seed = 11;

  // True bands: the deviance lands near the penalty floor of 0.45.
  const double y_true = evaluate_bands(BandSet{{{21, 25}, {51, 55}}}, a, b, cfg).y;
  CHECK(y_true > 0.25);
  CHECK(y_true < 0.80);

  // Dormant bands carry no class signal.
  const double y_dormant = evaluate_bands(BandSet{{{0, 5}, {6, 10}}}, a, b, cfg).y;
  CHECK(y_dormant >= y_true + 0.8);
}

TEST_CASE("ego_step: counters advance and the incumbent never rises") {
  auto [a, b] = small_data(7);
  EgoConfig cfg = small_config(7);
  cfg.box = default_box(a.grid, cfg.l);

  EgoHistory h = initialize_design(cfg, a, b);
  GprModel model = fit_surrogate(h, cfg);
  const int p0 = h.p();
  const int q0 = h.q;
  double best = h.best_value();
  for (int step = 0; step < 3; ++step) {
    std::tie(h, model) = ego_step(std::move(h), model, a, b, cfg);
    CHECK(h.p() == p0 + step + 1);
    CHECK(h.q == q0 + step + 1);
    CHECK(h.best_value() <= best + 1e-15);
    best = h.best_value();
  }
}

TEST_CASE("ego_step: locates a single energetic bump on a 1-band toy") {
  int hits = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto [a, b] = toy_bump(derive_seed(1000, static_cast<std::uint64_t>(s)), 40.0, 50.0, 60);
    EgoConfig cfg;
    cfg.l = 1;
    cfg.n_init = 8;
    cfg.budget = 30;
    cfg.k = 1;
    cfg.ei_budget = 500;
    cfg.seed = derive_seed(2000, static_cast<std::uint64_t>(s));
    EgoResult res = run_ego_mda(cfg, a, b);
    const Band& found = res.best_bands.bands[0];
    if (found.lo <= 50.0 && found.hi >= 40.0) ++hits;  // overlap with the bump
  }
  CHECK(hits >= 19);
}

TEST_CASE("run_ego_mda: zero budget returns the best initial design point") {
  auto [a, b] = small_data(9);
  EgoConfig cfg = small_config(9);
  cfg.budget = 0;
  EgoResult res = run_ego_mda(cfg, a, b);
  CHECK(res.history.q == 0);
  CHECK(res.history.p() == cfg.n_init);
  CHECK(res.best_y == res.history.best_value());
}

TEST_CASE("run_ego_mda: histories are bitwise identical under one seed") {
  auto [a, b] = small_data(13);
  EgoConfig cfg = small_config(13);
  EgoResult r1 = run_ego_mda(cfg, a, b);
  EgoResult r2 = run_ego_mda(cfg, a, b);
  REQUIRE(r1.history.p() == r2.history.p());
  for (int i = 0; i < r1.history.p(); ++i) {
    const auto& x = r1.history.records[static_cast<std::size_t>(i)];
    const auto& y = r2.history.records[static_cast<std::size_t>(i)];
    CHECK(x.boundaries == y.boundaries);
    CHECK(x.y == y.y);
  }
  CHECK(r1.best_y == r2.best_y);
}

TEST_CASE("run_ego_mda: every history record satisfies the band invariants") {
  auto [a, b] = small_data(17);
  EgoConfig cfg = small_config(17);
  cfg.budget = 6;
  EgoResult res = run_ego_mda(cfg, a, b);
  for (const auto& rec : res.history.records) {
    CHECK_NOTHROW(validate_bandset(rec.bands, a.grid));
    CHECK(rec.bands.total_width() > 0.0);
  }
}

TEST_CASE("run_ego_mda: improvement-based stop ends the run early") {
  auto [a, b] = small_data(19);
  EgoConfig cfg = small_config(19);
  cfg.budget = 40;
  cfg.stop = ImprovementStop{1e9, 3};  // nothing counts as improvement
  EgoResult res = run_ego_mda(cfg, a, b);
  CHECK(res.history.q <= 4);
}

TEST_CASE("run_ego_mda: accepts a pre-evaluated initial design") {
  auto [a, b] = small_data(23);
  EgoConfig cfg = small_config(23);
  cfg.budget = 2;

  EgoHistory init;
  init.n_init = 2;
  for (const auto& bands :
       {BandSet{{{10, 20}, {40, 50}}}, BandSet{{{20, 30}, {60, 80}}}}) {
    EgoRecord rec;
    rec.bands = bands;
    rec.boundaries = bands.boundary_vector();
    rec.y = evaluate_bands(bands, a, b, cfg).y;
    init.records.push_back(std::move(rec));
  }
  EgoResult res = run_ego_mda(cfg, a, b, std::move(init));
  CHECK(res.history.p() == 4);
  CHECK(res.history.q == 2);
}

TEST_CASE("incumbent trace is the running minimum") {
  auto [a, b] = small_data(29);
  EgoConfig cfg = small_config(29);
  EgoResult res = run_ego_mda(cfg, a, b);
  auto trace = res.history.incumbent_trace();
  double best = res.history.records.front().y;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    best = std::min(best, res.history.records[i].y);
    CHECK(trace[i] == best);
    if (i > 0) CHECK(trace[i] <= trace[i - 1]);
  }
}

TEST_CASE("result JSON and history CSV round out the run artifacts") {
  auto [a, b] = small_data(31);
  EgoConfig cfg = small_config(31);
  EgoResult res = run_ego_mda(cfg, a, b);

  const std::string json = ego_result_to_json(res, cfg);
  CHECK(json.find("\"bands\"") != std::string::npos);
  CHECK(json.find("\"deviance_trace\"") != std::string::npos);
  CHECK(json.find("\"incumbent_trace\"") != std::string::npos);
  CHECK(json.find("\"classifier\"") != std::string::npos);

  const std::string path =
      (std::filesystem::temp_directory_path() / "specband_history.csv").string();
  save_history_csv(path, res.history);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "p,q,lo_1,hi_1,lo_2,hi_2,y,best_so_far");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == res.history.p());
  std::remove(path.c_str());
}
