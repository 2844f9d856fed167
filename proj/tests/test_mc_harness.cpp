#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "slev/mc_harness.hpp"

using namespace slev;
using Catch::Approx;

namespace {

ExperimentConfig smoke_config(std::size_t days = 2) {
  ExperimentConfig cfg;
  cfg.scenario.grid = {256, 0.05};
  cfg.days = days;
  cfg.seed = 99;
  cfg.threads = 1;
  return cfg;
}

EstimationGrids small_grids() {
  EstimationGrids g;
  g.fel.m_values = {8, 16, 32};
  g.fel.n_values = {1, 2, 3};
  g.fev.m_values = {16, 64, 128};
  g.fev.n_values = {1};
  g.fevv.m_values = {8, 16};
  g.fevv.n_values = {2, 3};
  return g;
}

}  // namespace

TEST_CASE("smoke: two tiny days produce a report", "[mc_harness]") {
  const auto cfg = smoke_config();
  const auto rep = run_experiment(cfg);
  CHECK(rep.days_used == 2u);
  CHECK(rep.days_excluded == 0u);
  CHECK(rep.n == 256u);
  REQUIRE(rep.find("fel_mse") != nullptr);
  REQUIRE(rep.find("fev") != nullptr);
  // Too few days for the corrected procedure: recorded, not fatal.
  CHECK(rep.corrected_skipped.has_value());
  CHECK(rep.find("fel_star_mse") == nullptr);
  for (const auto& s : rep.summaries) {
    INFO(s.name);
    CHECK(s.error.recomposed() == Approx(s.error.mse).epsilon(1e-12).margin(1e-30));
  }
}

TEST_CASE("experiment is deterministic and thread-count independent", "[mc_harness]") {
  auto cfg = smoke_config(12);
  cfg.grids = small_grids();
  cfg.scenario.model = ModelKind::gen_heston;
  cfg.scenario.noise = {NoiseKind::shifted_exponential, 0.8, true};
  const auto a = run_experiment(cfg);
  cfg.threads = 3;
  const auto b = run_experiment(cfg);
  REQUIRE(a.summaries.size() == b.summaries.size());
  for (std::size_t i = 0; i < a.summaries.size(); ++i) {
    CHECK(a.summaries[i].values == b.summaries[i].values);
    CHECK(a.summaries[i].M == b.summaries[i].M);
    CHECK(a.summaries[i].N == b.summaries[i].N);
  }
  CHECK(to_json(a).at("tuning") == to_json(b).at("tuning"));
  cfg.seed = 100;
  const auto c = run_experiment(cfg);
  CHECK(c.summaries[0].values != a.summaries[0].values);
}

TEST_CASE("report contents with the corrected procedure", "[mc_harness]") {
  auto cfg = smoke_config(15);
  cfg.grids = small_grids();
  const auto rep = run_experiment(cfg);
  CHECK_FALSE(rep.corrected_skipped.has_value());
  for (const char* name : {"fel_mse", "fel_variance", "fel_star_mse", "fel_star_variance", "fev", "fevv"})
    CHECK(rep.find(name) != nullptr);
  const auto* star = rep.find("fel_star_variance");
  REQUIRE(star->lambda.has_value());
  CHECK(*star->lambda <= 1.0);
  CHECK(rep.find("fel_mse")->error.mse <= rep.tuning.at("fel_mse").surface[0] + 1e-300);
  // The variance objective reports the smallest sample variance on the grid.
  const auto& tv = rep.tuning.at("fel_variance");
  CHECK(rep.find("fel_variance")->var == *std::min_element(tv.surface.begin(), tv.surface.end()));
  CHECK(rep.rt.size() == 15u);
  REQUIRE(rep.rt_cuts.has_value());
  CHECK(rep.rt_cuts->fevv.N >= 2);
  // R~_T recomputes from stored pieces.
  const auto* fv = rep.find("fev");
  const auto* fvv = rep.find("fevv");
  const auto& lev = rep.tuning.at("fel_variance");
  for (std::size_t i = 0; i < rep.rt.size(); ++i)
    CHECK(rep.rt[i].rt_tilde ==
          Approx(lev.selected_estimates[i] / std::sqrt(fv->values[i] * fvv->values[i])).epsilon(1e-14));
  for (std::size_t i = 0; i < rep.records.size(); ++i) CHECK(rep.rt[i].true_rt == rep.records[i].truth.rt);
  CHECK(rep.eta_bar < 0.0);
}

TEST_CASE("evaluate_day matches the direct estimators", "[mc_harness]") {
  const auto g = small_grids();
  SimScenario sc;
  sc.grid = {400, 0.05};
  const auto sim = simulate_scenario(sc, 5);
  const auto& s = sim.noisy_series;
  const auto d = evaluate_day(s, g);
  for (std::size_t c = 0; c < g.fel.cells(); ++c) {
    CHECK(d.fel[c] == Approx(fel_spectral(s, g.fel.cell(c)).value).epsilon(1e-13));
    CHECK(d.upsilon[c] == Approx(upsilon(s, g.fel.cell(c))).epsilon(1e-13));
  }
  for (std::size_t i = 0; i < g.fev.m_values.size(); ++i)
    CHECK(d.fev[i] == Approx(fev(s, g.fev.m_values[i])).epsilon(1e-13));
  for (std::size_t c = 0; c < g.fevv.cells(); ++c) CHECK(d.fevv[c] == Approx(fevv(s, g.fevv.cell(c))).epsilon(1e-13));
}

TEST_CASE("subsampled observation keeps fine-grid truths", "[mc_harness]") {
  SimScenario sc;
  sc.grid = {1200, 0.05};
  sc.observe_every = 4;
  const auto sim = simulate_scenario(sc, 8);
  const auto obs = observed_series(sc, sim);
  CHECK(obs.size() == 300u);
  CHECK(sc.observed_n() == 300u);
  CHECK(obs.horizon() == 0.05);
  CHECK(obs.log_prices()[10] == sim.noisy_series.log_prices()[40]);
  CHECK(obs.timestamps().back() == 0.05);
  sc.observe_every = 7;
  CHECK_THROWS_AS(sc.validate(), InvalidInput);
}

TEST_CASE("degenerate days are excluded and counted", "[mc_harness]") {
  auto cfg = smoke_config(12);
  const auto g = small_grids();
  auto recs = simulate_days(cfg, g);
  recs[3].values.fel[2] = std::numeric_limits<double>::quiet_NaN();
  const auto rep = analyze_days(recs, g);
  CHECK(rep.days_excluded == 1u);
  CHECK(rep.excluded_days == std::vector<std::size_t>{3});
  CHECK(rep.days_used == 11u);
  CHECK(rep.find("fel_mse")->values.size() == 11u);
}

TEST_CASE("single-point sweep equals the plain experiment", "[mc_harness]") {
  auto cfg = smoke_config(12);
  cfg.grids = small_grids();
  cfg.scenario.model = ModelKind::gen_heston;
  const auto pts = run_sensitivity(cfg, SweepKind::theta, {cfg.scenario.gen_heston.theta});
  REQUIRE(pts.size() == 1u);
  REQUIRE(pts[0].report.has_value());
  const auto direct = run_experiment(cfg);
  CHECK(pts[0].report->summaries[0].values == direct.summaries[0].values);
  CHECK(pts[0].report->find("fel_star_variance")->lambda == direct.find("fel_star_variance")->lambda);
}

TEST_CASE("zeta sweep maps to the mean-reversion speed and skips invalid points", "[mc_harness]") {
  auto cfg = smoke_config(12);
  cfg.grids = small_grids();
  const auto pts = run_sensitivity(cfg, SweepKind::zeta, {-1.0, -0.5, 0.5, 1.5});
  REQUIRE(pts.size() == 4u);
  CHECK(pts[0].skipped);
  CHECK_FALSE(pts[1].skipped);
  CHECK_FALSE(pts[2].skipped);
  CHECK(pts[3].skipped);
  CHECK_FALSE(pts[0].reason.empty());
  // Correlation paths stay bounded at every valid point.
  for (double z : {-0.9, -0.5, 0.0, 0.5, 1.0}) {
    GenHestonParams p;
    p.eta_mr = 2.0 * p.xi / (z + 1.0);
    CHECK(p.mean_reversion_target() == Approx(z).margin(1e-12));
    const auto sim = simulate_gen_heston(p, SimGrid{2000, 0.05}, 3);
    for (double r : sim.rho_path) CHECK(std::abs(r) <= 1.0);
  }
}

TEST_CASE("experiment files and per-day recomputation", "[mc_harness]") {
  auto cfg = smoke_config(12);
  cfg.grids = small_grids();
  const auto dir = std::filesystem::temp_directory_path() / "slev_mc_files";
  std::filesystem::remove_all(dir);
  cfg.out_dir = dir;
  const auto rep = run_table_experiment(cfg);
  for (const char* f : {"report.json", "per_day.csv", "rt_series.csv", "README.txt", "surface_fel_mse.csv",
                        "surface_fel_star_variance.csv", "surface_fev_mse.csv", "surface_fevv_mse.csv"})
    CHECK(std::filesystem::exists(dir / f));

  // MSE from the stored per-day values.
  std::ifstream is(dir / "per_day.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "day,estimator,M,N,value,truth");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> cols;
  while (std::getline(is, line)) {
    std::stringstream ss(line);
    std::string day, name, m, n, v, t;
    std::getline(ss, day, ',');
    std::getline(ss, name, ',');
    std::getline(ss, m, ',');
    std::getline(ss, n, ',');
    std::getline(ss, v, ',');
    std::getline(ss, t, ',');
    cols[name].first.push_back(std::stod(v));
    cols[name].second.push_back(std::stod(t));
  }
  const auto j = nlohmann::json::parse(std::ifstream(dir / "report.json"));
  for (const auto& e : j.at("estimators")) {
    const auto& [v, t] = cols.at(e.at("name").get<std::string>());
    const auto dec = decompose(v, t);
    CHECK(dec.mse == Approx(e.at("mse").get<double>()).epsilon(1e-12));
    CHECK(dec.recomposed() == Approx(e.at("mse").get<double>()).epsilon(1e-12));
  }

  // Restricting the estimator set restricts the files.
  std::filesystem::remove_all(dir);
  cfg.estimators = {Estimator::fev};
  run_table_experiment(cfg);
  CHECK(std::filesystem::exists(dir / "surface_fev_mse.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "surface_fel_mse.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "rt_series.csv"));
  std::filesystem::remove_all(dir);
  (void)rep;
}

TEST_CASE("experiment config validation", "[mc_harness]") {
  auto cfg = smoke_config(1);
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.days = 5;
  cfg.scenario.model = ModelKind::gen_heston;
  cfg.scenario.gen_heston.xi = 0.9;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  CHECK(parse_model_kind("gh") == ModelKind::gen_heston);
  CHECK_THROWS_AS(parse_estimator("fel2"), InvalidInput);
}
