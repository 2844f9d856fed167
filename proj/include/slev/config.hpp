#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slev/errors.hpp"
#include "slev/market_data.hpp"
#include "slev/mc_harness.hpp"

namespace slev {

/// Defaults of every recognised key. A null default accepts a value of the
/// documented type or null (meaning "derive it").
inline nlohmann::json default_config_json() {
  const HestonParams h;
  const GenHestonParams gh;
  return nlohmann::json::parse(R"({
    "seed": 20240601,
    "threads": 0,
    "out": null,
    "scenario": {
      "model": "heston",
      "steps": 5400,
      "horizon": 0.05,
      "observe_every": 1,
      "price_roundtrip": false,
      "heston": {},
      "gen_heston": {}
    },
    "noise": {
      "kind": "gaussian",
      "noise_to_signal": 0.8,
      "negative_skew": false,
      "absolute_std": null
    },
    "grid": {
      "fel": {"m_values": null, "n_values": null},
      "fev": {"m_values": null},
      "fevv": {"m_values": null, "n_values": null}
    },
    "tune": {
      "days": 20,
      "objective": "variance",
      "corrected": true,
      "min_replications": 10
    },
    "mc": {
      "days": 50,
      "estimators": ["fel", "fel_star", "fev", "fevv", "rt", "rt_star"],
      "sweep": {"kind": null, "values": []}
    },
    "empirical": {
      "input": null,
      "session": {"open": null, "close": null, "utc_offset": 0},
      "rv_step": 300,
      "acf_max_lag": 20,
      "min_replications": 10,
      "lev_cut": null,
      "fev_m": null,
      "fevv_cut": null,
      "synthetic": {"days": 30, "first_date": "2008-01-02", "open": 34200, "session_seconds": null}
    }
  })")
      .patch(nlohmann::json::array(
          {{{"op", "replace"},
            {"path", "/scenario/heston"},
            {"value",
             {{"alpha", h.alpha}, {"beta", h.beta}, {"nu", h.nu}, {"rho", h.rho}, {"sigma2_0", h.sigma2_0}, {"p0", h.p0}}}},
           {{"op", "replace"},
            {"path", "/scenario/gen_heston"},
            {"value",
             {{"alpha", gh.alpha},
              {"beta", gh.beta},
              {"nu", gh.nu},
              {"xi", gh.xi},
              {"eta_mr", gh.eta_mr},
              {"theta", gh.theta},
              {"rho_0", gh.rho_0},
              {"sigma2_0", gh.sigma2_0},
              {"p0", gh.p0}}}}}));
}

namespace detail {

inline bool compatible(const nlohmann::json& def, const nlohmann::json& v) {
  if (def.is_null() || v.is_null()) return true;
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return false;
}

inline void merge_into(nlohmann::json& base, const nlohmann::json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config" + (path.empty() ? "" : " key '" + path + "'") + " must be an object");
  for (const auto& [k, v] : user.items()) {
    const std::string p = path.empty() ? k : path + "." + k;
    if (!base.contains(k)) throw ConfigError("unknown config key '" + p + "'");
    auto& slot = base[k];
    if (!compatible(slot, v)) throw ConfigError("config key '" + p + "' has the wrong type");
    if (slot.is_object() && !slot.empty())
      merge_into(slot, v, p);
    else
      slot = v;
  }
}

}  // namespace detail

/// Applies a user document on top of the defaults, rejecting unknown keys.
inline nlohmann::json merge_config(const nlohmann::json& user) {
  auto base = default_config_json();
  detail::merge_into(base, user, "");
  return base;
}

/// "a.b.c=value": value is read as JSON when it parses, else as a string.
inline void apply_override(nlohmann::json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  nlohmann::json user = value;
  std::size_t end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1, end - (dot == std::string::npos ? 0 : dot + 1));
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    user = nlohmann::json{{part, user}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  detail::merge_into(cfg, user, "");
}

inline nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  const auto j = nlohmann::json::parse(is, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  return j;
}

/// Typed view of a resolved configuration document.
struct RunConfig {
  nlohmann::json resolved;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::optional<std::filesystem::path> out;
  SimScenario scenario;
  EstimationGrids grids;  // at the simulated n
  std::size_t tune_days = 0;
  Objective tune_objective = Objective::variance;
  bool tune_corrected = true;
  std::size_t tune_min_replications = 10;
  ExperimentConfig experiment;
  std::optional<SweepKind> sweep;
  std::vector<double> sweep_values;
  std::optional<std::filesystem::path> empirical_input;
  SessionSpec session;
  EmpiricalConfig empirical;
  std::size_t synthetic_days = 0;
  std::string synthetic_first_date;
  double synthetic_open = 0.0;
  std::optional<double> synthetic_session_seconds;

  bool grids_explicit() const {
    const auto& j = resolved.at("grid");
    return !(j["fel"]["m_values"].is_null() && j["fel"]["n_values"].is_null() && j["fev"]["m_values"].is_null() &&
             j["fevv"]["m_values"].is_null() && j["fevv"]["n_values"].is_null());
  }

  /// Grids with nulls filled from the defaults at n.
  EstimationGrids grids_for(std::size_t n) const {
    auto g = EstimationGrids::defaults(n);
    const auto& j = resolved.at("grid");
    auto ints = [](const nlohmann::json& v) { return v.get<std::vector<int>>(); };
    if (!j["fel"]["m_values"].is_null()) g.fel.m_values = ints(j["fel"]["m_values"]);
    if (!j["fel"]["n_values"].is_null()) g.fel.n_values = ints(j["fel"]["n_values"]);
    if (!j["fev"]["m_values"].is_null()) g.fev.m_values = ints(j["fev"]["m_values"]);
    if (!j["fevv"]["m_values"].is_null()) g.fevv.m_values = ints(j["fevv"]["m_values"]);
    if (!j["fevv"]["n_values"].is_null()) g.fevv.n_values = ints(j["fevv"]["n_values"]);
    return g;
  }
};

namespace detail {

inline std::optional<CutFrequencies> cut_from(const nlohmann::json& j, const char* key) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_object() || !j.contains("M") || !j.contains("N") || j.size() != 2)
    throw ConfigError(std::string("config key '") + key + "' must be {\"M\": int, \"N\": int} or null");
  return CutFrequencies{j["M"].get<int>(), j["N"].get<int>()};
}

template <class T>
std::optional<T> opt(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

}  // namespace detail

/// Converts a resolved document into typed settings. Type and domain errors
/// become ConfigError naming the offending key or constraint.
inline RunConfig parse_run_config(const nlohmann::json& resolved) {
  RunConfig c;
  c.resolved = resolved;
  try {
    const auto& j = resolved;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<unsigned>();
    if (!j.at("out").is_null()) c.out = j.at("out").get<std::string>();

    const auto& s = j.at("scenario");
    c.scenario.model = parse_model_kind(s.at("model").get<std::string>());
    c.scenario.grid = {s.at("steps").get<std::size_t>(), s.at("horizon").get<double>()};
    c.scenario.observe_every = s.at("observe_every").get<std::size_t>();
    c.scenario.price_roundtrip = s.at("price_roundtrip").get<bool>();
    const auto& h = s.at("heston");
    c.scenario.heston = {h.at("alpha").get<double>(), h.at("beta").get<double>(),    h.at("nu").get<double>(),
                         h.at("rho").get<double>(),   h.at("sigma2_0").get<double>(), h.at("p0").get<double>()};
    const auto& g = s.at("gen_heston");
    c.scenario.gen_heston = {g.at("alpha").get<double>(), g.at("beta").get<double>(),   g.at("nu").get<double>(),
                             g.at("xi").get<double>(),    g.at("eta_mr").get<double>(), g.at("theta").get<double>(),
                             g.at("rho_0").get<double>(), g.at("sigma2_0").get<double>(), g.at("p0").get<double>()};
    const auto& nz = j.at("noise");
    c.scenario.noise.kind = parse_noise_kind(nz.at("kind").get<std::string>());
    c.scenario.noise.noise_to_signal = nz.at("noise_to_signal").get<double>();
    c.scenario.noise.negative_skew = nz.at("negative_skew").get<bool>();
    c.scenario.noise.absolute_std = detail::opt<double>(nz.at("absolute_std"));
    c.scenario.validate();

    c.grids = c.grids_for(c.scenario.observed_n());
    c.grids.validate();

    const auto& t = j.at("tune");
    c.tune_days = t.at("days").get<std::size_t>();
    c.tune_objective = parse_objective(t.at("objective").get<std::string>());
    c.tune_corrected = t.at("corrected").get<bool>();
    c.tune_min_replications = t.at("min_replications").get<std::size_t>();
    if (c.tune_days < 2) throw ConfigError("tune.days must be >= 2");

    const auto& m = j.at("mc");
    auto& e = c.experiment;
    e.scenario = c.scenario;
    e.days = m.at("days").get<std::size_t>();
    e.grids = c.grids;
    e.estimators.clear();
    for (const auto& x : m.at("estimators")) e.estimators.push_back(parse_estimator(x.get<std::string>()));
    e.seed = c.seed;
    e.threads = c.threads;
    e.min_replications = c.tune_min_replications;
    e.validate();
    const auto& sw = m.at("sweep");
    if (!sw.at("kind").is_null()) {
      const auto k = sw.at("kind").get<std::string>();
      if (k == "theta")
        c.sweep = SweepKind::theta;
      else if (k == "zeta")
        c.sweep = SweepKind::zeta;
      else
        throw ConfigError("mc.sweep.kind must be 'theta', 'zeta' or null");
      c.sweep_values = sw.at("values").get<std::vector<double>>();
      if (c.sweep_values.empty()) throw ConfigError("mc.sweep.values is empty");
    }

    const auto& em = j.at("empirical");
    if (!em.at("input").is_null()) c.empirical_input = em.at("input").get<std::string>();
    const auto& ss = em.at("session");
    c.session.open_seconds = detail::opt<double>(ss.at("open"));
    c.session.close_seconds = detail::opt<double>(ss.at("close"));
    c.session.utc_offset_seconds = ss.at("utc_offset").get<double>();
    c.session.validate();
    c.empirical.rv_step = em.at("rv_step").get<double>();
    c.empirical.acf_max_lag = em.at("acf_max_lag").get<std::size_t>();
    c.empirical.min_replications = em.at("min_replications").get<std::size_t>();
    c.empirical.lev_cut = detail::cut_from(em.at("lev_cut"), "empirical.lev_cut");
    c.empirical.fev_m = detail::opt<int>(em.at("fev_m"));
    c.empirical.fevv_cut = detail::cut_from(em.at("fevv_cut"), "empirical.fevv_cut");
    c.empirical.threads = c.threads;
    const auto& sy = em.at("synthetic");
    c.synthetic_days = sy.at("days").get<std::size_t>();
    c.synthetic_first_date = sy.at("first_date").get<std::string>();
    parse_date(c.synthetic_first_date);
    c.synthetic_open = sy.at("open").get<double>();
    c.synthetic_session_seconds = detail::opt<double>(sy.at("session_seconds"));
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  } catch (const InvalidInput& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
  return c;
}

/// Defaults, then the optional file, then each override in order.
inline RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                                const std::vector<std::string>& overrides) {
  auto j = default_config_json();
  if (file) detail::merge_into(j, load_config_file(*file), "");
  for (const auto& o : overrides) apply_override(j, o);
  return parse_run_config(j);
}

}  // namespace slev
