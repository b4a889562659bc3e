#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcpolicy/crossfit.hpp"
#include "rcpolicy/data.hpp"

namespace rcpolicy {

// Fully resolved settings of one CLI run. Every field has a JSON key of the
// same name, except the column mapping, which lives under "columns".
struct RunConfig {
  std::string treatment_col = "a";
  std::string outcome_col = "y";
  std::optional<std::string> cost_col;
  std::vector<std::string> covariate_cols;  // empty: every other column
  std::optional<std::string> outcome_kind;
  std::optional<std::vector<double>> y_bounds;

  std::string kappa_grid = "0:1:0.1";
  std::vector<std::string> outcome_library = {"mean", "main_terms", "univariate"};
  std::vector<std::string> blip_library = {"univariate", "mean", "main_terms", "stepwise_aic"};
  int folds = 10;
  int sl_folds = 10;
  std::uint64_t seed = 1;
  std::optional<double> g_known;
  bool g_fit = false;
  double g_min = 0.01;
  std::string blip_fit = "per_fold";
  std::string policy = "stochastic";
  double confidence = 0.95;

  int bootstrap = 1000;
  std::string mode = "refit";
  bool weighted = false;

  std::string comparator = "treat-none";
  bool percentage_points = true;
  double eps_den = 1e-4;

  double alpha = 0.1;

  std::string dgp = "adaptr_like";
  std::size_t n = 2000;
  bool with_cost = true;
  double unit_cost = 52.60;
  double cost_noise_sd = 0.0;

  int threads = 0;
};

// Overlays the keys of j onto cfg; unknown keys and wrong types are rejected.
void apply_json(RunConfig& cfg, const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

// "start:end:step" (inclusive, step must divide the range within 1e-9), a
// comma-separated list, or a single value. Every entry must lie in [0,1].
std::vector<double> parse_kappa_grid(const std::string& text, const std::string& flag = "--kappa-grid");

// FNV-1a 64-bit hash, printed as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

// {version, seed, config_hash, config}
nlohmann::json audit_block(const RunConfig& cfg);

EstimatorConfig estimator_config(const RunConfig& cfg, const std::vector<std::string>& covariate_names);
CsvSchema csv_schema(const RunConfig& cfg);

}  // namespace rcpolicy
