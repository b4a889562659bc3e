#include "rcpolicy/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rcpolicy/errors.hpp"

namespace rcpolicy {

using nlohmann::json;

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key '" + key + "' has the wrong type");
  }
}

std::vector<std::string> string_list(const json& j, const std::string& key) {
  if (j.is_string()) {
    std::vector<std::string> out;
    std::stringstream ss(j.get<std::string>());
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) out.push_back(item);
    return out;
  }
  return get_as<std::vector<std::string>>(j, key);
}

double parse_double(const std::string& text, const std::string& flag) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || b == e)
    throw ValidationError(flag + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

void apply_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "columns") {
      if (!v.is_object()) throw ValidationError("config key 'columns' must be an object");
      for (const auto& [ck, cv] : v.items()) {
        if (ck == "treatment") cfg.treatment_col = get_as<std::string>(cv, "columns.treatment");
        else if (ck == "outcome") cfg.outcome_col = get_as<std::string>(cv, "columns.outcome");
        else if (ck == "cost") {
          if (cv.is_null()) cfg.cost_col.reset(); else cfg.cost_col = get_as<std::string>(cv, "columns.cost");
        }
        else if (ck == "covariates") cfg.covariate_cols = string_list(cv, "columns.covariates");
        else throw ValidationError("unknown config key 'columns." + ck + "'");
      }
    } else if (key == "outcome_kind") {
      if (v.is_null()) cfg.outcome_kind.reset(); else cfg.outcome_kind = get_as<std::string>(v, key);
    } else if (key == "y_bounds") {
      if (v.is_null()) {
        cfg.y_bounds.reset();
        continue;
      }
      auto b = get_as<std::vector<double>>(v, key);
      if (b.size() != 2) throw ValidationError("config key 'y_bounds' needs [min, max]");
      cfg.y_bounds = b;
    } else if (key == "kappa_grid") {
      if (v.is_array()) {
        std::string joined;
        for (const auto& x : v) {
          if (!joined.empty()) joined += ",";
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.17g", get_as<double>(x, key));
          joined += buf;
        }
        cfg.kappa_grid = joined;
      } else {
        cfg.kappa_grid = get_as<std::string>(v, key);
      }
    } else if (key == "outcome_library") cfg.outcome_library = string_list(v, key);
    else if (key == "blip_library") cfg.blip_library = string_list(v, key);
    else if (key == "folds") cfg.folds = get_as<int>(v, key);
    else if (key == "sl_folds") cfg.sl_folds = get_as<int>(v, key);
    else if (key == "seed") cfg.seed = get_as<std::uint64_t>(v, key);
    else if (key == "g_known") {
      if (v.is_null()) cfg.g_known.reset(); else cfg.g_known = get_as<double>(v, key);
    } else if (key == "g_fit") cfg.g_fit = get_as<bool>(v, key);
    else if (key == "g_min") cfg.g_min = get_as<double>(v, key);
    else if (key == "blip_fit") cfg.blip_fit = get_as<std::string>(v, key);
    else if (key == "policy") cfg.policy = get_as<std::string>(v, key);
    else if (key == "confidence") cfg.confidence = get_as<double>(v, key);
    else if (key == "bootstrap") cfg.bootstrap = get_as<int>(v, key);
    else if (key == "mode") cfg.mode = get_as<std::string>(v, key);
    else if (key == "weighted") cfg.weighted = get_as<bool>(v, key);
    else if (key == "comparator") cfg.comparator = get_as<std::string>(v, key);
    else if (key == "percentage_points") cfg.percentage_points = get_as<bool>(v, key);
    else if (key == "eps_den") cfg.eps_den = get_as<double>(v, key);
    else if (key == "alpha") cfg.alpha = get_as<double>(v, key);
    else if (key == "dgp") cfg.dgp = get_as<std::string>(v, key);
    else if (key == "n") cfg.n = get_as<std::size_t>(v, key);
    else if (key == "with_cost") cfg.with_cost = get_as<bool>(v, key);
    else if (key == "unit_cost") cfg.unit_cost = get_as<double>(v, key);
    else if (key == "cost_noise_sd") cfg.cost_noise_sd = get_as<double>(v, key);
    else if (key == "threads") cfg.threads = get_as<int>(v, key);
    else throw ValidationError("unknown config key '" + key + "'");
  }
}

json to_json(const RunConfig& c) {
  json cols = {{"treatment", c.treatment_col}, {"outcome", c.outcome_col},
               {"covariates", c.covariate_cols}};
  cols["cost"] = c.cost_col ? json(*c.cost_col) : json(nullptr);
  json j = {
      {"columns", cols},
      {"kappa_grid", c.kappa_grid},
      {"outcome_library", c.outcome_library},
      {"blip_library", c.blip_library},
      {"folds", c.folds},
      {"sl_folds", c.sl_folds},
      {"seed", c.seed},
      {"g_fit", c.g_fit},
      {"g_min", c.g_min},
      {"blip_fit", c.blip_fit},
      {"policy", c.policy},
      {"confidence", c.confidence},
      {"bootstrap", c.bootstrap},
      {"mode", c.mode},
      {"weighted", c.weighted},
      {"comparator", c.comparator},
      {"percentage_points", c.percentage_points},
      {"eps_den", c.eps_den},
      {"alpha", c.alpha},
      {"dgp", c.dgp},
      {"n", c.n},
      {"with_cost", c.with_cost},
      {"unit_cost", c.unit_cost},
      {"cost_noise_sd", c.cost_noise_sd},
      {"threads", c.threads},
  };
  j["g_known"] = c.g_known ? json(*c.g_known) : json(nullptr);
  j["outcome_kind"] = c.outcome_kind ? json(*c.outcome_kind) : json(nullptr);
  j["y_bounds"] = c.y_bounds ? json(*c.y_bounds) : json(nullptr);
  return j;
}

std::vector<double> parse_kappa_grid(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 3) throw ValidationError(flag + ": expected start:end:step, got '" + text + "'");
    const double start = parse_double(parts[0], flag);
    const double end = parse_double(parts[1], flag);
    const double step = parse_double(parts[2], flag);
    if (!(step > 0.0) || end < start)
      throw ValidationError(flag + ": need step > 0 and end >= start in '" + text + "'");
    const double count = std::round((end - start) / step);
    if (std::abs(count * step - (end - start)) > 1e-9)
      throw ValidationError(flag + ": step does not divide the range in '" + text + "'");
    const auto m = static_cast<std::size_t>(count);
    for (std::size_t i = 0; i <= m; ++i) out.push_back(i == m ? end : start + (end - start) * static_cast<double>(i) / count);
  } else {
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_double(item, flag));
  }
  if (out.empty()) throw ValidationError(flag + ": empty kappa grid");
  for (double k : out)
    if (!(k >= 0.0 && k <= 1.0)) throw ValidationError(flag + ": kappa values must lie in [0,1]");
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json audit_block(const RunConfig& cfg) {
  const json c = to_json(cfg);
  return {{"version", RCPOLICY_VERSION},
          {"seed", cfg.seed},
          {"config_hash", fnv1a_hex(c.dump())},
          {"config", c}};
}

EstimatorConfig estimator_config(const RunConfig& cfg, const std::vector<std::string>& names) {
  EstimatorConfig e;
  e.outcome_library.clear();
  e.blip_library.clear();
  for (const auto& s : cfg.outcome_library) e.outcome_library.push_back(parse_learner(s, names));
  for (const auto& s : cfg.blip_library) e.blip_library.push_back(parse_learner(s, names));
  if (e.outcome_library.empty()) throw ValidationError("outcome_library: must not be empty");
  if (e.blip_library.empty()) throw ValidationError("blip_library: must not be empty");
  if (cfg.folds < 2) throw ValidationError("--folds: must be at least 2");
  if (cfg.sl_folds < 2) throw ValidationError("sl_folds: must be at least 2");
  e.folds = cfg.folds;
  e.sl_folds = cfg.sl_folds;
  e.seed = cfg.seed;
  if (cfg.g_known && !(*cfg.g_known > 0.0 && *cfg.g_known < 1.0))
    throw ValidationError("--g-known: must lie in (0,1)");
  if (!(cfg.g_min >= 0.0 && cfg.g_min < 0.5)) throw ValidationError("--g-min: must lie in [0, 0.5)");
  e.propensity.known_value = cfg.g_known;
  e.propensity.fit_when_known = cfg.g_fit;
  e.propensity.g_min = cfg.g_min;
  if (cfg.blip_fit == "per_fold") e.blip_fit = BlipFit::per_fold;
  else if (cfg.blip_fit == "shared") e.blip_fit = BlipFit::shared;
  else throw ValidationError("blip_fit: expected per_fold or shared, got '" + cfg.blip_fit + "'");
  if (cfg.policy == "stochastic") e.policy = PolicyKind::stochastic;
  else if (cfg.policy == "deterministic") e.policy = PolicyKind::deterministic;
  else throw ValidationError("--policy: expected stochastic or deterministic, got '" + cfg.policy + "'");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0))
    throw ValidationError("--confidence: must lie in (0,1)");
  e.confidence = cfg.confidence;
  return e;
}

CsvSchema csv_schema(const RunConfig& cfg) {
  CsvSchema s;
  s.treatment = cfg.treatment_col;
  s.outcome = cfg.outcome_col;
  s.cost = cfg.cost_col;
  s.covariates = cfg.covariate_cols;
  if (cfg.outcome_kind) s.outcome_kind = outcome_kind_from_string(*cfg.outcome_kind);
  if (cfg.y_bounds) s.y_bounds = Bounds{(*cfg.y_bounds)[0], (*cfg.y_bounds)[1]};
  return s;
}

}  // namespace rcpolicy
