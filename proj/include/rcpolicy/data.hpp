#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rcpolicy {

enum class OutcomeKind { binary, bounded_real };

const char* to_string(OutcomeKind kind);
OutcomeKind outcome_kind_from_string(const std::string& name);

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

// Affine map between an outcome's original scale and [0,1].
struct OutcomeScale {
  double lo = 0.0;
  double hi = 1.0;

  double range() const { return hi - lo; }
  double to_unit(double y) const { return (y - lo) / (hi - lo); }
  double to_original(double u) const { return u * (hi - lo) + lo; }
  bool is_identity() const { return lo == 0.0 && hi == 1.0; }
};

// One observed unit O = (W, A, Y) with optional cost C.
struct Observation {
  std::vector<double> w;
  int a = 0;
  double y = 0.0;
  std::optional<double> c;
};

struct ColumnNames {
  std::string treatment = "a";
  std::string outcome = "y";
  std::string cost = "c";
};

/**
 * Immutable, validated point-treatment sample, stored column-wise.
 *
 * Row order is meaningful: fold assignment and bootstrap draws index rows, so
 * subsets and exports always preserve it.
 */
class Dataset {
 public:
  Dataset(Eigen::MatrixXd covariates, std::vector<int> treatment, std::vector<double> outcome,
          std::optional<std::vector<double>> cost, std::vector<std::string> covariate_names,
          OutcomeKind kind, Bounds y_bounds, OutcomeScale scale = {}, ColumnNames columns = {});

  static Dataset from_observations(const std::vector<Observation>& rows,
                                   std::vector<std::string> covariate_names, OutcomeKind kind,
                                   std::optional<Bounds> y_bounds = std::nullopt);

  std::size_t size() const { return y_.size(); }
  std::size_t num_covariates() const { return static_cast<std::size_t>(w_.cols()); }
  const Eigen::MatrixXd& covariates() const { return w_; }
  std::span<const int> treatment() const { return a_; }
  std::span<const double> outcome() const { return y_; }
  bool has_cost() const { return c_.has_value(); }
  std::span<const double> cost() const;
  const std::vector<std::string>& covariate_names() const { return names_; }
  const ColumnNames& columns() const { return columns_; }
  OutcomeKind outcome_kind() const { return kind_; }
  Bounds y_bounds() const { return bounds_; }
  // Map from the stored outcome back to the scale it was ingested on.
  const OutcomeScale& outcome_scale() const { return scale_; }

  Observation observation(std::size_t i) const;
  std::size_t treated_count() const;
  bool has_both_arms() const;

  Dataset subset(std::span<const std::size_t> rows) const;
  // Same covariates and treatment, different outcome column (used to run the
  // outcome machinery on costs).
  Dataset with_outcome(std::vector<double> y, OutcomeKind kind, Bounds bounds,
                       std::string outcome_name) const;

 private:
  Eigen::MatrixXd w_;
  std::vector<int> a_;
  std::vector<double> y_;
  std::optional<std::vector<double>> c_;
  std::vector<std::string> names_;
  OutcomeKind kind_;
  Bounds bounds_;
  OutcomeScale scale_;
  ColumnNames columns_;
};

struct CsvSchema {
  std::string treatment;
  std::string outcome;
  std::optional<std::string> cost;
  std::vector<std::string> covariates;
  // Auto-detected (all y in {0,1} -> binary) when absent.
  std::optional<OutcomeKind> outcome_kind;
  std::optional<Bounds> y_bounds;
};

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema);
// Header: covariates, treatment, outcome[, cost]. Values at 17 significant digits.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
std::string format_csv(const Dataset& ds);

// Rescales y to [0,1] by y_bounds; binary data with bounds (0,1) is unchanged.
Dataset scale_outcome(const Dataset& ds);

}  // namespace rcpolicy
