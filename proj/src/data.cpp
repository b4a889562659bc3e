#include "rcpolicy/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rcpolicy/errors.hpp"

namespace rcpolicy {

const char* to_string(OutcomeKind kind) {
  return kind == OutcomeKind::binary ? "binary" : "bounded_real";
}

OutcomeKind outcome_kind_from_string(const std::string& name) {
  if (name == "binary") return OutcomeKind::binary;
  if (name == "bounded_real") return OutcomeKind::bounded_real;
  throw ValidationError("unknown outcome kind '" + name + "' (expected binary|bounded_real)");
}

Dataset::Dataset(Eigen::MatrixXd covariates, std::vector<int> treatment,
                 std::vector<double> outcome, std::optional<std::vector<double>> cost,
                 std::vector<std::string> covariate_names, OutcomeKind kind, Bounds y_bounds,
                 OutcomeScale scale, ColumnNames columns)
    : w_(std::move(covariates)),
      a_(std::move(treatment)),
      y_(std::move(outcome)),
      c_(std::move(cost)),
      names_(std::move(covariate_names)),
      kind_(kind),
      bounds_(y_bounds),
      scale_(scale),
      columns_(std::move(columns)) {
  const std::size_t n = y_.size();
  require(n >= 1, "dataset must contain at least one observation");
  require(a_.size() == n && static_cast<std::size_t>(w_.rows()) == n,
          "dataset columns have mismatched lengths");
  require(names_.size() == static_cast<std::size_t>(w_.cols()),
          "covariate names do not match covariate arity");
  require(bounds_.lo < bounds_.hi, "y_bounds must satisfy min < max");
  require(w_.allFinite(), "covariates must be finite");
  for (std::size_t i = 0; i < n; ++i) {
    if (a_[i] != 0 && a_[i] != 1)
      throw ValidationError("treatment not binary at row " + std::to_string(i + 1));
    if (!std::isfinite(y_[i]))
      throw ValidationError("outcome not finite at row " + std::to_string(i + 1));
    if (kind_ == OutcomeKind::binary && y_[i] != 0.0 && y_[i] != 1.0)
      throw ValidationError("binary outcome has value outside {0,1} at row " +
                            std::to_string(i + 1));
    if (y_[i] < bounds_.lo || y_[i] > bounds_.hi)
      throw ValidationError("outcome outside y_bounds at row " + std::to_string(i + 1));
  }
  if (c_) {
    require(c_->size() == n, "cost column length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite((*c_)[i]) || (*c_)[i] < 0.0)
        throw ValidationError("cost must be finite and nonnegative at row " +
                              std::to_string(i + 1));
    }
  }
}

Dataset Dataset::from_observations(const std::vector<Observation>& rows,
                                   std::vector<std::string> covariate_names, OutcomeKind kind,
                                   std::optional<Bounds> y_bounds) {
  require(!rows.empty(), "dataset must contain at least one observation");
  const std::size_t p = covariate_names.size();
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  std::vector<int> a;
  std::vector<double> y;
  std::vector<double> c;
  const bool has_cost = rows.front().c.has_value();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].w.size() == p, "observation covariate arity mismatch at row " +
                                       std::to_string(i + 1));
    require(rows[i].c.has_value() == has_cost, "cost present on some rows only");
    for (std::size_t j = 0; j < p; ++j)
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].w[j];
    a.push_back(rows[i].a);
    y.push_back(rows[i].y);
    if (has_cost) c.push_back(*rows[i].c);
  }
  Bounds b = y_bounds.value_or(
      kind == OutcomeKind::binary
          ? Bounds{0.0, 1.0}
          : Bounds{*std::min_element(y.begin(), y.end()), *std::max_element(y.begin(), y.end())});
  std::optional<std::vector<double>> cost;
  if (has_cost) cost = std::move(c);
  return Dataset(std::move(w), std::move(a), std::move(y), std::move(cost),
                 std::move(covariate_names), kind, b);
}

std::span<const double> Dataset::cost() const {
  require(c_.has_value(), "dataset has no cost column");
  return *c_;
}

Observation Dataset::observation(std::size_t i) const {
  Observation o;
  o.w.resize(num_covariates());
  for (std::size_t j = 0; j < num_covariates(); ++j)
    o.w[j] = w_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  o.a = a_[i];
  o.y = y_[i];
  if (c_) o.c = (*c_)[i];
  return o;
}

std::size_t Dataset::treated_count() const {
  return static_cast<std::size_t>(std::count(a_.begin(), a_.end(), 1));
}

bool Dataset::has_both_arms() const {
  const std::size_t t = treated_count();
  return t > 0 && t < size();
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), w_.cols());
  std::vector<int> a(rows.size());
  std::vector<double> y(rows.size());
  std::optional<std::vector<double>> c;
  if (c_) c.emplace(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    require(i < size(), "subset row index out of range");
    w.row(static_cast<Eigen::Index>(k)) = w_.row(static_cast<Eigen::Index>(i));
    a[k] = a_[i];
    y[k] = y_[i];
    if (c_) (*c)[k] = (*c_)[i];
  }
  return Dataset(std::move(w), std::move(a), std::move(y), std::move(c), names_, kind_, bounds_,
                 scale_, columns_);
}

Dataset Dataset::with_outcome(std::vector<double> y, OutcomeKind kind, Bounds bounds,
                              std::string outcome_name) const {
  ColumnNames cols = columns_;
  cols.outcome = std::move(outcome_name);
  return Dataset(w_, a_, std::move(y), c_, names_, kind, bounds, OutcomeScale{}, cols);
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n'))
    --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, const std::string& column, std::size_t row) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan")
    throw ValidationError("missing value in column '" + column + "' at row " +
                          std::to_string(row));
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw ValidationError("non-numeric value '" + cell + "' in column '" + column + "' at row " +
                          std::to_string(row));
  return value;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
  require(!schema.treatment.empty(), "schema must name a treatment column (--treatment-col)");
  require(!schema.outcome.empty(), "schema must name an outcome column (--outcome-col)");
  require(!schema.covariates.empty(),
          "schema must name at least one covariate column (--covariate-cols)");

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV file is empty (header row required)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const std::vector<std::string> header = split_line(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < header.size(); ++k) index.emplace(header[k], k);
  auto column = [&](const std::string& name, const char* flag) {
    const auto it = index.find(name);
    if (it == index.end())
      throw ValidationError("column '" + name + "' (" + flag + ") not found in CSV header");
    return it->second;
  };
  const std::size_t ia = column(schema.treatment, "--treatment-col");
  const std::size_t iy = column(schema.outcome, "--outcome-col");
  std::optional<std::size_t> ic;
  if (schema.cost) ic = column(*schema.cost, "--cost-col");
  std::vector<std::size_t> iw;
  for (const auto& name : schema.covariates) iw.push_back(column(name, "--covariate-cols"));

  std::vector<std::vector<double>> wrows;
  std::vector<int> a;
  std::vector<double> y;
  std::vector<double> c;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
    const double av = parse_number(cells[ia], schema.treatment, row);
    if (av != 0.0 && av != 1.0)
      throw ValidationError("treatment not binary: column '" + schema.treatment + "' row " +
                            std::to_string(row) + " has value " + cells[ia]);
    a.push_back(static_cast<int>(av));
    y.push_back(parse_number(cells[iy], schema.outcome, row));
    if (ic) c.push_back(parse_number(cells[*ic], *schema.cost, row));
    std::vector<double> w;
    for (std::size_t k = 0; k < iw.size(); ++k)
      w.push_back(parse_number(cells[iw[k]], schema.covariates[k], row));
    wrows.push_back(std::move(w));
  }
  require(!y.empty(), "CSV file has no data rows");
  const auto treated = std::count(a.begin(), a.end(), 1);
  if (treated == 0 || treated == static_cast<long>(a.size()))
    throw ValidationError("single-arm dataset: column '" + schema.treatment +
                          "' must contain both 0 and 1");

  const bool all_binary =
      std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0 || v == 1.0; });
  const OutcomeKind kind =
      schema.outcome_kind.value_or(all_binary ? OutcomeKind::binary : OutcomeKind::bounded_real);
  Bounds bounds;
  if (schema.y_bounds) {
    bounds = *schema.y_bounds;
  } else if (kind == OutcomeKind::binary) {
    bounds = {0.0, 1.0};
  } else {
    bounds = {*std::min_element(y.begin(), y.end()), *std::max_element(y.begin(), y.end())};
    require(bounds.lo < bounds.hi, "outcome column '" + schema.outcome +
                                       "' is constant; supply y_bounds explicitly");
  }

  Eigen::MatrixXd w(static_cast<Eigen::Index>(wrows.size()),
                    static_cast<Eigen::Index>(iw.size()));
  for (std::size_t i = 0; i < wrows.size(); ++i)
    for (std::size_t j = 0; j < iw.size(); ++j)
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wrows[i][j];
  std::optional<std::vector<double>> cost;
  if (ic) cost = std::move(c);
  ColumnNames cols{schema.treatment, schema.outcome, schema.cost.value_or("c")};
  return Dataset(std::move(w), std::move(a), std::move(y), std::move(cost), schema.covariates, kind,
                 bounds, OutcomeScale{}, cols);
}

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string format_csv(const Dataset& ds) {
  std::string out;
  for (const auto& name : ds.covariate_names()) out += name + ",";
  out += ds.columns().treatment + "," + ds.columns().outcome;
  if (ds.has_cost()) out += "," + ds.columns().cost;
  out += "\n";
  const auto& w = ds.covariates();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      out += format_double(w(static_cast<Eigen::Index>(i), j)) + ",";
    out += std::to_string(ds.treatment()[i]) + "," +
           format_double(ds.outcome_scale().to_original(ds.outcome()[i]));
    if (ds.has_cost()) out += "," + format_double(ds.cost()[i]);
    out += "\n";
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << format_csv(ds);
}

Dataset scale_outcome(const Dataset& ds) {
  const Bounds b = ds.y_bounds();
  require(b.hi > b.lo, "degenerate outcome bounds (max = min)");
  if (b.lo == 0.0 && b.hi == 1.0) return ds;
  const OutcomeScale local{b.lo, b.hi};
  std::vector<double> y(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) y[i] = local.to_unit(ds.outcome()[i]);
  const OutcomeScale& prior = ds.outcome_scale();
  const OutcomeScale composed{prior.to_original(b.lo), prior.to_original(b.hi)};
  std::optional<std::vector<double>> cost;
  if (ds.has_cost()) cost.emplace(ds.cost().begin(), ds.cost().end());
  return Dataset(ds.covariates(), {ds.treatment().begin(), ds.treatment().end()}, std::move(y),
                 std::move(cost), ds.covariate_names(), ds.outcome_kind(), Bounds{0.0, 1.0},
                 composed, ds.columns());
}

}  // namespace rcpolicy
