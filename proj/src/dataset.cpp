#include "dnnr/dataset.hpp"

#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

namespace dnnr {

namespace {

std::pair<double, double> observed_range(const Vector& y) {
  return {y.minCoeff(), y.maxCoeff()};
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\"");
  return s.substr(first, last - first + 1);
}

bool parse_real(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset::Dataset(Matrix features, Vector targets, std::vector<std::string> column_names)
    : Dataset(std::move(features), std::move(targets), std::move(column_names), {0.0, 0.0}) {
  bounds_ = observed_range(targets_);
}

Dataset::Dataset(Matrix features, Vector targets, std::vector<std::string> column_names,
                 std::pair<double, double> target_bounds)
    : features_(std::move(features)),
      targets_(std::move(targets)),
      column_names_(std::move(column_names)),
      bounds_(target_bounds) {
  if (features_.rows() != targets_.size())
    throw DataError("feature rows (" + std::to_string(features_.rows()) +
                    ") do not match target length (" + std::to_string(targets_.size()) + ")");
  if (features_.rows() < 1) throw DataError("dataset has no rows");
  if (features_.cols() < 1) throw DataError("dataset has no feature columns");
  if (!features_.allFinite() || !targets_.allFinite())
    throw DataError("dataset contains non-finite values");
  if (!column_names_.empty() && static_cast<Index>(column_names_.size()) != features_.cols())
    throw DataError("column name count does not match feature count");
  if (column_names_.empty()) {
    for (Index j = 0; j < features_.cols(); ++j) column_names_.push_back("x" + std::to_string(j));
  }
  if (bounds_.first > bounds_.second) throw DataError("target bounds are inverted");
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Matrix x(static_cast<Index>(rows.size()), dim());
  Vector y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Index>(i)) = features_.row(rows[i]);
    y(static_cast<Index>(i)) = targets_(rows[i]);
  }
  return Dataset(std::move(x), std::move(y), column_names_);
}

Dataset Dataset::select_columns(std::span<const Index> cols) const {
  Matrix x(rows(), static_cast<Index>(cols.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= dim()) throw ConfigError("column index out of range");
    x.col(static_cast<Index>(j)) = features_.col(cols[j]);
    names.push_back(column_names_[static_cast<std::size_t>(cols[j])]);
  }
  return Dataset(std::move(x), targets_, std::move(names), bounds_);
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
};

Table read_table(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  Table t;
  std::string line;
  std::size_t line_no = 0;
  if (has_header) {
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    ++line_no;
    for (auto& cell : split_line(line)) t.header.push_back(trim(cell));
  }

  t.width = t.header.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (t.width == 0) t.width = cells.size();
    if (cells.size() != t.width)
      throw DataError(path.string() + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(t.width));
    std::vector<double> values(t.width);
    for (std::size_t c = 0; c < t.width; ++c) {
      const auto cell = trim(cells[c]);
      if (!parse_real(cell, values[c]))
        throw DataError(path.string() + ": cannot parse \"" + cell + "\" at row " +
                        std::to_string(line_no) + ", column " + std::to_string(c + 1));
    }
    t.rows.push_back(std::move(values));
  }
  if (t.rows.empty()) throw DataError(path.string() + ": no data rows");
  return t;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target_column,
                 bool has_header) {
  auto [header, rows, width] = read_table(path, has_header);

  Index target = -1;
  if (const auto* name = std::get_if<std::string>(&target_column)) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == *name) target = static_cast<Index>(c);
    if (target < 0) {
      // Allow a numeric string when the file carries no header.
      Index as_index = -1;
      auto [ptr, ec] = std::from_chars(name->data(), name->data() + name->size(), as_index);
      if (ec != std::errc() || ptr != name->data() + name->size())
        throw DataError(path.string() + ": target column \"" + *name + "\" not found");
      target = as_index;
    }
  } else {
    target = std::get<Index>(target_column);
  }
  if (target < 0) target += static_cast<Index>(width);
  if (target < 0 || target >= static_cast<Index>(width))
    throw DataError(path.string() + ": target column not found");
  if (width < 2) throw DataError(path.string() + ": no feature columns besides the target");

  const auto n = static_cast<Index>(rows.size());
  const auto d = static_cast<Index>(width) - 1;
  Matrix x(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    Index j = 0;
    for (Index c = 0; c < static_cast<Index>(width); ++c) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      if (c == target)
        y(i) = v;
      else
        x(i, j++) = v;
    }
  }
  std::vector<std::string> names;
  if (!header.empty()) {
    for (Index c = 0; c < static_cast<Index>(width); ++c)
      if (c != target) names.push_back(header[static_cast<std::size_t>(c)]);
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

FeatureTable load_feature_csv(const std::filesystem::path& path, bool has_header) {
  auto [header, rows, width] = read_table(path, has_header);
  FeatureTable out;
  out.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < width; ++c)
      out.features(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
  if (!out.features.allFinite()) throw DataError(path.string() + ": non-finite feature values");
  out.column_names = std::move(header);
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& target_name) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  for (const auto& name : data.column_names()) out << name << ',';
  out << target_name << '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) out << data.features()(i, j) << ',';
    out << data.targets()(i) << '\n';
  }
}

Matrix StandardScaler::transform(const Matrix& x) const {
  if (x.cols() != means.size()) throw DataError("scaler dimension mismatch");
  return ((x.rowwise() - means.transpose()).array().rowwise() / stds.transpose().array()).matrix();
}

Matrix StandardScaler::inverse_transform(const Matrix& x) const {
  if (x.cols() != means.size()) throw DataError("scaler dimension mismatch");
  return ((x.array().rowwise() * stds.transpose().array()).rowwise() + means.transpose().array())
      .matrix();
}

Vector StandardScaler::transform_point(const Vector& x) const {
  if (x.size() != means.size()) throw DataError("scaler dimension mismatch");
  return ((x - means).array() / stds.array()).matrix();
}

Dataset StandardScaler::transform(const Dataset& data) const {
  return Dataset(transform(data.features()), data.targets(), data.column_names(),
                 data.target_bounds());
}

StandardScaler fit_standard_scaler(const Dataset& data) {
  if (data.rows() < 2) throw DataError("standard scaling needs at least 2 rows");
  StandardScaler s;
  s.means = data.features().colwise().mean().transpose();
  const Matrix centered = data.features().rowwise() - s.means.transpose();
  s.stds = (centered.array().square().colwise().sum() / static_cast<double>(data.rows()))
               .sqrt()
               .transpose();
  for (Index j = 0; j < s.stds.size(); ++j) {
    // Treat columns with only rounding-level spread as constant.
    const double scale = std::max(1.0, std::abs(s.means(j)));
    if (!(s.stds(j) > 1e-12 * scale)) s.stds(j) = 1.0;
  }
  return s;
}

std::vector<Index> FoldPlan::test_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) rows.push_back(static_cast<Index>(i));
  return rows;
}

std::vector<Index> FoldPlan::train_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) rows.push_back(static_cast<Index>(i));
  return rows;
}

FoldPlan make_folds(Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("fold count must be at least 2");
  if (folds > n) throw ConfigError("fold count exceeds sample count");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  FoldPlan plan;
  plan.seed = seed;
  plan.folds = folds;
  plan.fold_of.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    plan.fold_of[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % folds);
  return plan;
}

std::pair<std::vector<Index>, std::vector<Index>> split_rows(Index n, double second_fraction,
                                                             std::uint64_t seed) {
  if (!(second_fraction > 0.0 && second_fraction < 1.0))
    throw ConfigError("split fraction must lie in (0, 1)");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  auto second = static_cast<std::size_t>(std::llround(second_fraction * static_cast<double>(n)));
  second = std::clamp<std::size_t>(second, 1, order.size() - 1);
  std::vector<Index> a(order.begin(), order.end() - static_cast<std::ptrdiff_t>(second));
  std::vector<Index> b(order.end() - static_cast<std::ptrdiff_t>(second), order.end());
  return {std::move(a), std::move(b)};
}

Dataset friedman1(Index n_samples, Index n_features, double noise_scale, std::uint64_t seed) {
  if (n_features < 5) throw ConfigError("friedman1 needs at least 5 features");
  if (n_samples < 1) throw ConfigError("friedman1 needs at least one sample");
  if (!(noise_scale >= 0.0)) throw ConfigError("noise scale must be non-negative");
  Rng rng(seed);
  Matrix x(n_samples, n_features);
  Vector y(n_samples);
  for (Index i = 0; i < n_samples; ++i) {
    for (Index j = 0; j < n_features; ++j) x(i, j) = rng.uniform();
    y(i) = friedman1_response(x.row(i));
  }
  if (noise_scale > 0.0) {
    for (Index i = 0; i < n_samples; ++i) y(i) += noise_scale * rng.normal();
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace dnnr
