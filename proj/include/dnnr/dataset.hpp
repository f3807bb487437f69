#pragma once

#include "dnnr/common.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dnnr {

/// Feature rows with aligned scalar targets.
///
/// Construction validates shape (rows == targets, d >= 1, n >= 1) and rejects
/// non-finite cells. Bounds default to the observed target range.
class Dataset {
public:
  Dataset() = default;
  Dataset(Matrix features, Vector targets, std::vector<std::string> column_names = {});
  Dataset(Matrix features, Vector targets, std::vector<std::string> column_names,
          std::pair<double, double> target_bounds);

  const Matrix& features() const { return features_; }
  const Vector& targets() const { return targets_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  std::pair<double, double> target_bounds() const { return bounds_; }

  Index rows() const { return features_.rows(); }
  Index dim() const { return features_.cols(); }

  // Row subset in the given order. Bounds are re-derived from the subset.
  Dataset subset(std::span<const Index> rows) const;
  // Column subset in the given order; names follow their columns.
  Dataset select_columns(std::span<const Index> cols) const;

private:
  Matrix features_;
  Vector targets_;
  std::vector<std::string> column_names_;
  std::pair<double, double> bounds_{0.0, 0.0};
};

using ColumnRef = std::variant<std::string, Index>;

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target_column,
                 bool has_header = true);

struct FeatureTable {
  Matrix features;
  std::vector<std::string> column_names;  // empty without a header
};

// Every column read as a feature.
FeatureTable load_feature_csv(const std::filesystem::path& path, bool has_header = true);

// Writes columns x0..x{d-1} (or the dataset's own names) followed by the target.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& target_name = "y");

/// Per-column z-scoring with population standard deviations.
/// Constant columns keep std = 1, which turns their transform into a shift.
struct StandardScaler {
  Vector means;
  Vector stds;

  Matrix transform(const Matrix& x) const;
  Matrix inverse_transform(const Matrix& x) const;
  Vector transform_point(const Vector& x) const;
  Dataset transform(const Dataset& data) const;
};

StandardScaler fit_standard_scaler(const Dataset& data);

struct FoldPlan {
  std::vector<int> fold_of;  // fold id per sample, in [0, folds)
  std::uint64_t seed = 0;
  int folds = 0;

  std::vector<Index> test_rows(int fold) const;
  std::vector<Index> train_rows(int fold) const;
};

FoldPlan make_folds(Index n, int folds, std::uint64_t seed);

// Shuffled split into (first, second) with round(fraction * n) rows in second.
std::pair<std::vector<Index>, std::vector<Index>> split_rows(Index n, double second_fraction,
                                                             std::uint64_t seed);

/// Noise-free Friedman-1 response for one feature row (uses columns 0..4).
template <typename Derived>
double friedman1_response(const Eigen::DenseBase<Derived>& x) {
  constexpr double pi = 3.14159265358979323846;
  const double c = x(2) - 0.5;
  return 10.0 * x(3) + 5.0 * x(4) + 20.0 * c * c + 10.0 * std::sin(pi * x(0) * x(1));
}

Dataset friedman1(Index n_samples, Index n_features, double noise_scale, std::uint64_t seed);

}  // namespace dnnr
