#pragma once

#include "dnnr/dataset.hpp"
#include "dnnr/featscale.hpp"
#include "dnnr/json_io.hpp"
#include "dnnr/predictor.hpp"
#include "dnnr/theory.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dnnr {

enum class Method { dnnr, dnnr2, dnnr_lasso, dnnr_unscaled, knn, knn_scaled, ll, ll_scaled };

Method parse_method(std::string_view name);
std::string method_name(Method m);
const std::vector<Method>& all_methods();

// Whether the method runs in the learned-weight metric by default.
bool method_learns_weights(Method m);
std::vector<std::string> grid_keys(Method m);

struct CsvSource {
  std::filesystem::path path;
  ColumnRef target = Index{-1};
};

struct Friedman1Spec {
  Index n_samples = 5000;
  Index n_features = 10;
  double noise = 0.0;
};

using DatasetSource = std::variant<CsvSource, Friedman1Spec>;

Dataset load_source(const DatasetSource& source, std::uint64_t seed);

using Grid = std::map<std::string, std::vector<double>>;
using Hyperparameters = std::map<std::string, double>;

/// Receives the original row ids each training stage reads. Stages:
/// "scaler", "weights", "grid_train", "grid_val", "refit", "test".
using StageObserver = std::function<void(std::string_view stage, int fold, std::span<const Index> rows)>;

struct ExperimentConfig {
  Method method = Method::dnnr;
  DatasetSource dataset = Friedman1Spec{};
  int folds = 5;
  std::uint64_t seed = 0;
  Grid grid;                            // empty: default grid for the dataset size
  std::optional<bool> scale_features;   // learned weights; defaults from the method
  bool tune_first_fold_only = false;    // freeze fold-0 hyperparameters for later folds
  std::optional<ScaleTrainConfig> scale_train;  // defaults to default_scale_config
  StageObserver observer;

  bool learns_weights() const;
  void validate() const;
};

struct ResultReport {
  std::string method;
  Index n = 0;
  Index d = 0;
  std::vector<double> per_fold_mse;
  std::vector<double> per_fold_r2;
  double mean_mse = 0.0;
  double std_mse = 0.0;  // sample standard deviation across folds
  double r2 = 0.0;       // mean of per-fold R^2
  Hyperparameters best_hyperparameters;  // most frequent per-fold choice
  std::vector<Hyperparameters> per_fold_hyperparameters;
  std::vector<ScalingWeights> per_fold_weights;  // learned-weight methods only
  double wall_time_s = 0.0;
};

struct KPrimeGrid {
  std::vector<Index> values;
  std::string warning;  // set when the range holds fewer distinct values than asked
};

/// `count` distinct integers spread evenly over [lower * d, upper * d], each >= d.
KPrimeGrid sample_kprime_grid(Index d, double lower, double upper, int count);

// Default search grid for a method, sized by the number of training rows.
Grid default_grid(Method m, Index n, Index d);

void validate_grid(Method m, const Grid& grid);

/// Expands a grid into its cells, last key varying fastest.
std::vector<Hyperparameters> expand_grid(const Grid& grid);

/// Predictions of one configured method fitted on `train`.
Vector fit_and_predict(Method m, const Hyperparameters& hp, const Dataset& train,
                       const ScalingWeights& weights, const Matrix& queries);

struct GridResult {
  Hyperparameters best;
  double best_mse = 0.0;
  std::vector<std::pair<Hyperparameters, double>> cells;  // feasible cells only
};

/// Scores every feasible cell on `val`; ties keep the earliest cell.
GridResult grid_search(Method m, const Grid& grid, const Dataset& train, const Dataset& val,
                       const ScalingWeights& weights);

ResultReport run_experiment(const ExperimentConfig& config);
// Same protocol on an already loaded dataset.
ResultReport run_experiment(const ExperimentConfig& config, const Dataset& data);

enum class SweepAxis { n_samples, noise, n_features };
SweepAxis parse_axis(std::string_view name);
std::string axis_name(SweepAxis axis);

struct SweepRow {
  SweepAxis axis;
  double value = 0.0;
  Method method;
  ResultReport report;
};

/// Friedman-1 sweep from the defaults (5000 rows, 10 features, no noise),
/// 5 folds, hyperparameters tuned on the first fold and then frozen.
std::vector<SweepRow> run_friedman_sweep(SweepAxis axis, const std::vector<double>& values,
                                         const std::vector<Method>& methods, std::uint64_t seed,
                                         const Grid& grid = {});

struct BoundSimConfig {
  Index n_train = 10000;
  Index n_test = 2000;
  Index k = 7;
  Index k_prime = 32;
  double lipschitz = 40.0;
  std::uint64_t seed = 0;
};

struct BoundSimResult {
  PointwiseTolerances tolerances;
  std::vector<double> dnnr_abs_error;
  std::vector<double> knn_abs_error;
  double dnnr_violation_rate = 0.0;  // share of valid points with eps_dnnr < |error|
  double knn_violation_rate = 0.0;
  double dnnr_spearman = 0.0;
  double knn_spearman = 0.0;
  double dnnr_mse = 0.0;
  double knn_mse = 0.0;
};

/// DNNR and KNN on raw Friedman-1 features with identity weights, so the
/// Lipschitz constant refers to the generating function's own coordinates.
BoundSimResult run_bound_sim(const BoundSimConfig& config);

// Tolerance CSV sorted by eps_dnnr, ascending.
void write_bound_csv(std::ostream& out, const BoundSimResult& result);
std::string bound_summary(const BoundSimResult& result);

/// A tuned model ready to predict raw feature rows.
struct FittedModel {
  Method method = Method::dnnr;
  Hyperparameters hyperparameters;
  StandardScaler scaler;
  ScalingWeights weights;
  Dataset train;  // standardised training rows
  std::vector<std::string> column_names;
  std::string target_name = "y";
};

// Grid search on an 80/20 split of `data`, then refit on all of it.
FittedModel fit_model(Method m, const Dataset& data, const Grid& grid, std::uint64_t seed,
                      std::optional<bool> scale_features = std::nullopt);
Vector predict(const FittedModel& model, const Matrix& raw_features);

Json to_json(const FittedModel& model);
FittedModel fitted_model_from_json(const Json& j);

Json to_json(const ResultReport& report, bool include_timing = true);
std::string report_table(const ResultReport& report);
std::string report_csv(const std::vector<ResultReport>& reports);

Grid grid_from_json(const Json& j);

}  // namespace dnnr
