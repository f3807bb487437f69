#pragma once

#include "dnnr/dataset.hpp"
#include "dnnr/gradient.hpp"
#include "dnnr/nnindex.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace dnnr {

enum class ScalingMode { identity, learned };

struct DnnrConfig {
  Index k = 3;         // anchors averaged per query
  Index k_prime = 20;  // neighbours per gradient fit
  int order = 1;
  std::optional<double> lasso_lambda;
  bool clip = true;
  ScalingMode scaling = ScalingMode::identity;
  DifferenceScaling differences = DifferenceScaling::raw;
  // Replace every estimated gradient by zero; the prediction becomes plain KNN.
  bool zero_gradient = false;

  void validate(Index d) const;
};

/// One anchor's contribution to a prediction.
struct AnchorTrace {
  Index id = -1;
  Vector point;     // anchor coordinates, input space
  double target = 0.0;
  Vector gradient;  // input-space gradient
  std::optional<Vector> hess_diag;
  double estimate = 0.0;
  Vector relevance;  // |(x - x_m) * gradient|
  std::vector<Index> fit_neighbor_ids;
  std::vector<Vector> fit_neighbor_points;  // input space
};

struct PredictionTrace {
  Vector query;
  std::vector<Index> neighbor_ids;
  std::vector<double> per_neighbor_estimates;
  std::vector<Vector> per_neighbor_relevance;
  double raw_mean = 0.0;
  double clipped = 0.0;
  bool was_clipped = false;
  std::vector<AnchorTrace> anchors;
};

double clip_value(double value, std::pair<double, double> bounds);

// Arithmetic mean summed in the given order. Shared by every averaging engine.
double ordered_mean(std::span<const double> values);

class DnnrModel {
public:
  DnnrModel(const Dataset& data, const DnnrConfig& config, const ScalingWeights& weights);

  double predict(const Vector& x) const;
  Vector predict(const Matrix& queries) const;
  PredictionTrace predict_traced(const Vector& x) const;

  // Local model of a training row in the weighted space. Fitted on first use.
  const LocalModel& local_model(Index anchor) const;
  // Input-space gradient of a training row.
  Vector gradient(Index anchor) const;
  std::vector<Index> fit_neighbors(Index anchor) const;

  // Same training data, index and cached local models with a different k.
  DnnrModel with_k(Index k) const;

  const DnnrConfig& config() const { return config_; }
  const ScalingWeights& weights() const { return weights_; }
  const Dataset& data() const { return *data_; }
  const NeighborIndex& index() const { return *index_; }
  std::size_t fitted_anchor_count() const;
  int dropped_neighbor_total() const;

private:
  struct Cache {
    explicit Cache(Index n) : flags(new std::once_flag[static_cast<std::size_t>(n)]), models(n) {}
    std::unique_ptr<std::once_flag[]> flags;
    std::vector<LocalModel> models;
  };

  LocalModel fit_anchor(Index anchor) const;

  std::shared_ptr<const Dataset> data_;
  DnnrConfig config_;
  ScalingWeights weights_;
  std::shared_ptr<const NeighborIndex> index_;
  std::shared_ptr<Cache> cache_;
};

DnnrModel fit_dnnr(const Dataset& data, const DnnrConfig& config, const ScalingWeights& weights);
// Uses identity weights, or trains them when config.scaling is learned.
DnnrModel fit_dnnr(const Dataset& data, const DnnrConfig& config);

class KnnModel {
public:
  KnnModel(const Dataset& data, Index k, const ScalingWeights& weights, bool clip = true);

  double predict(const Vector& x) const;
  Vector predict(const Matrix& queries) const;
  NeighborSet neighbors(const Vector& x) const { return index_->query(x, k_); }
  KnnModel with_k(Index k) const;

private:
  std::shared_ptr<const Dataset> data_;
  std::shared_ptr<const NeighborIndex> index_;
  Index k_;
  bool clip_;
};

KnnModel fit_knn(const Dataset& data, Index k, const ScalingWeights& weights, bool clip = true);

/// Local linear regression: one hyperplane with intercept through the
/// query's k_region nearest rows, evaluated at the query.
class LlModel {
public:
  LlModel(const Dataset& data, Index k_region, const ScalingWeights& weights, bool clip = true);

  double predict(const Vector& x) const;
  Vector predict(const Matrix& queries) const;
  LlModel with_k(Index k_region) const;

private:
  std::shared_ptr<const Dataset> data_;
  std::shared_ptr<const NeighborIndex> index_;
  Index k_region_;
  bool clip_;
};

LlModel fit_ll(const Dataset& data, Index k_region, const ScalingWeights& weights, bool clip = true);

}  // namespace dnnr
