#pragma once

#include "dnnr/dataset.hpp"
#include "dnnr/nnindex.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace dnnr {

struct ScaleTrainConfig {
  int epochs = 8;
  Index batch_pairs = 20;  // pairs per descent step
  double learning_rate = 0.01;
  Index k_prime = 20;      // neighbours per inner gradient fit
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  Index val_k = 3;         // anchors per query when scoring an epoch

  void validate() const;
};

struct ScaleTrainReport {
  ScalingWeights final_weights;
  std::vector<double> loss_history;        // mean objective per epoch (epoch 0: none)
  std::vector<double> validation_mse;      // index 0 is the identity start
  std::vector<ScalingWeights> weight_history;  // index 0 is the identity start
  int best_epoch = 0;                      // 0 means the identity start won
  int skipped_steps = 0;                   // degenerate or non-finite steps
};

using RowPair = std::pair<Index, Index>;

struct ObjectiveValue {
  double value = 0.0;  // negative Pearson correlation
  bool degenerate = false;
};

/// Negative Pearson correlation between two samples; 0 with the degenerate
/// flag when either sample has zero variance.
ObjectiveValue negative_correlation(std::span<const double> distances,
                                    std::span<const double> errors);

/// Objective for a set of (i, j) pairs under the given weights.
///
/// For each pair, the error is |Y_i - Taylor estimate of Y_i from anchor j|,
/// with anchor j's gradient fit on its k' nearest rows other than i and j.
/// The distance is the squared weighted metric between rows i and j.
ObjectiveValue pairwise_objective(const ScalingWeights& weights, const Dataset& data,
                                  std::span<const RowPair> pairs, Index k_prime);

// Analytic derivative of pairwise_objective with respect to the weights,
// holding the neighbourhoods fixed.
Vector pairwise_objective_gradient(const ScalingWeights& weights, const Dataset& data,
                                   std::span<const RowPair> pairs, Index k_prime);

// Per-pair errors (same definition as above), exposed for verification.
std::vector<double> cross_prediction_errors(const ScalingWeights& weights, const Dataset& data,
                                            std::span<const RowPair> pairs, Index k_prime);

// Defaults sized to the dimension: k' = batch_pairs = 2d.
ScaleTrainConfig default_scale_config(Index d, std::uint64_t seed);

ScaleTrainReport train_weights(const Dataset& data, const ScaleTrainConfig& config);

// Columns epoch, loss, validation_mse, then one column per weight.
void write_loss_history_csv(std::ostream& out, const ScaleTrainReport& report);

}  // namespace dnnr
