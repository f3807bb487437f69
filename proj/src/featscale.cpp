#include "dnnr/featscale.hpp"

#include "dnnr/gradient.hpp"
#include "dnnr/predictor.hpp"

#include <numeric>
#include <ostream>

namespace dnnr {

void ScaleTrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_pairs < 3) throw ConfigError("batch_pairs must be at least 3");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be finite and non-negative");
  if (k_prime < 1) throw ConfigError("k' must be positive");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("val_fraction must lie in (0, 1)");
  if (val_k < 1) throw ConfigError("val_k must be positive");
}

ObjectiveValue negative_correlation(std::span<const double> distances,
                                    std::span<const double> errors) {
  if (distances.size() != errors.size()) throw ConfigError("sample sizes differ");
  if (distances.size() < 3) throw ConfigError("correlation needs at least 3 pairs");
  const auto n = static_cast<double>(distances.size());
  const double mean_d = std::accumulate(distances.begin(), distances.end(), 0.0) / n;
  const double mean_e = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
  double sdd = 0.0, see = 0.0, sde = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double a = distances[i] - mean_d;
    const double b = errors[i] - mean_e;
    sdd += a * a;
    see += b * b;
    sde += a * b;
  }
  if (!(sdd > 0.0) || !(see > 0.0)) return {0.0, true};
  return {-sde / std::sqrt(sdd * see), false};
}

namespace {

// Distances, errors and squared coordinate gaps for a batch of pairs.
struct PairBatch {
  std::vector<double> distances;
  std::vector<double> errors;
  Matrix squared_gaps;  // one row per pair, unweighted (x_i - x_j)^2
};

template <typename NeighborFn>
PairBatch evaluate_pairs(const NeighborIndex& index, const Dataset& data,
                         std::span<const RowPair> pairs, NeighborFn&& neighbors_of) {
  const auto& x = data.features();
  const auto& scaled = index.points();
  const auto& y = data.targets();
  PairBatch batch;
  batch.squared_gaps.resize(static_cast<Index>(pairs.size()), data.dim());
  LocalFitOptions opts;
  opts.compute_sigma = false;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    if (i == j) throw ConfigError("pair rows must differ");
    const auto fit_rows = neighbors_of(i, j);
    const LocalModel local = fit_local(scaled, y, j, fit_rows, opts);
    const double estimate = taylor_predict(local, scaled.row(j), y(j), scaled.row(i));
    batch.errors.push_back(std::abs(y(i) - estimate));
    batch.distances.push_back((scaled.row(i) - scaled.row(j)).squaredNorm());
    batch.squared_gaps.row(static_cast<Index>(p)) = (x.row(i) - x.row(j)).array().square();
  }
  return batch;
}

// d(-corr)/d(weights) through the distances; the Taylor estimates are
// invariant to diagonal rescaling for fixed neighbourhoods.
Vector objective_gradient(const PairBatch& batch, const Vector& weights) {
  const auto n = static_cast<double>(batch.distances.size());
  const double mean_d = std::accumulate(batch.distances.begin(), batch.distances.end(), 0.0) / n;
  const double mean_e = std::accumulate(batch.errors.begin(), batch.errors.end(), 0.0) / n;
  double sdd = 0.0, see = 0.0, sde = 0.0;
  for (std::size_t p = 0; p < batch.distances.size(); ++p) {
    const double a = batch.distances[p] - mean_d;
    const double b = batch.errors[p] - mean_e;
    sdd += a * a;
    see += b * b;
    sde += a * b;
  }
  const double norm = std::sqrt(sdd * see);
  const double r = sde / norm;
  Vector d_corr_d_dist(static_cast<Index>(batch.distances.size()));
  for (std::size_t p = 0; p < batch.distances.size(); ++p) {
    const double a = batch.distances[p] - mean_d;
    const double b = batch.errors[p] - mean_e;
    d_corr_d_dist(static_cast<Index>(p)) = b / norm - r * a / sdd;
  }
  // distance_p = sum_l w_l^2 gap_pl  =>  d distance_p / d w_l = 2 w_l gap_pl
  const Vector chain = batch.squared_gaps.transpose() * d_corr_d_dist;
  return -(2.0 * weights.array() * chain.array()).matrix();
}

std::vector<Index> fit_rows_excluding(const NeighborIndex& index, Index anchor, Index left_out,
                                      Index k_prime) {
  const Index exclude[] = {anchor, left_out};
  return index.query_row(anchor, k_prime, exclude).indices;
}

}  // namespace

std::vector<double> cross_prediction_errors(const ScalingWeights& weights, const Dataset& data,
                                            std::span<const RowPair> pairs, Index k_prime) {
  const NeighborIndex index(data.features(), weights);
  return evaluate_pairs(index, data, pairs,
                        [&](Index i, Index j) {
                          return fit_rows_excluding(index, j, i, k_prime);
                        })
      .errors;
}

ObjectiveValue pairwise_objective(const ScalingWeights& weights, const Dataset& data,
                                  std::span<const RowPair> pairs, Index k_prime) {
  if (pairs.size() < 3) throw ConfigError("objective needs at least 3 pairs");
  for (const auto& [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= data.rows() || j >= data.rows())
      throw ConfigError("pair row out of range");
  }
  const NeighborIndex index(data.features(), weights);
  const auto batch = evaluate_pairs(index, data, pairs, [&](Index i, Index j) {
    return fit_rows_excluding(index, j, i, k_prime);
  });
  return negative_correlation(batch.distances, batch.errors);
}

Vector pairwise_objective_gradient(const ScalingWeights& weights, const Dataset& data,
                                   std::span<const RowPair> pairs, Index k_prime) {
  const NeighborIndex index(data.features(), weights);
  const auto batch = evaluate_pairs(index, data, pairs, [&](Index i, Index j) {
    return fit_rows_excluding(index, j, i, k_prime);
  });
  if (negative_correlation(batch.distances, batch.errors).degenerate)
    return Vector::Zero(data.dim());
  return objective_gradient(batch, weights.weights);
}

namespace {

double validation_mse(const Dataset& train, const Dataset& val, const ScalingWeights& weights,
                      const ScaleTrainConfig& config) {
  DnnrConfig dc;
  dc.k = config.val_k;
  dc.k_prime = config.k_prime;
  const DnnrModel model(train, dc, weights);
  const Vector pred = model.predict(val.features());
  return (pred - val.targets()).squaredNorm() / static_cast<double>(val.rows());
}

}  // namespace

ScaleTrainConfig default_scale_config(Index d, std::uint64_t seed) {
  ScaleTrainConfig c;
  c.k_prime = std::max<Index>(2 * d, 2);
  c.batch_pairs = std::max<Index>(c.k_prime, 3);
  c.seed = seed;
  return c;
}

ScaleTrainReport train_weights(const Dataset& data, const ScaleTrainConfig& config) {
  config.validate();
  if (data.rows() < 4 * config.k_prime)
    throw DataError("weight training needs n >= 4 k' = " + std::to_string(4 * config.k_prime) +
                    " rows, got " + std::to_string(data.rows()));
  if (config.k_prime < data.dim())
    throw ConfigError("k' must be at least the feature dimension");

  auto [train_rows, val_rows] = split_rows(data.rows(), config.val_fraction, config.seed);
  const Dataset train = data.subset(train_rows);
  const Dataset val = data.subset(val_rows);
  if (train.rows() <= config.k_prime + 1 || val.rows() < 1)
    throw DataError("too few rows left after the validation split");

  const Index pairs_per_step = std::min(config.batch_pairs, config.k_prime + 1);
  Rng rng(derive_seed(config.seed, 1));
  ScaleTrainReport report;
  ScalingWeights w = ScalingWeights::identity(data.dim());
  report.weight_history.push_back(w);
  report.validation_mse.push_back(validation_mse(train, val, w, config));

  std::vector<Index> order(static_cast<std::size_t>(train.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<RowPair> pairs;
  pairs.reserve(static_cast<std::size_t>(pairs_per_step));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Neighbourhoods refresh once per epoch: k'+1 rows per anchor leaves k'
    // after removing the paired row.
    const NeighborIndex index(train.features(), w);
    std::vector<std::vector<Index>> hood(static_cast<std::size_t>(train.rows()));
    for (Index i = 0; i < train.rows(); ++i) {
      const Index exclude[] = {i};
      hood[static_cast<std::size_t>(i)] = index.query_row(i, config.k_prime + 1, exclude).indices;
    }
    auto neighbors_of = [&](Index i, Index j) {
      std::vector<Index> rows;
      rows.reserve(static_cast<std::size_t>(config.k_prime));
      for (const Index r : hood[static_cast<std::size_t>(j)]) {
        if (r != i) rows.push_back(r);
        if (static_cast<Index>(rows.size()) == config.k_prime) break;
      }
      return rows;
    };

    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    int loss_count = 0;
    for (const Index i : order) {
      pairs.clear();
      for (const Index j : hood[static_cast<std::size_t>(i)]) {
        pairs.emplace_back(i, j);
        if (static_cast<Index>(pairs.size()) == pairs_per_step) break;
      }
      // Scaled points come from this epoch's index; the current weights
      // only enter through the distances.
      const auto batch = evaluate_pairs(index, train, pairs, neighbors_of);
      std::vector<double> distances(batch.distances.size());
      for (std::size_t p = 0; p < distances.size(); ++p)
        distances[p] = batch.squared_gaps.row(static_cast<Index>(p)).dot(w.weights.array().square().matrix());
      PairBatch current{distances, batch.errors, batch.squared_gaps};
      const auto objective = negative_correlation(current.distances, current.errors);
      if (objective.degenerate) {
        ++report.skipped_steps;
        continue;
      }
      const Vector grad = objective_gradient(current, w.weights);
      if (!grad.allFinite()) {
        ++report.skipped_steps;
        continue;
      }
      loss_sum += objective.value;
      ++loss_count;
      w.weights = (w.weights - config.learning_rate * grad).cwiseMax(0.0);
    }
    report.loss_history.push_back(loss_count > 0 ? loss_sum / loss_count : 0.0);
    report.weight_history.push_back(w);
    report.validation_mse.push_back(validation_mse(train, val, w, config));
  }

  const auto best = std::min_element(report.validation_mse.begin(), report.validation_mse.end());
  report.best_epoch = static_cast<int>(best - report.validation_mse.begin());
  report.final_weights = report.weight_history[static_cast<std::size_t>(report.best_epoch)];
  return report;
}

void write_loss_history_csv(std::ostream& out, const ScaleTrainReport& report) {
  const auto old = out.precision(17);
  out << "epoch,loss,validation_mse";
  const Index d = report.weight_history.empty() ? 0 : report.weight_history.front().dim();
  for (Index j = 0; j < d; ++j) out << ",w" << j;
  out << '\n';
  for (std::size_t e = 0; e < report.weight_history.size(); ++e) {
    out << e << ',';
    if (e > 0) out << report.loss_history[e - 1];
    out << ',' << report.validation_mse[e];
    for (Index j = 0; j < d; ++j) out << ',' << report.weight_history[e].weights(j);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace dnnr
