#include "dnnr/predictor.hpp"

#include "dnnr/featscale.hpp"

#include <numeric>

namespace dnnr {

void DnnrConfig::validate(Index d) const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (order != 1 && order != 2) throw ConfigError("order must be 1 or 2");
  if (k_prime < d * order)
    throw ConfigError("k' = " + std::to_string(k_prime) + " is below d * order = " +
                      std::to_string(d * order));
  if (lasso_lambda) {
    if (!(*lasso_lambda >= 0.0)) throw ConfigError("lasso lambda must be non-negative");
    if (order != 1) throw ConfigError("lasso gradients are first order only");
  }
}

double clip_value(double value, std::pair<double, double> bounds) {
  return std::clamp(value, bounds.first, bounds.second);
}

double ordered_mean(std::span<const double> values) {
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

DnnrModel::DnnrModel(const Dataset& data, const DnnrConfig& config, const ScalingWeights& weights)
    : data_(std::make_shared<const Dataset>(data)), config_(config), weights_(weights) {
  config_.validate(data.dim());
  weights_.validate(data.dim());
  // Averaging needs k rows; each anchor fit needs k' rows besides the anchor.
  if (data.rows() < config_.k || data.rows() <= config_.k_prime)
    throw DataError("need at least k = " + std::to_string(config_.k) + " and more than k' = " +
                    std::to_string(config_.k_prime) + " training rows, got " +
                    std::to_string(data.rows()));
  index_ = std::make_shared<const NeighborIndex>(data.features(), weights_);
  cache_ = std::make_shared<Cache>(data.rows());
}

std::vector<Index> DnnrModel::fit_neighbors(Index anchor) const {
  const Index exclude[] = {anchor};
  return index_->query_row(anchor, config_.k_prime, exclude).indices;
}

LocalModel DnnrModel::fit_anchor(Index anchor) const {
  const auto neighbors = fit_neighbors(anchor);
  const auto& x = index_->points();
  const auto& y = data_->targets();
  LocalModel model;
  if (config_.lasso_lambda) {
    model = fit_local_lasso(x, y, anchor, neighbors, *config_.lasso_lambda);
  } else {
    LocalFitOptions opts;
    opts.order = config_.order;
    opts.scaling = config_.differences;
    model = fit_local(x, y, anchor, neighbors, opts);
  }
  if (config_.zero_gradient) {
    model.gamma.setZero();
    if (model.hess_diag) model.hess_diag->setZero();
  }
  return model;
}

const LocalModel& DnnrModel::local_model(Index anchor) const {
  if (anchor < 0 || anchor >= data_->rows()) throw ConfigError("anchor id out of range");
  const auto slot = static_cast<std::size_t>(anchor);
  std::call_once(cache_->flags[slot], [&] { cache_->models[slot] = fit_anchor(anchor); });
  return cache_->models[slot];
}

Vector DnnrModel::gradient(Index anchor) const {
  return (local_model(anchor).gamma.array() * weights_.weights.array()).matrix();
}

std::size_t DnnrModel::fitted_anchor_count() const {
  return static_cast<std::size_t>(std::count_if(cache_->models.begin(), cache_->models.end(),
                                                [](const LocalModel& m) { return m.anchor_id >= 0; }));
}

int DnnrModel::dropped_neighbor_total() const {
  int total = 0;
  for (const auto& m : cache_->models) total += m.dropped_neighbors;
  return total;
}

DnnrModel DnnrModel::with_k(Index k) const {
  DnnrModel copy = *this;
  copy.config_.k = k;
  copy.config_.validate(data_->dim());
  if (data_->rows() < k)
    throw DataError("not enough training rows for k = " + std::to_string(k));
  return copy;
}

double DnnrModel::predict(const Vector& x) const {
  if (x.size() != data_->dim()) throw DataError("query dimension mismatch");
  const auto q = index_->transform(x);
  const auto anchors = index_->query(x, config_.k);
  std::vector<double> estimates;
  estimates.reserve(anchors.size());
  for (const Index m : anchors.indices) {
    estimates.push_back(
        taylor_predict(local_model(m), index_->points().row(m), data_->targets()(m), q));
  }
  const double mean = ordered_mean(estimates);
  return config_.clip ? clip_value(mean, data_->target_bounds()) : mean;
}

Vector DnnrModel::predict(const Matrix& queries) const {
  Vector out(queries.rows());
  for (Index i = 0; i < queries.rows(); ++i) out(i) = predict(Vector(queries.row(i).transpose()));
  return out;
}

PredictionTrace DnnrModel::predict_traced(const Vector& x) const {
  if (x.size() != data_->dim()) throw DataError("query dimension mismatch");
  const auto q = index_->transform(x);
  const auto anchors = index_->query(x, config_.k);
  PredictionTrace trace;
  trace.query = x;
  trace.neighbor_ids = anchors.indices;
  for (const Index m : anchors.indices) {
    const LocalModel& local = local_model(m);
    AnchorTrace a;
    a.id = m;
    a.point = data_->features().row(m).transpose();
    a.target = data_->targets()(m);
    a.gradient = gradient(m);
    if (local.hess_diag) {
      const Vector w2 = weights_.weights.array().square();
      a.hess_diag = (local.hess_diag->array() * w2.array()).matrix();
    }
    a.estimate = taylor_predict(local, index_->points().row(m), a.target, q);
    a.relevance = ((x - a.point).array() * a.gradient.array()).abs().matrix();
    a.fit_neighbor_ids = fit_neighbors(m);
    for (const Index f : a.fit_neighbor_ids)
      a.fit_neighbor_points.push_back(data_->features().row(f).transpose());
    trace.per_neighbor_estimates.push_back(a.estimate);
    trace.per_neighbor_relevance.push_back(a.relevance);
    trace.anchors.push_back(std::move(a));
  }
  trace.raw_mean = ordered_mean(trace.per_neighbor_estimates);
  trace.clipped = config_.clip ? clip_value(trace.raw_mean, data_->target_bounds()) : trace.raw_mean;
  trace.was_clipped = trace.clipped != trace.raw_mean;
  return trace;
}

DnnrModel fit_dnnr(const Dataset& data, const DnnrConfig& config, const ScalingWeights& weights) {
  return DnnrModel(data, config, weights);
}

DnnrModel fit_dnnr(const Dataset& data, const DnnrConfig& config) {
  if (config.scaling == ScalingMode::identity)
    return DnnrModel(data, config, ScalingWeights::identity(data.dim()));
  const auto report = train_weights(data, default_scale_config(data.dim(), 0));
  return DnnrModel(data, config, report.final_weights);
}

KnnModel::KnnModel(const Dataset& data, Index k, const ScalingWeights& weights, bool clip)
    : data_(std::make_shared<const Dataset>(data)), k_(k), clip_(clip) {
  if (k < 1 || k > data.rows()) throw ConfigError("k must lie in [1, n]");
  index_ = std::make_shared<const NeighborIndex>(data.features(), weights);
}

KnnModel KnnModel::with_k(Index k) const {
  if (k < 1 || k > data_->rows()) throw ConfigError("k must lie in [1, n]");
  KnnModel copy = *this;
  copy.k_ = k;
  return copy;
}

double KnnModel::predict(const Vector& x) const {
  const auto nb = index_->query(x, k_);
  std::vector<double> values;
  values.reserve(nb.size());
  for (const Index m : nb.indices) values.push_back(data_->targets()(m));
  const double mean = ordered_mean(values);
  return clip_ ? clip_value(mean, data_->target_bounds()) : mean;
}

Vector KnnModel::predict(const Matrix& queries) const {
  Vector out(queries.rows());
  for (Index i = 0; i < queries.rows(); ++i) out(i) = predict(Vector(queries.row(i).transpose()));
  return out;
}

KnnModel fit_knn(const Dataset& data, Index k, const ScalingWeights& weights, bool clip) {
  return KnnModel(data, k, weights, clip);
}

LlModel::LlModel(const Dataset& data, Index k_region, const ScalingWeights& weights, bool clip)
    : data_(std::make_shared<const Dataset>(data)), k_region_(k_region), clip_(clip) {
  if (k_region < data.dim() + 1)
    throw ConfigError("local linear regions need at least d + 1 = " +
                      std::to_string(data.dim() + 1) + " rows");
  if (k_region > data.rows()) throw ConfigError("k_region exceeds the number of training rows");
  index_ = std::make_shared<const NeighborIndex>(data.features(), weights);
}

LlModel LlModel::with_k(Index k_region) const {
  if (k_region < data_->dim() + 1 || k_region > data_->rows())
    throw ConfigError("k_region out of range");
  LlModel copy = *this;
  copy.k_region_ = k_region;
  return copy;
}

double LlModel::predict(const Vector& x) const {
  const auto nb = index_->query(x, k_region_);
  const Index d = data_->dim();
  const auto q = index_->transform(x);
  Eigen::MatrixXd design(static_cast<Index>(nb.size()), d + 1);
  Eigen::VectorXd rhs(static_cast<Index>(nb.size()));
  for (Index r = 0; r < static_cast<Index>(nb.size()); ++r) {
    const Index m = nb.indices[static_cast<std::size_t>(r)];
    design(r, 0) = 1.0;
    design.row(r).tail(d) = index_->points().row(m) - q.transpose();
    rhs(r) = data_->targets()(m);
  }
  // Centred at the query, so the intercept is the prediction.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::VectorXd beta;
  if (qr.rank() == design.cols()) {
    beta = qr.solve(rhs);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(qr.threshold());
    beta = svd.solve(rhs);
  }
  return clip_ ? clip_value(beta(0), data_->target_bounds()) : beta(0);
}

Vector LlModel::predict(const Matrix& queries) const {
  Vector out(queries.rows());
  for (Index i = 0; i < queries.rows(); ++i) out(i) = predict(Vector(queries.row(i).transpose()));
  return out;
}

LlModel fit_ll(const Dataset& data, Index k_region, const ScalingWeights& weights, bool clip) {
  return LlModel(data, k_region, weights, clip);
}

}  // namespace dnnr
