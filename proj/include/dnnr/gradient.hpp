#pragma once

#include "dnnr/common.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dnnr {

// How neighbour differences enter the least-squares system.
enum class DifferenceScaling {
  raw,   // rows X_i - X_m against Y_i - Y_m
  unit,  // rows and targets divided by h_i = |X_i - X_m|
};

struct LocalFitOptions {
  int order = 1;  // 1: gradient only, 2: gradient plus diagonal Hessian
  DifferenceScaling scaling = DifferenceScaling::raw;
  bool compute_sigma = true;
};

struct LassoOptions {
  double tolerance = 1e-8;  // max coefficient change per sweep
  int max_sweeps = 10000;
};

/// Derivative estimate at one anchor row.
template <typename Scalar>
struct BasicLocalModel {
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Index anchor_id = -1;
  VectorType gamma;
  std::optional<VectorType> hess_diag;
  // Smallest singular value of the matrix of unit directions (X_i - X_m) / h_i.
  // Zero when those directions do not span the feature space.
  Scalar sigma_min = 0;
  Scalar h_max = 0;
  Scalar residual_norm = 0;
  // l1 norms of the unit directions, one per neighbour kept in the fit.
  VectorType direction_l1;
  int rank = 0;
  int dropped_neighbors = 0;  // neighbours coinciding with the anchor
  int sweeps = 0;             // coordinate-descent sweeps (lasso only)

  int order() const { return hess_diag ? 2 : 1; }
};

using LocalModel = BasicLocalModel<double>;

namespace detail {

template <typename Scalar>
struct LocalSystem {
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  MatrixType design;
  VectorType rhs;
  MatrixType directions;
  VectorType l1;
  Scalar h_max = 0;
  int dropped = 0;
};

template <typename DerivedX, typename DerivedY>
LocalSystem<typename DerivedX::Scalar> build_system(const Eigen::MatrixBase<DerivedX>& features,
                                                    const Eigen::MatrixBase<DerivedY>& targets,
                                                    Index anchor,
                                                    std::span<const Index> neighbors,
                                                    const LocalFitOptions& opts) {
  using Scalar = typename DerivedX::Scalar;
  const Index d = features.cols();
  if (opts.order != 1 && opts.order != 2) throw ConfigError("Taylor order must be 1 or 2");
  if (features.rows() != targets.size()) throw DataError("features and targets disagree in length");
  if (anchor < 0 || anchor >= features.rows()) throw ConfigError("anchor id out of range");
  const auto needed = static_cast<std::size_t>(d * opts.order);
  if (neighbors.size() < needed)
    throw ConfigError("need at least " + std::to_string(needed) + " neighbours for an order-" +
                      std::to_string(opts.order) + " fit, got " +
                      std::to_string(neighbors.size()));
  if (!features.row(anchor).allFinite() || !std::isfinite(static_cast<double>(targets(anchor))))
    throw DataError("non-finite anchor");

  LocalSystem<Scalar> sys;
  const auto m = static_cast<Index>(neighbors.size());
  sys.design.resize(m, d * opts.order);
  sys.rhs.resize(m);
  sys.directions.resize(m, d);
  sys.l1.resize(m);
  Index kept = 0;
  for (const Index id : neighbors) {
    if (id == anchor) throw ConfigError("anchor listed among its own neighbours");
    if (id < 0 || id >= features.rows()) throw ConfigError("neighbour id out of range");
    const auto dx = (features.row(id) - features.row(anchor)).eval();
    const Scalar dy = targets(id) - targets(anchor);
    if (!dx.allFinite() || !std::isfinite(static_cast<double>(dy)))
      throw DataError("non-finite neighbour data");
    const Scalar h = dx.norm();
    if (!(h > Scalar(0))) {
      ++sys.dropped;
      continue;
    }
    const Scalar row_scale = opts.scaling == DifferenceScaling::unit ? Scalar(1) / h : Scalar(1);
    sys.design.row(kept).head(d) = dx * row_scale;
    if (opts.order == 2)
      sys.design.row(kept).tail(d) = (Scalar(0.5) * dx.array().square() * row_scale).matrix();
    sys.rhs(kept) = dy * row_scale;
    sys.directions.row(kept) = dx / h;
    sys.l1(kept) = (dx / h).template lpNorm<1>();
    sys.h_max = std::max(sys.h_max, h);
    ++kept;
  }
  sys.design.conservativeResize(kept, Eigen::NoChange);
  sys.rhs.conservativeResize(kept);
  sys.directions.conservativeResize(kept, Eigen::NoChange);
  sys.l1.conservativeResize(kept);
  return sys;
}

// Smallest singular value of the direction matrix; exact zero when rank deficient.
template <typename MatrixType>
typename MatrixType::Scalar smallest_singular_value(const MatrixType& a) {
  using Scalar = typename MatrixType::Scalar;
  if (a.rows() < a.cols() || a.cols() == 0) return Scalar(0);
  Eigen::JacobiSVD<MatrixType> svd(a);
  const auto& s = svd.singularValues();
  const Scalar tol = std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(a.rows()) * s(0);
  const Scalar smallest = s(s.size() - 1);
  return smallest > tol ? smallest : Scalar(0);
}

}  // namespace detail

/// Least-squares derivative estimate at `anchor` from the listed neighbours.
///
/// Differences against the anchor remove the intercept. Order 2 appends
/// 0.5 * dx_j^2 columns whose coefficients estimate the Hessian diagonal.
/// Rank-deficient systems get the minimum-norm solution.
template <typename DerivedX, typename DerivedY>
BasicLocalModel<typename DerivedX::Scalar> fit_local(const Eigen::MatrixBase<DerivedX>& features,
                                                     const Eigen::MatrixBase<DerivedY>& targets,
                                                     Index anchor,
                                                     std::span<const Index> neighbors,
                                                     const LocalFitOptions& opts = {}) {
  using Scalar = typename DerivedX::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Index d = features.cols();
  auto sys = detail::build_system(features, targets, anchor, neighbors, opts);

  BasicLocalModel<Scalar> model;
  model.anchor_id = anchor;
  model.h_max = sys.h_max;
  model.dropped_neighbors = sys.dropped;
  model.direction_l1 = sys.l1;

  typename BasicLocalModel<Scalar>::VectorType solution =
      BasicLocalModel<Scalar>::VectorType::Zero(d * opts.order);
  if (sys.design.rows() > 0) {
    Eigen::ColPivHouseholderQR<Dense> qr(sys.design);
    model.rank = static_cast<int>(qr.rank());
    if (qr.rank() == sys.design.cols()) {
      solution = qr.solve(sys.rhs);
    } else {
      Eigen::JacobiSVD<Dense> svd(sys.design, Eigen::ComputeThinU | Eigen::ComputeThinV);
      svd.setThreshold(qr.threshold());
      solution = svd.solve(sys.rhs);
    }
    model.residual_norm = (sys.design * solution - sys.rhs).norm();
  }
  model.gamma = solution.head(d);
  if (opts.order == 2) model.hess_diag = solution.tail(d);
  if (opts.compute_sigma) model.sigma_min = detail::smallest_singular_value(sys.directions);
  return model;
}

/// L1-penalised first-order fit: minimises |dX g - dY|^2 + lambda * |g|_1 by
/// cyclic coordinate descent on raw differences.
template <typename DerivedX, typename DerivedY>
BasicLocalModel<typename DerivedX::Scalar> fit_local_lasso(
    const Eigen::MatrixBase<DerivedX>& features, const Eigen::MatrixBase<DerivedY>& targets,
    Index anchor, std::span<const Index> neighbors, double lambda, const LassoOptions& lasso = {},
    bool compute_sigma = true) {
  using Scalar = typename DerivedX::Scalar;
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lasso lambda must be >= 0");
  const Index d = features.cols();
  LocalFitOptions opts;
  auto sys = detail::build_system(features, targets, anchor, neighbors, opts);

  BasicLocalModel<Scalar> model;
  model.anchor_id = anchor;
  model.h_max = sys.h_max;
  model.dropped_neighbors = sys.dropped;
  model.direction_l1 = sys.l1;
  model.gamma = BasicLocalModel<Scalar>::VectorType::Zero(d);

  const auto& x = sys.design;
  typename BasicLocalModel<Scalar>::VectorType residual = sys.rhs;
  const typename BasicLocalModel<Scalar>::VectorType col_sq = x.colwise().squaredNorm().transpose();
  const Scalar half_lambda = static_cast<Scalar>(lambda / 2.0);
  int sweep = 0;
  for (; sweep < lasso.max_sweeps && x.rows() > 0; ++sweep) {
    Scalar max_change = 0;
    for (Index j = 0; j < d; ++j) {
      if (!(col_sq(j) > Scalar(0))) continue;
      const Scalar old = model.gamma(j);
      const Scalar rho = x.col(j).dot(residual) + col_sq(j) * old;
      Scalar updated = 0;
      if (rho > half_lambda)
        updated = (rho - half_lambda) / col_sq(j);
      else if (rho < -half_lambda)
        updated = (rho + half_lambda) / col_sq(j);
      if (updated != old) {
        residual -= x.col(j) * (updated - old);
        model.gamma(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    if (max_change < static_cast<Scalar>(lasso.tolerance)) {
      ++sweep;
      break;
    }
  }
  model.sweeps = sweep;
  model.residual_norm = residual.norm();
  model.rank = static_cast<int>((model.gamma.array() != Scalar(0)).count());
  if (compute_sigma) model.sigma_min = detail::smallest_singular_value(sys.directions);
  return model;
}

/// Taylor estimate of the target at `query` from the anchor's local model.
template <typename Scalar, typename DerivedA, typename DerivedQ>
Scalar taylor_predict(const BasicLocalModel<Scalar>& model,
                      const Eigen::MatrixBase<DerivedA>& anchor_x, Scalar anchor_y,
                      const Eigen::MatrixBase<DerivedQ>& query_x) {
  const Index d = model.gamma.size();
  if (anchor_x.size() != d || query_x.size() != d)
    throw DataError("Taylor prediction dimension mismatch");
  Scalar value = anchor_y;
  for (Index j = 0; j < d; ++j) {
    const Scalar step = static_cast<Scalar>(query_x(j)) - static_cast<Scalar>(anchor_x(j));
    value += model.gamma(j) * step;
    if (model.hess_diag) value += Scalar(0.5) * (*model.hess_diag)(j) * step * step;
  }
  return value;
}

}  // namespace dnnr
