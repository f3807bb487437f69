#pragma once

#include "dnnr/common.hpp"

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

namespace dnnr {

/// Per-dimension multipliers w_j of the metric sum_j w_j^2 (a_j - b_j)^2.
///
/// Stored as the multipliers themselves; the diagonal of the metric matrix
/// is their square. All-ones reproduces squared Euclidean distance.
struct ScalingWeights {
  Vector weights;

  static ScalingWeights identity(Index d) { return {Vector::Ones(d)}; }

  Index dim() const { return weights.size(); }

  void validate(Index d) const {
    if (weights.size() != d) throw ConfigError("scaling weights have wrong dimension");
    if (!weights.allFinite() || (weights.array() < 0.0).any())
      throw ConfigError("scaling weights must be finite and non-negative");
  }
};

/// k nearest rows, closest first. `distances` holds the squared weighted
/// metric; equal distances are ordered by row id.
struct NeighborSet {
  std::vector<Index> indices;
  std::vector<double> distances;

  std::size_t size() const { return indices.size(); }
};

template <typename Scalar>
class BasicNeighborIndex {
public:
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // Above this dimension the tree prunes too little to pay for itself.
  static constexpr Index kBruteForceDim = 20;
  static constexpr Index kLeafSize = 16;

  BasicNeighborIndex() = default;

  template <typename Derived>
  BasicNeighborIndex(const Eigen::MatrixBase<Derived>& features, const ScalingWeights& weights)
      : weights_(weights.weights.template cast<Scalar>()) {
    if (features.rows() < 1) throw DataError("cannot index an empty matrix");
    weights.validate(features.cols());
    points_ = features.template cast<Scalar>();
    for (Index i = 0; i < points_.rows(); ++i)
      points_.row(i).array() *= weights_.transpose().array();
    if (points_.cols() <= kBruteForceDim) build_tree();
  }

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  bool uses_tree() const { return !nodes_.empty(); }

  const MatrixType& points() const { return points_; }
  const VectorType& weights() const { return weights_; }

  template <typename Derived>
  VectorType transform(const Eigen::MatrixBase<Derived>& x) const {
    VectorType out(x.size());
    for (Index j = 0; j < x.size(); ++j) out(j) = static_cast<Scalar>(x(j)) * weights_(j);
    return out;
  }

  /// The k rows nearest to x (given in the original, unweighted space).
  template <typename Derived>
  NeighborSet query(const Eigen::MatrixBase<Derived>& x, Index k,
                    std::span<const Index> exclude = {}) const {
    if (x.size() != dim()) throw DataError("query dimension does not match the index");
    const VectorType q = transform(x);
    return search(q.data(), k, exclude);
  }

  /// Neighbours of a stored row, in index space.
  NeighborSet query_row(Index row, Index k, std::span<const Index> exclude = {}) const {
    if (row < 0 || row >= size()) throw ConfigError("row id out of range");
    return search(points_.row(row).data(), k, exclude);
  }

  // Squared weighted distance between a query point and a stored row.
  template <typename Derived>
  Scalar distance_to_row(const Eigen::MatrixBase<Derived>& x, Index row) const {
    return (transform(x).transpose() - points_.row(row)).squaredNorm();
  }

private:
  struct Node {
    Index begin = 0, end = 0;
    Index left = -1, right = -1;
  };

  using Candidate = std::pair<Scalar, Index>;

  void build_tree() {
    const Index n = points_.rows();
    order_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order_[static_cast<std::size_t>(i)] = i;
    nodes_.reserve(static_cast<std::size_t>(2 * n / kLeafSize + 2));
    build_node(0, n);
  }

  Index build_node(Index begin, Index end) {
    const Index id = static_cast<Index>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1});
    const Index d = dim();
    VectorType lo = VectorType::Constant(d, std::numeric_limits<Scalar>::max());
    VectorType hi = VectorType::Constant(d, std::numeric_limits<Scalar>::lowest());
    for (Index p = begin; p < end; ++p) {
      const auto row = points_.row(order_[static_cast<std::size_t>(p)]);
      lo = lo.cwiseMin(row.transpose());
      hi = hi.cwiseMax(row.transpose());
    }
    box_lo_.push_back(lo);
    box_hi_.push_back(hi);
    if (end - begin <= kLeafSize) return id;

    Index axis;
    const Scalar spread = (hi - lo).maxCoeff(&axis);
    if (!(spread > Scalar(0))) return id;  // all points identical

    const Index mid = begin + (end - begin) / 2;
    auto first = order_.begin() + begin;
    std::nth_element(first, order_.begin() + mid, order_.begin() + end,
                     [&](Index a, Index b) { return points_(a, axis) < points_(b, axis); });
    const Index left = build_node(begin, mid);
    const Index right = build_node(mid, end);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  static bool excluded(Index row, std::span<const Index> exclude) {
    return std::find(exclude.begin(), exclude.end(), row) != exclude.end();
  }

  Scalar row_distance(const Scalar* q, Index row) const {
    const Scalar* p = points_.row(row).data();
    Scalar acc(0);
    for (Index j = 0; j < dim(); ++j) {
      const Scalar diff = q[j] - p[j];
      acc += diff * diff;
    }
    return acc;
  }

  Scalar box_distance(const Scalar* q, Index node) const {
    const auto& lo = box_lo_[static_cast<std::size_t>(node)];
    const auto& hi = box_hi_[static_cast<std::size_t>(node)];
    Scalar acc(0);
    for (Index j = 0; j < dim(); ++j) {
      Scalar diff(0);
      if (q[j] < lo(j))
        diff = lo(j) - q[j];
      else if (q[j] > hi(j))
        diff = q[j] - hi(j);
      acc += diff * diff;
    }
    return acc;
  }

  static void offer(std::vector<Candidate>& heap, Index k, Candidate c) {
    if (static_cast<Index>(heap.size()) < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end());
    } else if (c < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  void descend(const Scalar* q, Index node, Index k, std::span<const Index> exclude,
               std::vector<Candidate>& heap) const {
    const Node& nd = nodes_[static_cast<std::size_t>(node)];
    if (nd.left < 0) {
      for (Index p = nd.begin; p < nd.end; ++p) {
        const Index row = order_[static_cast<std::size_t>(p)];
        if (!excluded(row, exclude)) offer(heap, k, {row_distance(q, row), row});
      }
      return;
    }
    Scalar dl = box_distance(q, nd.left);
    Scalar dr = box_distance(q, nd.right);
    Index near = nd.left, far = nd.right;
    if (dr < dl) {
      std::swap(near, far);
      std::swap(dl, dr);
    }
    // Equal bounds are still visited: a lower row id may tie the current worst.
    if (static_cast<Index>(heap.size()) < k || !(dl > heap.front().first))
      descend(q, near, k, exclude, heap);
    if (static_cast<Index>(heap.size()) < k || !(dr > heap.front().first))
      descend(q, far, k, exclude, heap);
  }

  NeighborSet search(const Scalar* q, Index k, std::span<const Index> exclude) const {
    Index available = size();
    for (std::size_t e = 0; e < exclude.size(); ++e) {
      const Index row = exclude[e];
      if (row >= 0 && row < size() &&
          std::find(exclude.begin(), exclude.begin() + static_cast<std::ptrdiff_t>(e), row) ==
              exclude.begin() + static_cast<std::ptrdiff_t>(e))
        --available;
    }
    if (k < 1 || k > available)
      throw ConfigError("neighbour count " + std::to_string(k) + " outside [1, " +
                        std::to_string(available) + "]");

    std::vector<Candidate> heap;
    heap.reserve(static_cast<std::size_t>(k));
    if (uses_tree()) {
      descend(q, 0, k, exclude, heap);
    } else {
      for (Index row = 0; row < size(); ++row)
        if (!excluded(row, exclude)) offer(heap, k, {row_distance(q, row), row});
    }
    std::sort_heap(heap.begin(), heap.end());
    NeighborSet out;
    out.indices.reserve(heap.size());
    out.distances.reserve(heap.size());
    for (const auto& [dist, row] : heap) {
      out.indices.push_back(row);
      out.distances.push_back(static_cast<double>(dist));
    }
    return out;
  }

  VectorType weights_;
  MatrixType points_;
  std::vector<Node> nodes_;
  std::vector<Index> order_;
  std::vector<VectorType> box_lo_, box_hi_;
};

using NeighborIndex = BasicNeighborIndex<double>;

inline NeighborIndex build_index(const Matrix& features, const ScalingWeights& weights) {
  return NeighborIndex(features, weights);
}

}  // namespace dnnr
