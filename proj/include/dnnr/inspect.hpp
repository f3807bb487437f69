#pragma once

#include "dnnr/json_io.hpp"
#include "dnnr/predictor.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace dnnr {

struct RelevanceSummary {
  std::vector<std::vector<double>> per_dimension;  // pooled |(x - x_m) * gradient| values
  std::vector<Index> dimension_ranks;              // most relevant first, by median

  Index dim() const { return static_cast<Index>(per_dimension.size()); }
  double median(Index dim) const;
};

// Ranks dimensions by median pooled relevance; ties keep the lower index first.
std::vector<Index> rank_by_median(const std::vector<std::vector<double>>& per_dimension);

/// One relevance vector per (query, anchor) pair.
RelevanceSummary collect_relevance(const DnnrModel& model, const Matrix& queries);

/// Keeps the `keep` top-ranked columns, in their original order.
Dataset select_variables(const Dataset& data, const RelevanceSummary& summary, Index keep);

/// Removes the `count` top-ranked columns.
Dataset drop_variables(const Dataset& data, const RelevanceSummary& summary, Index count);

using ProjectionDims = std::pair<Index, Index>;

/// JSON array, one object per trace: query, anchors and gradient-fit
/// neighbours with 2-d projections onto `dims`, estimates, and errors when
/// the true targets are given.
Json export_traces(std::span<const PredictionTrace> traces, ProjectionDims dims,
                   std::span<const double> actual = {});

void write_relevance_csv(std::ostream& out, const RelevanceSummary& summary);

}  // namespace dnnr
