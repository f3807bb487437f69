#include "dnnr/inspect.hpp"

#include "dnnr/stats.hpp"

#include <numeric>
#include <ostream>

namespace dnnr {

double RelevanceSummary::median(Index d) const {
  return quantile(per_dimension.at(static_cast<std::size_t>(d)), 0.5);
}

std::vector<Index> rank_by_median(const std::vector<std::vector<double>>& per_dimension) {
  std::vector<double> medians;
  for (const auto& values : per_dimension) medians.push_back(quantile(values, 0.5));
  std::vector<Index> ranks(per_dimension.size());
  std::iota(ranks.begin(), ranks.end(), Index{0});
  std::stable_sort(ranks.begin(), ranks.end(), [&](Index a, Index b) {
    return medians[static_cast<std::size_t>(a)] > medians[static_cast<std::size_t>(b)];
  });
  return ranks;
}

RelevanceSummary collect_relevance(const DnnrModel& model, const Matrix& queries) {
  if (queries.rows() == 0) throw ConfigError("no queries to collect relevance from");
  const Index d = model.data().dim();
  if (queries.cols() != d) throw DataError("query dimension mismatch");
  RelevanceSummary summary;
  summary.per_dimension.resize(static_cast<std::size_t>(d));
  for (Index i = 0; i < queries.rows(); ++i) {
    const auto trace = model.predict_traced(queries.row(i).transpose());
    for (const auto& xi : trace.per_neighbor_relevance)
      for (Index j = 0; j < d; ++j) summary.per_dimension[static_cast<std::size_t>(j)].push_back(xi(j));
  }
  summary.dimension_ranks = rank_by_median(summary.per_dimension);
  return summary;
}

namespace {

void check_summary(const Dataset& data, const RelevanceSummary& summary) {
  if (summary.dim() != data.dim()) throw DataError("relevance summary dimension mismatch");
}

}  // namespace

Dataset select_variables(const Dataset& data, const RelevanceSummary& summary, Index keep) {
  check_summary(data, summary);
  if (keep < 1 || keep > data.dim()) throw ConfigError("keep must lie in [1, d]");
  std::vector<Index> cols(summary.dimension_ranks.begin(), summary.dimension_ranks.begin() + keep);
  std::sort(cols.begin(), cols.end());
  return data.select_columns(cols);
}

Dataset drop_variables(const Dataset& data, const RelevanceSummary& summary, Index count) {
  check_summary(data, summary);
  if (count < 0 || count >= data.dim()) throw ConfigError("must drop fewer than d columns");
  std::vector<Index> cols(summary.dimension_ranks.begin() + count, summary.dimension_ranks.end());
  std::sort(cols.begin(), cols.end());
  return data.select_columns(cols);
}

Json export_traces(std::span<const PredictionTrace> traces, ProjectionDims dims,
                   std::span<const double> actual) {
  if (!actual.empty() && actual.size() != traces.size())
    throw ConfigError("one actual target per trace required");
  const auto [a, b] = dims;
  if (a < 0 || b < 0 || a == b) throw ConfigError("projection dims must be two distinct columns");
  auto project = [&](const Vector& p) {
    if (a >= p.size() || b >= p.size()) throw ConfigError("projection dim out of range");
    return Json::array({p(a), p(b)});
  };
  Json out = Json::array();
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& tr = traces[t];
    Json doc = tr;
    doc["dims"] = Json::array({a, b});
    doc["query_projected"] = project(tr.query);
    if (!actual.empty()) {
      doc["actual"] = actual[t];
      doc["error"] = tr.clipped - actual[t];
    }
    for (std::size_t m = 0; m < tr.anchors.size(); ++m) {
      auto& rec = doc["anchors"][m];
      const auto& anchor = tr.anchors[m];
      rec["point_projected"] = project(anchor.point);
      Json fit = Json::array();
      for (const auto& p : anchor.fit_neighbor_points) fit.push_back(project(p));
      rec["fit_neighbors_projected"] = std::move(fit);
      if (!actual.empty()) rec["error"] = anchor.estimate - actual[t];
    }
    out.push_back(std::move(doc));
  }
  return out;
}

void write_relevance_csv(std::ostream& out, const RelevanceSummary& summary) {
  const auto old = out.precision(17);
  out << "dimension,count,median,p25,p75\n";
  for (std::size_t j = 0; j < summary.per_dimension.size(); ++j) {
    const auto& v = summary.per_dimension[j];
    out << j << ',' << v.size() << ',' << quantile(v, 0.5) << ',' << quantile(v, 0.25) << ','
        << quantile(v, 0.75) << '\n';
  }
  out.precision(old);
}

}  // namespace dnnr
