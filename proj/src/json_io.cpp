#include "dnnr/json_io.hpp"

namespace dnnr {

Json to_json_array(const Vector& v) {
  Json j = Json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw DataError("expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null())
      v(static_cast<Index>(i)) = std::numeric_limits<double>::quiet_NaN();
    else if (j[i].is_number())
      v(static_cast<Index>(i)) = j[i].get<double>();
    else
      throw DataError("expected a number in JSON array");
  }
  return v;
}

Json to_json_rows(const Matrix& m) {
  Json j = Json::array();
  for (Index r = 0; r < m.rows(); ++r) j.push_back(to_json_array(m.row(r).transpose()));
  return j;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw DataError("expected a JSON array of rows");
  if (j.empty()) return Matrix(0, 0);
  const Index cols = static_cast<Index>(j.front().size());
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from_json(j[r]);
    if (row.size() != cols) throw DataError("ragged JSON matrix");
    m.row(static_cast<Index>(r)) = row.transpose();
  }
  return m;
}

void to_json(Json& j, const ScalingWeights& w) { j = to_json_array(w.weights); }

void from_json(const Json& j, ScalingWeights& w) { w.weights = vector_from_json(j); }

void to_json(Json& j, const AnchorTrace& a) {
  j = Json{{"id", a.id},
           {"point", to_json_array(a.point)},
           {"target", a.target},
           {"gradient", to_json_array(a.gradient)},
           {"estimate", a.estimate},
           {"relevance", to_json_array(a.relevance)},
           {"fit_neighbor_ids", a.fit_neighbor_ids}};
  if (a.hess_diag) j["hess_diag"] = to_json_array(*a.hess_diag);
  Json pts = Json::array();
  for (const auto& p : a.fit_neighbor_points) pts.push_back(to_json_array(p));
  j["fit_neighbor_points"] = std::move(pts);
}

void from_json(const Json& j, AnchorTrace& a) {
  a.id = j.at("id").get<Index>();
  a.point = vector_from_json(j.at("point"));
  a.target = j.at("target").get<double>();
  a.gradient = vector_from_json(j.at("gradient"));
  a.estimate = j.at("estimate").get<double>();
  a.relevance = vector_from_json(j.at("relevance"));
  a.fit_neighbor_ids = j.at("fit_neighbor_ids").get<std::vector<Index>>();
  a.hess_diag.reset();
  if (j.contains("hess_diag")) a.hess_diag = vector_from_json(j.at("hess_diag"));
  a.fit_neighbor_points.clear();
  if (j.contains("fit_neighbor_points"))
    for (const auto& p : j.at("fit_neighbor_points")) a.fit_neighbor_points.push_back(vector_from_json(p));
}

void to_json(Json& j, const PredictionTrace& t) {
  Json rel = Json::array();
  for (const auto& r : t.per_neighbor_relevance) rel.push_back(to_json_array(r));
  j = Json{{"query", to_json_array(t.query)},
           {"neighbor_ids", t.neighbor_ids},
           {"per_neighbor_estimates", t.per_neighbor_estimates},
           {"per_neighbor_relevance", std::move(rel)},
           {"raw_mean", t.raw_mean},
           {"clipped", t.clipped},
           {"was_clipped", t.was_clipped},
           {"anchors", t.anchors}};
}

void from_json(const Json& j, PredictionTrace& t) {
  t.query = vector_from_json(j.at("query"));
  t.neighbor_ids = j.at("neighbor_ids").get<std::vector<Index>>();
  t.per_neighbor_estimates = j.at("per_neighbor_estimates").get<std::vector<double>>();
  t.per_neighbor_relevance.clear();
  for (const auto& r : j.at("per_neighbor_relevance"))
    t.per_neighbor_relevance.push_back(vector_from_json(r));
  t.raw_mean = j.at("raw_mean").get<double>();
  t.clipped = j.at("clipped").get<double>();
  t.was_clipped = j.at("was_clipped").get<bool>();
  t.anchors = j.at("anchors").get<std::vector<AnchorTrace>>();
}

}  // namespace dnnr
