#include "dnnr/inspect.hpp"

#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace dnnr;

namespace {

Dataset five_x0(Index n, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix x = testing::uniform_matrix(rng, n, 2);
  return Dataset(x, 5.0 * x.col(0), {"signal", "noise"});
}

DnnrModel model_for(const Dataset& data, Index k, Index k_prime) {
  DnnrConfig c;
  c.k = k;
  c.k_prime = k_prime;
  return DnnrModel(data, c, ScalingWeights::identity(data.dim()));
}

}  // namespace

TEST_CASE("a target depending on x0 only ranks x0 first") {
  const Dataset data = five_x0(300, 1);
  const auto model = model_for(data, 3, 6);
  Rng rng(2);
  const auto summary = collect_relevance(model, testing::uniform_matrix(rng, 100, 2));
  CHECK(summary.dim() == 2);
  CHECK(summary.per_dimension[0].size() == 300);
  CHECK(summary.dimension_ranks == std::vector<Index>{0, 1});
  CHECK(summary.median(0) > 100.0 * std::max(summary.median(1), 1e-300));

  const Dataset kept = select_variables(data, summary, 1);
  CHECK(kept.dim() == 1);
  CHECK(kept.column_names() == std::vector<std::string>{"signal"});
  CHECK(kept.rows() == data.rows());
  const Dataset dropped = drop_variables(data, summary, 1);
  CHECK(dropped.column_names() == std::vector<std::string>{"noise"});
}

TEST_CASE("constant targets give zero relevance everywhere") {
  Rng rng(3);
  const Dataset data(testing::uniform_matrix(rng, 50, 3), Vector::Constant(50, 1.0));
  const auto summary = collect_relevance(model_for(data, 2, 6), testing::uniform_matrix(rng, 20, 3));
  for (const auto& dim : summary.per_dimension)
    for (const double v : dim) CHECK(v == 0.0);
}

TEST_CASE("informative Friedman-1 dimensions outrank the noise dimensions") {
  const Dataset data = friedman1(3000, 10, 0.0, 4);
  const auto model = model_for(data, 3, 30);
  const Dataset queries = friedman1(300, 10, 0.0, 5);
  const auto summary = collect_relevance(model, queries.features());
  std::vector<Index> top(summary.dimension_ranks.begin(), summary.dimension_ranks.begin() + 5);
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<Index>{0, 1, 2, 3, 4});
  double min_informative = std::numeric_limits<double>::infinity();
  double max_noise = 0.0;
  for (Index j = 0; j < 5; ++j) min_informative = std::min(min_informative, summary.median(j));
  for (Index j = 5; j < 10; ++j) max_noise = std::max(max_noise, summary.median(j));
  CHECK(min_informative > max_noise);
}

TEST_CASE("selection bounds and identity") {
  const Dataset data = friedman1(200, 6, 0.0, 6);
  const auto model = model_for(data, 3, 12);
  const auto summary = collect_relevance(model, data.features().topRows(40));
  const Dataset same = select_variables(data, summary, 6);
  CHECK(same.features() == data.features());
  CHECK(same.column_names() == data.column_names());
  CHECK_THROWS_AS(select_variables(data, summary, 0), ConfigError);
  CHECK_THROWS_AS(select_variables(data, summary, 7), ConfigError);
  CHECK_THROWS_AS(collect_relevance(model, Matrix(0, 6)), ConfigError);
  CHECK_THROWS_AS(collect_relevance(model, Matrix::Zero(3, 5)), DataError);
}

TEST_CASE("selection then refit works for every keep") {
  const Dataset data = friedman1(200, 6, 0.3, 7);
  const auto summary = collect_relevance(model_for(data, 3, 12), data.features().topRows(30));
  for (Index keep = 1; keep <= 6; ++keep) {
    const Dataset sub = select_variables(data, summary, keep);
    CHECK(sub.rows() == 200);
    CHECK(sub.dim() == keep);
    CHECK_NOTHROW(model_for(sub, 3, 2 * keep).predict(Vector(sub.features().row(0))));
  }
}

TEST_CASE("relevance is unchanged by a constant shift of the targets") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset data = friedman1(150, 5, 0.5, rng.next());
    const double shift = 100.0 * rng.uniform() - 50.0;
    const Dataset shifted(data.features(), (data.targets().array() + shift).matrix());
    const Matrix q = testing::uniform_matrix(rng, 20, 5);
    const auto a = collect_relevance(model_for(data, 3, 10), q);
    const auto b = collect_relevance(model_for(shifted, 3, 10), q);
    for (Index j = 0; j < 5; ++j)
      for (std::size_t i = 0; i < a.per_dimension[static_cast<std::size_t>(j)].size(); ++i)
        CHECK(std::abs(a.per_dimension[static_cast<std::size_t>(j)][i] -
                       b.per_dimension[static_cast<std::size_t>(j)][i]) <=
              1e-9 * (1.0 + std::abs(a.per_dimension[static_cast<std::size_t>(j)][i])));
  }
}

TEST_CASE("rank_by_median breaks ties by dimension") {
  const std::vector<std::vector<double>> v{{1.0, 2.0}, {5.0}, {1.5, 1.5}, {5.0}};
  CHECK(rank_by_median(v) == std::vector<Index>{1, 3, 0, 2});
}

TEST_CASE("trace export shape") {
  CHECK(export_traces({}, {0, 1}).is_array());
  CHECK(export_traces({}, {0, 1}).empty());

  const Dataset data = friedman1(200, 5, 0.0, 9);
  const auto model = model_for(data, 3, 10);
  const Vector q = data.features().row(7);
  const std::vector<PredictionTrace> traces{model.predict_traced(q + Vector::Constant(5, 0.01))};
  const std::vector<double> actual{data.targets()(7)};
  const Json doc = export_traces(traces, {0, 3}, actual);
  REQUIRE(doc.size() == 1);
  const auto& t = doc[0];
  CHECK(t["anchors"].size() == 3);
  CHECK(t["dims"] == Json::array({0, 3}));
  CHECK(t["query_projected"][1].get<double>() == traces[0].query(3));
  for (const auto& a : t["anchors"]) {
    CHECK(a["fit_neighbors_projected"].size() == 10);
    CHECK(a["point_projected"].size() == 2);
    CHECK(a.contains("error"));
  }
  CHECK(t["error"].get<double>() == traces[0].clipped - actual[0]);

  CHECK_THROWS_AS(export_traces(traces, {0, 0}, actual), ConfigError);
  CHECK_THROWS_AS(export_traces(traces, {0, 5}, actual), ConfigError);
  CHECK_THROWS_AS(export_traces(traces, {-1, 2}, actual), ConfigError);
  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(export_traces(traces, {0, 1}, wrong), ConfigError);
}

TEST_CASE("exported traces round trip through text") {
  const Dataset data = friedman1(300, 6, 0.5, 10);
  DnnrConfig c;
  c.k = 4;
  c.k_prime = 24;
  c.order = 2;
  const DnnrModel model(data, c, ScalingWeights::identity(6));
  Rng rng(10);
  std::vector<PredictionTrace> traces;
  for (int t = 0; t < 25; ++t) traces.push_back(model.predict_traced(testing::uniform_vector(rng, 6)));
  const std::string text = export_traces(traces, {1, 2}).dump();
  const Json parsed = Json::parse(text);
  REQUIRE(parsed.size() == traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    double sum = 0.0;
    for (const auto& a : parsed[i]["anchors"]) sum += a["estimate"].get<double>();
    CHECK(std::abs(sum / 4.0 - parsed[i]["raw_mean"].get<double>()) <= 1e-12);

    const auto back = parsed[i].get<PredictionTrace>();
    const auto& orig = traces[i];
    CHECK(back.query == orig.query);
    CHECK(back.neighbor_ids == orig.neighbor_ids);
    CHECK(back.per_neighbor_estimates == orig.per_neighbor_estimates);
    CHECK(back.raw_mean == orig.raw_mean);
    CHECK(back.clipped == orig.clipped);
    CHECK(back.was_clipped == orig.was_clipped);
    REQUIRE(back.anchors.size() == orig.anchors.size());
    for (std::size_t m = 0; m < orig.anchors.size(); ++m) {
      CHECK(back.per_neighbor_relevance[m] == orig.per_neighbor_relevance[m]);
      CHECK(back.anchors[m].gradient == orig.anchors[m].gradient);
      REQUIRE(back.anchors[m].hess_diag.has_value());
      CHECK(*back.anchors[m].hess_diag == *orig.anchors[m].hess_diag);
      CHECK(back.anchors[m].point == orig.anchors[m].point);
      CHECK(back.anchors[m].fit_neighbor_points == orig.anchors[m].fit_neighbor_points);
      CHECK(back.anchors[m].estimate == orig.anchors[m].estimate);
    }
  }
}

TEST_CASE("relevance CSV layout") {
  RelevanceSummary s;
  s.per_dimension = {{1.0, 2.0, 3.0}, {0.0}};
  s.dimension_ranks = rank_by_median(s.per_dimension);
  std::ostringstream out;
  write_relevance_csv(out, s);
  CHECK(out.str() == "dimension,count,median,p25,p75\n0,3,2,1.5,2.5\n1,1,0,0,0\n");
}
