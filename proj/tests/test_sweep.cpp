#include "dnnr/experiment.hpp"

#include <doctest.h>

using namespace dnnr;

namespace {

double mse_of(const std::vector<SweepRow>& rows, double value, Method m) {
  for (const auto& r : rows)
    if (r.value == value && r.method == m) return r.report.mean_mse;
  FAIL("missing sweep row");
  return 0.0;
}

}  // namespace

TEST_CASE("more samples lower the DNNR error") {
  const auto rows = run_friedman_sweep(SweepAxis::n_samples, {500, 5000}, {Method::dnnr}, 1);
  REQUIRE(rows.size() == 2);
  const double small = mse_of(rows, 500, Method::dnnr);
  const double large = mse_of(rows, 5000, Method::dnnr);
  MESSAGE("dnnr mse n=500 " << small << ", n=5000 " << large);
  CHECK(large < small);
}

TEST_CASE("noise raises the DNNR error but barely moves KNN") {
  const auto rows = run_friedman_sweep(SweepAxis::noise, {0, 1}, {Method::dnnr, Method::knn}, 2);
  REQUIRE(rows.size() == 4);
  const double knn0 = mse_of(rows, 0, Method::knn), knn1 = mse_of(rows, 1, Method::knn);
  const double dnnr0 = mse_of(rows, 0, Method::dnnr), dnnr1 = mse_of(rows, 1, Method::dnnr);
  MESSAGE("knn " << knn0 << " -> " << knn1 << ", dnnr " << dnnr0 << " -> " << dnnr1);
  CHECK(std::abs(knn1 - knn0) / knn0 < 0.5);
  CHECK(dnnr1 > dnnr0);
}

TEST_CASE("extra irrelevant features raise the DNNR error") {
  const auto rows = run_friedman_sweep(SweepAxis::n_features, {10, 30}, {Method::dnnr}, 3);
  REQUIRE(rows.size() == 2);
  const double narrow = mse_of(rows, 10, Method::dnnr);
  const double wide = mse_of(rows, 30, Method::dnnr);
  MESSAGE("dnnr mse d=10 " << narrow << ", d=30 " << wide);
  CHECK(wide > narrow);
}

TEST_CASE("sweep rejects invalid axis values") {
  CHECK_THROWS_AS(run_friedman_sweep(SweepAxis::n_features, {4}, {Method::knn}, 1), ConfigError);
  CHECK_THROWS_AS(run_friedman_sweep(SweepAxis::noise, {-1}, {Method::knn}, 1), ConfigError);
  CHECK_THROWS_AS(parse_axis("depth"), ConfigError);
  CHECK(axis_name(parse_axis("n_samples")) == "n_samples");
}
