#include "dnnr/predictor.hpp"

#include "support.hpp"

#include <doctest.h>

#include <thread>

using namespace dnnr;

namespace {

Dataset affine_1d(Index n) {
  Matrix x(n, 1);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
    y(i) = 2.0 * x(i, 0) + 1.0;
  }
  return Dataset(x, y);
}

Dataset random_affine(Rng& rng, Index n, Index d, Vector* coef = nullptr) {
  const Matrix x = testing::uniform_matrix(rng, n, d);
  const Vector c = testing::uniform_vector(rng, d, -2.0, 2.0);
  const Vector y = (x * c).array() + 0.5;
  if (coef) *coef = c;
  return Dataset(x, y);
}

DnnrConfig config(Index k, Index k_prime) {
  DnnrConfig c;
  c.k = k;
  c.k_prime = k_prime;
  return c;
}

}  // namespace

TEST_CASE("too few samples is an error") {
  Rng rng(1);
  const Dataset data = random_affine(rng, 4, 1);
  CHECK_THROWS_AS(fit_dnnr(data, config(4, 4)), DataError);
  CHECK_THROWS_AS(fit_dnnr(data, config(5, 2)), DataError);
  CHECK_NOTHROW(fit_dnnr(data, config(4, 3)));
}

TEST_CASE("invalid configurations are rejected") {
  Rng rng(1);
  const Dataset data = random_affine(rng, 30, 3);
  CHECK_THROWS_AS(fit_dnnr(data, config(0, 10)), ConfigError);
  CHECK_THROWS_AS(fit_dnnr(data, config(3, 2)), ConfigError);
  DnnrConfig second = config(3, 5);
  second.order = 2;
  CHECK_THROWS_AS(fit_dnnr(data, second), ConfigError);
  DnnrConfig lasso = config(3, 5);
  lasso.lasso_lambda = -0.1;
  CHECK_THROWS_AS(fit_dnnr(data, lasso), ConfigError);
  const auto model = fit_dnnr(data, config(3, 5));
  CHECK_THROWS_AS(model.predict(Vector(Vector::Zero(2))), DataError);
}

TEST_CASE("1-d affine data is predicted exactly at midpoints") {
  const Dataset data = affine_1d(50);
  const auto model = fit_dnnr(data, config(3, 4));
  for (Index i = 0; i + 1 < 50; ++i) {
    const double mid = 0.5 * (data.features()(i, 0) + data.features()(i + 1, 0));
    CHECK(std::abs(model.predict(Vector(Vector::Constant(1, mid))) - (2.0 * mid + 1.0)) < 1e-9);
  }
}

TEST_CASE("held-out Friedman-1 error with learned weights") {
  const Dataset train = friedman1(5000, 10, 0.0, 41);
  const Dataset test = friedman1(1000, 10, 0.0, 42);
  DnnrConfig c = config(3, 20);
  c.scaling = ScalingMode::learned;
  const auto model = fit_dnnr(train, c);
  const Vector pred = model.predict(test.features());
  const double mse = (pred - test.targets()).squaredNorm() / 1000.0;
  MESSAGE("held-out MSE " << mse);
  CHECK(mse <= 0.05);
}

TEST_CASE("constant targets give that constant everywhere") {
  Rng rng(3);
  const Matrix x = testing::uniform_matrix(rng, 40, 3);
  const Dataset data(x, Vector::Constant(40, -2.5));
  const auto model = fit_dnnr(data, config(4, 8));
  for (int t = 0; t < 20; ++t) CHECK(model.predict(testing::uniform_vector(rng, 3, -1.0, 2.0)) == -2.5);
}

TEST_CASE("raw means above the target range are clipped") {
  CHECK(clip_value(12.0, {0.0, 10.0}) == 10.0);
  CHECK(clip_value(-1.0, {0.0, 10.0}) == 0.0);
  CHECK(clip_value(4.0, {0.0, 10.0}) == 4.0);

  Matrix x(2, 1);
  x << 0, 1;
  Vector y(2);
  y << 0, 10;
  const Dataset data(x, y);
  const auto model = fit_dnnr(data, config(1, 1));
  const auto trace = model.predict_traced(Vector(Vector::Constant(1, 2.0)));
  CHECK(trace.raw_mean == doctest::Approx(20.0));
  CHECK(trace.clipped == 10.0);
  CHECK(trace.was_clipped);

  DnnrConfig open = config(1, 1);
  open.clip = false;
  CHECK(fit_dnnr(data, open).predict(Vector(Vector::Constant(1, 2.0))) == doctest::Approx(20.0));
}

TEST_CASE("two-point dataset, k = 2, k' = 1") {
  Matrix x(2, 1);
  x << 0, 1;
  Vector y(2);
  y << 0, 1;
  const auto model = fit_dnnr(Dataset(x, y), config(2, 1));
  CHECK(model.predict(Vector(Vector::Constant(1, 0.5))) == doctest::Approx(0.5).epsilon(1e-14));
  const auto trace = model.predict_traced(Vector(Vector::Constant(1, 0.5)));
  REQUIRE(trace.per_neighbor_estimates.size() == 2);
  CHECK(trace.per_neighbor_estimates[0] == doctest::Approx(0.5));
  CHECK(trace.per_neighbor_estimates[1] == doctest::Approx(0.5));
}

TEST_CASE("relevance is the absolute element-wise product") {
  // y = 3 x0 - x1 sampled so the anchor at the origin fits gradient (3, -1).
  Matrix x(4, 2);
  x << 0, 0, 0.1, 0, 0, 0.1, 0.1, 0.1;
  const Vector y = 3.0 * x.col(0) - x.col(1);
  DnnrConfig c = config(1, 3);
  c.clip = false;
  const auto model = fit_dnnr(Dataset(x, y), c);
  Vector q(2);
  q << 1, 2;
  const auto trace = model.predict_traced(q);
  const Index anchor = trace.neighbor_ids[0];
  const Vector xm = x.row(anchor);
  const Vector expected = ((q - xm).array() * model.gradient(anchor).array()).abs().matrix();
  CHECK((trace.per_neighbor_relevance[0] - expected).norm() < 1e-12);

  // The hand example: x = (1, 2), x_m = (0, 0), gradient (3, -1).
  const Vector origin_gradient = model.gradient(0);
  CHECK(origin_gradient(0) == doctest::Approx(3.0));
  CHECK(origin_gradient(1) == doctest::Approx(-1.0));
  const Vector xi = ((q - Vector(x.row(0))).array() * origin_gradient.array()).abs();
  CHECK(xi(0) == doctest::Approx(3.0));
  CHECK(xi(1) == doctest::Approx(2.0));
}

TEST_CASE("a query at a training row with k = 1 has zero relevance and returns its target") {
  const Dataset data = friedman1(200, 5, 0.3, 6);
  const auto model = fit_dnnr(data, config(1, 12));
  for (Index i = 0; i < 200; i += 13) {
    const auto trace = model.predict_traced(data.features().row(i));
    CHECK(trace.neighbor_ids[0] == i);
    CHECK(trace.per_neighbor_relevance[0].norm() == 0.0);
    CHECK(trace.clipped == data.targets()(i));
  }
}

TEST_CASE("trace agrees with predict on random queries") {
  Rng rng(7);
  const Dataset data = friedman1(300, 6, 0.5, 7);
  const auto model = fit_dnnr(data, config(4, 15));
  for (int t = 0; t < 100; ++t) {
    const Vector q = testing::uniform_vector(rng, 6);
    const auto trace = model.predict_traced(q);
    CHECK(trace.neighbor_ids.size() == 4);
    CHECK(trace.anchors.size() == 4);
    double sum = 0.0;
    for (const double e : trace.per_neighbor_estimates) sum += e;
    CHECK(std::abs(trace.raw_mean - sum / 4.0) <= 1e-12);
    CHECK(trace.clipped == model.predict(q));
    CHECK(trace.clipped >= data.target_bounds().first);
    CHECK(trace.clipped <= data.target_bounds().second);
    for (const auto& a : trace.anchors) CHECK(a.fit_neighbor_ids.size() == 15);
  }
}

TEST_CASE("KNN examples") {
  Matrix x(3, 1);
  x << 0, 1, 3;
  Vector y(3);
  y << 1, 2, 3;
  const Dataset data(x, y);
  const auto ones = ScalingWeights::identity(1);
  CHECK(fit_knn(data, 3, ones).predict(Vector(Vector::Constant(1, 10.0))) == doctest::Approx(2.0));
  CHECK(fit_knn(data, 2, ones).predict(Vector(Vector::Constant(1, -0.5))) == doctest::Approx(1.5));
  for (Index i = 0; i < 3; ++i)
    CHECK(fit_knn(data, 1, ones).predict(Vector(Vector::Constant(1, x(i, 0)))) == y(i));
  CHECK_THROWS_AS(fit_knn(data, 0, ones), ConfigError);
  CHECK_THROWS_AS(fit_knn(data, 4, ones), ConfigError);
}

TEST_CASE("LL examples") {
  Rng rng(8);
  Vector c;
  const Dataset data = random_affine(rng, 80, 3, &c);
  const auto ll = fit_ll(data, 8, ScalingWeights::identity(3));
  for (int t = 0; t < 20; ++t) {
    const Vector q = testing::uniform_vector(rng, 3, 0.2, 0.8);
    CHECK(std::abs(ll.predict(q) - (q.dot(c) + 0.5)) < 1e-9);
  }

  const Dataset flat(testing::uniform_matrix(rng, 30, 2), Vector::Constant(30, 4.0));
  CHECK(fit_ll(flat, 5, ScalingWeights::identity(2)).predict(Vector(Vector::Constant(2, 0.3))) ==
        doctest::Approx(4.0));

  // y = x^2 on a grid symmetric about the query 0.
  Matrix x(7, 1);
  x << -3, -2, -1, 0, 1, 2, 3;
  x /= 10.0;
  const Vector y = x.array().square();
  const auto quad = fit_ll(Dataset(x, y), 5, ScalingWeights::identity(1), false);
  // Neighbourhood {-0.2, ..., 0.2}: direct OLS slope is 0, so the fit is the mean.
  CHECK(quad.predict(Vector(Vector::Zero(1))) == doctest::Approx((0.04 + 0.01 + 0 + 0.01 + 0.04) / 5.0));

  CHECK_THROWS_AS(fit_ll(flat, 2, ScalingWeights::identity(2)), ConfigError);
}

TEST_CASE("affine ground truth: DNNR and LL exact, KNN not") {
  Rng rng(9);
  Vector c;
  const Dataset train = random_affine(rng, 300, 4, &c);
  const auto w = ScalingWeights::identity(4);
  const auto dnnr = fit_dnnr(train, config(3, 10), w);
  const auto ll = fit_ll(train, 10, w);
  const auto knn = fit_knn(train, 3, w);
  double e_dnnr = 0, e_ll = 0, e_knn = 0;
  for (int t = 0; t < 200; ++t) {
    const Vector q = testing::uniform_vector(rng, 4, 0.1, 0.9);
    const double truth = q.dot(c) + 0.5;
    e_dnnr += std::pow(dnnr.predict(q) - truth, 2);
    e_ll += std::pow(ll.predict(q) - truth, 2);
    e_knn += std::pow(knn.predict(q) - truth, 2);
  }
  CHECK(e_dnnr / 200 < 1e-18);
  CHECK(e_ll / 200 < 1e-18);
  CHECK(e_knn / 200 > 1e-4);
}

TEST_CASE("zero gradients reduce DNNR to KNN bit for bit") {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = testing::uniform_int(rng, 1, 8);
    const Dataset data = friedman1(200, std::max<Index>(d, 5), 1.0, rng.next());
    const Index dd = data.dim();
    const Index k = testing::uniform_int(rng, 1, 10);
    ScalingWeights w{testing::uniform_vector(rng, dd, 0.2, 2.0)};
    DnnrConfig c = config(k, 2 * dd);
    c.zero_gradient = true;
    const auto dnnr = fit_dnnr(data, c, w);
    const auto knn = fit_knn(data, k, w);
    for (int t = 0; t < 50; ++t) {
      const Vector q = testing::uniform_vector(rng, dd);
      CHECK(dnnr.predict(q) == knn.predict(q));
    }
  }
}

TEST_CASE("clipping is idempotent") {
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    const double lo = 10.0 * rng.uniform() - 5.0;
    const double hi = lo + 5.0 * rng.uniform();
    const double v = 30.0 * rng.uniform() - 15.0;
    const double once = clip_value(v, {lo, hi});
    CHECK(clip_value(once, {lo, hi}) == once);
    CHECK(once >= lo);
    CHECK(once <= hi);
  }
}

TEST_CASE("predictions are deterministic across independently fitted models") {
  const Dataset data = friedman1(400, 8, 0.5, 12);
  Rng rng(12);
  const Matrix q = testing::uniform_matrix(rng, 50, 8);
  for (const int order : {1, 2}) {
    DnnrConfig c = config(3, 2 * 8 * order);
    c.order = order;
    const Vector a = fit_dnnr(data, c).predict(q);
    const Vector b = fit_dnnr(data, c).predict(q);
    CHECK(a == b);
  }
  DnnrConfig lasso = config(3, 20);
  lasso.lasso_lambda = 0.01;
  CHECK(fit_dnnr(data, lasso).predict(q) == fit_dnnr(data, lasso).predict(q));
}

TEST_CASE("with_k shares fitted anchors and matches a fresh model") {
  const Dataset data = friedman1(300, 5, 0.2, 13);
  Rng rng(13);
  const Matrix q = testing::uniform_matrix(rng, 30, 5);
  const auto base = fit_dnnr(data, config(2, 12));
  (void)base.predict(q);
  const auto wider = base.with_k(5);
  CHECK(wider.predict(q) == fit_dnnr(data, config(5, 12)).predict(q));
  CHECK_THROWS_AS(base.with_k(0), ConfigError);
}

TEST_CASE("concurrent first use of the anchor cache is safe and consistent") {
  const Dataset data = friedman1(600, 6, 0.3, 14);
  Rng rng(14);
  const Matrix q = testing::uniform_matrix(rng, 400, 6);
  const Vector expected = fit_dnnr(data, config(4, 14)).predict(q);
  const auto shared = fit_dnnr(data, config(4, 14));
  const int threads = 8;
  std::vector<Vector> results(threads, Vector(400));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (Index i = 0; i < 400; ++i) results[static_cast<std::size_t>(t)](i) = shared.predict(Vector(q.row(i)));
    });
  for (auto& th : pool) th.join();
  for (const auto& r : results) CHECK(r == expected);
}

TEST_CASE("second order model is exact on separable quadratics") {
  Rng rng(15);
  const Matrix x = testing::uniform_matrix(rng, 200, 2, -1.0, 1.0);
  Vector y(200);
  for (Index i = 0; i < 200; ++i) y(i) = x(i, 0) * x(i, 0) - 2.0 * x(i, 1) * x(i, 1) + x(i, 0);
  DnnrConfig c = config(3, 8);
  c.order = 2;
  c.clip = false;
  const auto model = fit_dnnr(Dataset(x, y), c);
  for (int t = 0; t < 20; ++t) {
    const Vector q = testing::uniform_vector(rng, 2, -0.8, 0.8);
    CHECK(model.predict(q) == doctest::Approx(q(0) * q(0) - 2.0 * q(1) * q(1) + q(0)).epsilon(1e-8));
  }
}
