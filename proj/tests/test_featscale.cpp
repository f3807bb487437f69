#include "dnnr/featscale.hpp"
#include "dnnr/predictor.hpp"

#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace dnnr;

namespace {

std::vector<RowPair> oracle_pairs() {
  std::vector<RowPair> pairs;
  for (Index i = 0; i < 20; ++i) pairs.emplace_back(i, (7 * i + 3) % 300);
  return pairs;
}

// Target depends on x0 only; x1 is an irrelevant coordinate. A linear target
// would be fitted exactly, leaving only rounding noise in the errors.
Dataset x0_with_noise_dim(Index n, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix x = testing::uniform_matrix(rng, n, 2);
  return Dataset(x, x.col(0).array().square());
}

// sin(3 x0) + x1^2 with two irrelevant coordinates.
Dataset smooth_with_noise_dims(Index n, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix x = testing::uniform_matrix(rng, n, 4);
  const Vector y = (3.0 * x.col(0)).array().sin() + x.col(1).array().square();
  return Dataset(x, y);
}

double mean(const Vector& v, Index from, Index count) { return v.segment(from, count).mean(); }

}  // namespace

TEST_CASE("negative correlation examples") {
  const std::vector<double> d{1, 2, 3};
  const std::vector<double> e{2, 4, 6};
  const auto perfect = negative_correlation(d, e);
  CHECK(perfect.value == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_FALSE(perfect.degenerate);

  const std::vector<double> flat{5, 5, 5};
  const auto degenerate = negative_correlation(d, flat);
  CHECK(degenerate.value == 0.0);
  CHECK(degenerate.degenerate);
  CHECK(negative_correlation(flat, e).degenerate);

  const std::vector<double> two{1, 2};
  CHECK_THROWS_AS(negative_correlation(two, two), ConfigError);
  CHECK_THROWS_AS(negative_correlation(d, two), ConfigError);
}

TEST_CASE("pairwise objective matches the independent reference") {
  // Reference from a standalone least-squares and Pearson computation on the
  // same file: pairs (i, (7i + 3) mod 300), i < 20, k' = 20, identity weights.
  const Dataset data = load_csv(DNNR_TEST_DATA "/friedman1_300.csv", std::string("y"));
  REQUIRE(data.rows() == 300);
  const auto pairs = oracle_pairs();
  const auto value = pairwise_objective(ScalingWeights::identity(10), data, pairs, 20);
  CHECK_FALSE(value.degenerate);
  CHECK(std::abs(value.value - -0.26258774120062517) < 1e-10);
}

TEST_CASE("pairwise objective preconditions") {
  const Dataset data = friedman1(50, 5, 0.0, 1);
  const auto w = ScalingWeights::identity(5);
  const std::vector<RowPair> few{{0, 1}, {2, 3}};
  CHECK_THROWS_AS(pairwise_objective(w, data, few, 10), ConfigError);
  const std::vector<RowPair> self{{0, 1}, {2, 2}, {4, 5}};
  CHECK_THROWS_AS(pairwise_objective(w, data, self, 10), ConfigError);
  const std::vector<RowPair> range{{0, 1}, {2, 3}, {4, 50}};
  CHECK_THROWS_AS(pairwise_objective(w, data, range, 10), ConfigError);
}

TEST_CASE("analytic objective gradient matches central differences") {
  const Dataset data = load_csv(DNNR_TEST_DATA "/friedman1_300.csv", std::string("y"));
  const auto pairs = oracle_pairs();
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector w = testing::uniform_vector(rng, 10, 0.5, 1.5);
    const Vector g = pairwise_objective_gradient(ScalingWeights{w}, data, pairs, 20);
    const double h = 1e-6;
    for (Index j = 0; j < 10; ++j) {
      Vector up = w, down = w;
      up(j) += h;
      down(j) -= h;
      const double fd = (pairwise_objective(ScalingWeights{up}, data, pairs, 20).value -
                         pairwise_objective(ScalingWeights{down}, data, pairs, 20).value) /
                        (2.0 * h);
      CHECK(std::abs(fd - g(j)) <= 1e-6 + 1e-4 * std::abs(g(j)));
    }
  }
}

TEST_CASE("learned weights favour the informative Friedman-1 dimensions") {
  const Dataset data = friedman1(2000, 10, 0.0, 77);
  const auto report = train_weights(data, default_scale_config(10, 3));
  const Vector& w = report.final_weights.weights;
  MESSAGE("weights " << w.transpose() << " best epoch " << report.best_epoch);
  CHECK(mean(w, 0, 5) > mean(w, 5, 5));
}

TEST_CASE("an ignored dimension is shrunk") {
  const Dataset data = x0_with_noise_dim(600, 9);
  const auto report = train_weights(data, default_scale_config(2, 4));
  MESSAGE("weights " << report.weight_history.back().weights.transpose());
  CHECK(report.weight_history.back().weights(1) < 1.0);
  CHECK(report.final_weights.weights(1) < 1.0);
  // Downward trend: the noise weight never rises above its start.
  for (const auto& w : report.weight_history) CHECK(w.weights(1) <= 1.0);
}

TEST_CASE("zero learning rate keeps the identity") {
  const Dataset data = friedman1(300, 5, 0.5, 10);
  ScaleTrainConfig c = default_scale_config(5, 1);
  c.epochs = 1;
  c.learning_rate = 0.0;
  const auto report = train_weights(data, c);
  CHECK(report.final_weights.weights == Vector::Ones(5));
}

TEST_CASE("weights stay non-negative and the report is consistent") {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const Index d = testing::uniform_int(rng, 2, 6);
    const Dataset data = friedman1(400, std::max<Index>(d, 5), 1.0, rng.next());
    ScaleTrainConfig c = default_scale_config(data.dim(), rng.next());
    c.epochs = 4;
    c.learning_rate = 0.5;  // aggressive, to exercise the projection
    const auto report = train_weights(data, c);
    CHECK(report.weight_history.size() == 5);
    CHECK(report.validation_mse.size() == 5);
    CHECK(report.loss_history.size() == 4);
    for (const auto& w : report.weight_history) CHECK((w.weights.array() >= 0.0).all());
    const auto best = std::min_element(report.validation_mse.begin(), report.validation_mse.end());
    CHECK(report.best_epoch == best - report.validation_mse.begin());
    CHECK(report.final_weights.weights ==
          report.weight_history[static_cast<std::size_t>(report.best_epoch)].weights);
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  const Dataset data = friedman1(400, 6, 0.5, 13);
  const auto a = train_weights(data, default_scale_config(6, 21));
  const auto b = train_weights(data, default_scale_config(6, 21));
  CHECK(a.final_weights.weights == b.final_weights.weights);
  CHECK(a.loss_history == b.loss_history);
  const auto c = train_weights(data, default_scale_config(6, 22));
  CHECK(c.weight_history.back().weights != a.weight_history.back().weights);
}

TEST_CASE("training objective decreases or holds in most epochs") {
  const Dataset data = smooth_with_noise_dims(1000, 14);
  const auto report = train_weights(data, default_scale_config(4, 5));
  int ok = 0;
  for (std::size_t e = 1; e < report.loss_history.size(); ++e)
    if (report.loss_history[e] <= report.loss_history[e - 1] + 1e-12) ++ok;
  const double fraction = ok / static_cast<double>(report.loss_history.size() - 1);
  MESSAGE("non-increasing fraction " << fraction << ", weights "
                                     << report.weight_history.back().weights.transpose());
  CHECK(fraction >= 0.7);
}

TEST_CASE("identity weights reproduce plain KNN and LL") {
  const Dataset data = friedman1(300, 5, 0.5, 15);
  Rng rng(15);
  const Matrix q = testing::uniform_matrix(rng, 50, 5);
  ScaleTrainConfig c = default_scale_config(5, 1);
  c.epochs = 1;
  c.learning_rate = 0.0;
  const auto learned = train_weights(data, c).final_weights;
  const auto ones = ScalingWeights::identity(5);
  CHECK(fit_knn(data, 5, learned).predict(q) == fit_knn(data, 5, ones).predict(q));
  CHECK(fit_ll(data, 12, learned).predict(q) == fit_ll(data, 12, ones).predict(q));
}

TEST_CASE("train_weights preconditions") {
  const Dataset small = friedman1(30, 5, 0.0, 1);
  CHECK_THROWS_AS(train_weights(small, default_scale_config(5, 0)), DataError);
  const Dataset data = friedman1(400, 5, 0.0, 1);
  ScaleTrainConfig c = default_scale_config(5, 0);
  c.epochs = 0;
  CHECK_THROWS_AS(train_weights(data, c), ConfigError);
  c = default_scale_config(5, 0);
  c.batch_pairs = 2;
  CHECK_THROWS_AS(train_weights(data, c), ConfigError);
  c = default_scale_config(5, 0);
  c.val_fraction = 1.0;
  CHECK_THROWS_AS(train_weights(data, c), ConfigError);
  c = default_scale_config(5, 0);
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(train_weights(data, c), ConfigError);
}

TEST_CASE("loss history CSV layout") {
  const Dataset data = friedman1(300, 5, 0.5, 16);
  ScaleTrainConfig c = default_scale_config(5, 1);
  c.epochs = 2;
  const auto report = train_weights(data, c);
  std::ostringstream out;
  write_loss_history_csv(out, report);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,loss,validation_mse,w0,w1,w2,w3,w4");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
