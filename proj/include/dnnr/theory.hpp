#pragma once

#include "dnnr/predictor.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dnnr {

struct BoundInputs {
  double lipschitz = 1.0;  // bound on the Lipschitz constant of the first partials
  int mu = 1;              // Taylor order
  double delta = 0.05;
  double epsilon = 0.1;
  std::pair<double, double> y_range{0.0, 1.0};
  double ball_mass = 1.0;  // P(X in ball of radius h around x)
  double tau = 0.0;
  std::optional<double> sigma_min;      // carried into the report when known
  std::optional<long double> n_train;   // for k_max; defaults to n_required

  void validate() const;
};

/// Counts that may exceed 64 bits. `value` is already rounded; `exact` is
/// set when it fits in an unsigned 64-bit integer.
struct SampleCount {
  long double value = 0;
  std::optional<std::uint64_t> exact;

  double log10() const;
  std::string str() const;
};

SampleCount count_ceil(long double v);
SampleCount count_floor(long double v);

struct BoundReport {
  double h_star_dnnr = 0.0;
  double h_star_knn = 0.0;
  SampleCount n_required;
  SampleCount k_min;
  SampleCount k_max;
  // Tolerances evaluated at h_star_dnnr. eps_dnnr equals epsilon there;
  // eps_knn is what plain averaging guarantees at the same radius.
  double eps_dnnr = 0.0;
  double eps_knn = 0.0;
  double tau = 0.0;
  double sigma_min = 0.0;  // NaN when not supplied
  bool feasible = false;   // k_min <= k_max
};

// Gradient-error bound for the unit-normalised least-squares fit.
// nullopt when sigma_min <= 0 (the bound is undefined).
std::optional<double> lemma1_bound(double sigma_min, double h_max, int mu, double lipschitz,
                                   std::span<const double> nu_l1_norms);

BoundReport theorem1_conditions(const BoundInputs& inputs);

double eps_dnnr(double h, double lipschitz, double tau);
double eps_knn(double h, double lipschitz);

// sqrt(sum |nu_i|_1^(2 mu)) / sigma_min for one anchor; nullopt when sigma_min is 0.
std::optional<double> anchor_tau(const LocalModel& model, int mu = 1);

struct TauEstimate {
  double tau = 0.0;
  double mean_sigma_min = 0.0;
  Index used_points = 0;
  Index excluded_points = 0;   // every anchor rank-deficient
  Index excluded_anchors = 0;  // anchors with sigma_min = 0
};

/// Mean over sample points of the per-point value, itself the mean over the
/// point's k anchors of anchor_tau. Throws DataError if every point is excluded.
TauEstimate estimate_tau(const DnnrModel& model, const Matrix& sample_points, int mu = 1);

struct PointTolerance {
  double h = 0.0;  // distance to the k-th anchor in the model metric
  double tau_local = 0.0;
  double eps_dnnr = 0.0;
  double eps_knn = 0.0;
  bool valid = false;
};

struct PointwiseTolerances {
  std::vector<PointTolerance> points;
  Index excluded = 0;
};

PointwiseTolerances pointwise_tolerances(const DnnrModel& model, const Matrix& test_points,
                                         double lipschitz, int mu = 1);

using PointSampler = std::function<Vector(Rng&)>;

PointSampler uniform_cube_sampler(Index d);

struct BallMassEstimate {
  double mass = 0.0;
  double std_error = 0.0;  // binomial, sqrt(p (1 - p) / n)
  Index hits = 0;
  Index samples = 0;
  std::string warning;     // set on zero hits
};

BallMassEstimate ball_mass_estimate(const PointSampler& sampler, const Vector& center,
                                    double radius, Index n_mc, std::uint64_t seed);

// Mass at radius h from an estimate at r0 under the small-ball power law
// P(h) ~ P(r0) (h / r0)^d.
double extrapolate_ball_mass(double mass_at_r0, double r0, double h, Index d);

// Mass of the axis-aligned cube of half-width h inside [0, 1]^d.
double cube_mass(const Vector& center, double h);

void write_tolerance_csv(std::ostream& out, const PointwiseTolerances& tolerances,
                         std::span<const double> abs_errors);

}  // namespace dnnr
