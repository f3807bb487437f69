#include "dnnr/theory.hpp"

#include <cstdio>
#include <ostream>

namespace dnnr {

void BoundInputs::validate() const {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) throw ConfigError("lipschitz must be > 0");
  if (mu < 1) throw ConfigError("mu must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be > 0");
  if (!(y_range.second > y_range.first)) throw ConfigError("y_max must exceed y_min");
  if (!(ball_mass > 0.0 && ball_mass <= 1.0)) throw ConfigError("ball mass must lie in (0, 1]");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be finite and >= 0");
  if (n_train && !(*n_train >= 1)) throw ConfigError("n must be positive");
}

namespace {

constexpr long double kU64Max = 18446744073709551615.0L;

SampleCount make_count(long double rounded) {
  SampleCount c;
  c.value = rounded;
  if (rounded >= 0 && rounded <= kU64Max) c.exact = static_cast<std::uint64_t>(rounded);
  return c;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

double SampleCount::log10() const { return static_cast<double>(std::log10(value)); }

std::string SampleCount::str() const {
  if (exact) return std::to_string(*exact);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6Le", value);
  return buf;
}

SampleCount count_ceil(long double v) { return make_count(std::ceil(v)); }
SampleCount count_floor(long double v) { return make_count(std::floor(v)); }

std::optional<double> lemma1_bound(double sigma_min, double h_max, int mu, double lipschitz,
                                   std::span<const double> nu_l1_norms) {
  if (!(h_max > 0.0)) throw ConfigError("h_max must be > 0");
  if (mu < 1) throw ConfigError("mu must be at least 1");
  if (!(lipschitz > 0.0)) throw ConfigError("lipschitz must be > 0");
  if (nu_l1_norms.empty()) throw ConfigError("need at least one direction");
  double sum = 0.0;
  for (const double n1 : nu_l1_norms) {
    if (!(n1 >= 1.0 - 1e-12)) throw ConfigError("unit directions have l1 norm >= 1");
    sum += std::pow(n1, 2 * mu);
  }
  if (!(sigma_min > 0.0)) return std::nullopt;
  return lipschitz * std::pow(h_max, mu) / (sigma_min * factorial(mu + 1)) * std::sqrt(sum);
}

double eps_dnnr(double h, double lipschitz, double tau) { return h * h * lipschitz * (1.0 + tau); }

double eps_knn(double h, double lipschitz) { return 2.0 * lipschitz * h; }

BoundReport theorem1_conditions(const BoundInputs& in) {
  in.validate();
  BoundReport r;
  const long double p = in.ball_mass;
  // Natural logs; long double keeps the huge counts exact to ~19 digits.
  r.n_required = count_ceil(8.0L / p * std::log(2.0L / in.delta));
  const long double dy = static_cast<long double>(in.y_range.second) - in.y_range.first;
  const long double eps = in.epsilon;
  r.k_min = count_ceil(2.0L * dy * dy / (eps * eps) * std::log(4.0L / in.delta));
  const long double n = in.n_train ? *in.n_train : r.n_required.value;
  r.k_max = count_floor(0.5L * n * p);
  r.tau = in.tau;
  r.h_star_dnnr = std::sqrt(in.epsilon / (in.lipschitz * (1.0 + in.tau)));
  r.h_star_knn = in.epsilon / (2.0 * in.lipschitz);
  r.eps_dnnr = eps_dnnr(r.h_star_dnnr, in.lipschitz, in.tau);
  r.eps_knn = eps_knn(r.h_star_dnnr, in.lipschitz);
  r.sigma_min = in.sigma_min ? *in.sigma_min : std::numeric_limits<double>::quiet_NaN();
  r.feasible = r.k_min.value <= r.k_max.value && r.k_max.value >= 1;
  return r;
}

std::optional<double> anchor_tau(const LocalModel& model, int mu) {
  if (!(model.sigma_min > 0.0) || model.direction_l1.size() == 0) return std::nullopt;
  double sum = 0.0;
  for (Index i = 0; i < model.direction_l1.size(); ++i)
    sum += std::pow(model.direction_l1(i), 2 * mu);
  return std::sqrt(sum) / model.sigma_min;
}

namespace {

struct LocalTau {
  std::optional<double> tau;
  double sigma_sum = 0.0;
  Index sigma_count = 0;
  Index excluded_anchors = 0;
};

LocalTau local_tau(const DnnrModel& model, const NeighborSet& anchors, int mu) {
  LocalTau out;
  double sum = 0.0;
  Index used = 0;
  for (const Index m : anchors.indices) {
    const LocalModel& lm = model.local_model(m);
    const auto t = anchor_tau(lm, mu);
    if (!t) {
      ++out.excluded_anchors;
      continue;
    }
    sum += *t;
    out.sigma_sum += lm.sigma_min;
    ++out.sigma_count;
    ++used;
  }
  if (used > 0) out.tau = sum / static_cast<double>(used);
  return out;
}

}  // namespace

TauEstimate estimate_tau(const DnnrModel& model, const Matrix& sample_points, int mu) {
  if (sample_points.rows() == 0) throw ConfigError("no sample points");
  if (sample_points.cols() != model.data().dim()) throw DataError("sample dimension mismatch");
  TauEstimate est;
  double tau_sum = 0.0, sigma_sum = 0.0;
  Index sigma_count = 0;
  for (Index i = 0; i < sample_points.rows(); ++i) {
    const Vector x = sample_points.row(i).transpose();
    const auto lt = local_tau(model, model.index().query(x, model.config().k), mu);
    est.excluded_anchors += lt.excluded_anchors;
    sigma_sum += lt.sigma_sum;
    sigma_count += lt.sigma_count;
    if (!lt.tau) {
      ++est.excluded_points;
      continue;
    }
    tau_sum += *lt.tau;
    ++est.used_points;
  }
  if (est.used_points == 0)
    throw DataError("every sample point has rank-deficient gradient designs");
  est.tau = tau_sum / static_cast<double>(est.used_points);
  est.mean_sigma_min = sigma_sum / static_cast<double>(sigma_count);
  return est;
}

PointwiseTolerances pointwise_tolerances(const DnnrModel& model, const Matrix& test_points,
                                         double lipschitz, int mu) {
  if (!(lipschitz > 0.0)) throw ConfigError("lipschitz must be > 0");
  if (test_points.cols() != model.data().dim()) throw DataError("test dimension mismatch");
  PointwiseTolerances out;
  out.points.resize(static_cast<std::size_t>(test_points.rows()));
  for (Index i = 0; i < test_points.rows(); ++i) {
    const Vector x = test_points.row(i).transpose();
    const auto anchors = model.index().query(x, model.config().k);
    auto& pt = out.points[static_cast<std::size_t>(i)];
    pt.h = std::sqrt(anchors.distances.back());
    const auto lt = local_tau(model, anchors, mu);
    pt.eps_knn = eps_knn(pt.h, lipschitz);
    if (!lt.tau) {
      ++out.excluded;
      pt.tau_local = std::numeric_limits<double>::quiet_NaN();
      pt.eps_dnnr = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    pt.tau_local = *lt.tau;
    pt.eps_dnnr = eps_dnnr(pt.h, lipschitz, pt.tau_local);
    pt.valid = true;
  }
  if (test_points.rows() > 0 && out.excluded == test_points.rows())
    throw DataError("every test point has rank-deficient gradient designs");
  return out;
}

PointSampler uniform_cube_sampler(Index d) {
  if (d < 1) throw ConfigError("dimension must be positive");
  return [d](Rng& rng) {
    Vector x(d);
    for (Index j = 0; j < d; ++j) x(j) = rng.uniform();
    return x;
  };
}

BallMassEstimate ball_mass_estimate(const PointSampler& sampler, const Vector& center,
                                    double radius, Index n_mc, std::uint64_t seed) {
  if (n_mc < 1000) throw ConfigError("n_mc must be at least 1000");
  if (!(radius > 0.0)) throw ConfigError("radius must be > 0");
  Rng rng(seed);
  const double r2 = radius * radius;
  BallMassEstimate est;
  est.samples = n_mc;
  for (Index s = 0; s < n_mc; ++s) {
    const Vector x = sampler(rng);
    if (x.size() != center.size()) throw ConfigError("sampler dimension mismatch");
    if ((x - center).squaredNorm() <= r2) ++est.hits;
  }
  const double n = static_cast<double>(n_mc);
  est.mass = static_cast<double>(est.hits) / n;
  est.std_error = std::sqrt(est.mass * (1.0 - est.mass) / n);
  if (est.hits == 0)
    est.warning = "no samples fell inside the ball; sample-size condition is infeasible";
  return est;
}

double extrapolate_ball_mass(double mass_at_r0, double r0, double h, Index d) {
  if (!(mass_at_r0 > 0.0) || !(r0 > 0.0) || !(h > 0.0)) throw ConfigError("positive inputs required");
  return std::exp(std::log(mass_at_r0) + static_cast<double>(d) * std::log(h / r0));
}

double cube_mass(const Vector& center, double h) {
  double mass = 1.0;
  for (Index j = 0; j < center.size(); ++j)
    mass *= std::max(0.0, std::min(1.0, center(j) + h) - std::max(0.0, center(j) - h));
  return mass;
}

void write_tolerance_csv(std::ostream& out, const PointwiseTolerances& tolerances,
                         std::span<const double> abs_errors) {
  if (!abs_errors.empty() && abs_errors.size() != tolerances.points.size())
    throw ConfigError("one error per point required");
  const auto old = out.precision(17);
  out << "point_id,h,tau_local,eps_dnnr,eps_knn,abs_error\n";
  for (std::size_t i = 0; i < tolerances.points.size(); ++i) {
    const auto& p = tolerances.points[i];
    out << i << ',' << p.h << ',' << p.tau_local << ',' << p.eps_dnnr << ',' << p.eps_knn << ',';
    if (!abs_errors.empty()) out << abs_errors[i];
    out << '\n';
  }
  out.precision(old);
}

}  // namespace dnnr
