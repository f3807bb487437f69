#include "dnnr/experiment.hpp"

#include "dnnr/stats.hpp"

#include <chrono>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace dnnr {

namespace {

struct MethodInfo {
  Method method;
  const char* name;
  bool learns_weights;
};

constexpr MethodInfo kMethods[] = {
    {Method::dnnr, "dnnr", true},
    {Method::dnnr2, "dnnr2", true},
    {Method::dnnr_lasso, "dnnr-lasso", true},
    {Method::dnnr_unscaled, "dnnr-unscaled", false},
    {Method::knn, "knn", false},
    {Method::knn_scaled, "knn-scaled", true},
    {Method::ll, "ll", false},
    {Method::ll_scaled, "ll-scaled", true},
};

const MethodInfo& info(Method m) {
  for (const auto& i : kMethods)
    if (i.method == m) return i;
  throw ConfigError("unknown method");
}

bool is_dnnr(Method m) {
  return m == Method::dnnr || m == Method::dnnr2 || m == Method::dnnr_lasso ||
         m == Method::dnnr_unscaled;
}

bool is_knn(Method m) { return m == Method::knn || m == Method::knn_scaled; }

// Methods whose name fixes the metric.
bool metric_fixed(Method m) {
  return m == Method::dnnr_unscaled || m == Method::knn || m == Method::knn_scaled ||
         m == Method::ll || m == Method::ll_scaled;
}

Index as_count(const Hyperparameters& hp, const std::string& key) {
  return static_cast<Index>(std::llround(hp.at(key)));
}

DnnrConfig dnnr_config(Method m, const Hyperparameters& hp) {
  DnnrConfig c;
  c.k = as_count(hp, "k");
  c.k_prime = as_count(hp, "k_prime");
  if (m == Method::dnnr2) c.order = 2;
  if (m == Method::dnnr_lasso) c.lasso_lambda = hp.at("lambda");
  return c;
}

bool cell_feasible(Method m, const Hyperparameters& hp, Index n, Index d) {
  if (is_dnnr(m)) {
    const Index k = as_count(hp, "k"), kp = as_count(hp, "k_prime");
    const Index order = m == Method::dnnr2 ? 2 : 1;
    return k >= 1 && kp >= d * order && n >= k && n > kp;
  }
  if (is_knn(m)) {
    const Index k = as_count(hp, "k");
    return k >= 1 && k <= n;
  }
  const Index kr = as_count(hp, "k_region");
  return kr >= d + 1 && kr <= n;
}

std::vector<double> as_doubles(std::initializer_list<double> v) { return v; }

std::vector<double> to_doubles(const std::vector<Index>& v) {
  return std::vector<double>(v.begin(), v.end());
}

std::vector<Index> map_rows(std::span<const Index> outer, std::span<const Index> inner) {
  std::vector<Index> out;
  out.reserve(inner.size());
  for (const Index i : inner) out.push_back(outer[static_cast<std::size_t>(i)]);
  return out;
}

void observe(const ExperimentConfig& c, std::string_view stage, int fold,
             std::span<const Index> rows) {
  if (c.observer) c.observer(stage, fold, rows);
}

Hyperparameters most_frequent(const std::vector<Hyperparameters>& all) {
  std::size_t best = 0;
  long best_count = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const long count = std::count(all.begin(), all.end(), all[i]);
    if (count > best_count) {
      best = i;
      best_count = count;
    }
  }
  return all.empty() ? Hyperparameters{} : all[best];
}

Grid merged_grid(Method m, const Grid& user, Index n, Index d) {
  Grid grid = default_grid(m, n, d);
  for (const auto& [key, values] : user) grid[key] = values;
  validate_grid(m, grid);
  return grid;
}

}  // namespace

Method parse_method(std::string_view name) {
  for (const auto& i : kMethods)
    if (name == i.name) return i.method;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string method_name(Method m) { return info(m).name; }

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> v;
    for (const auto& i : kMethods) v.push_back(i.method);
    return v;
  }();
  return methods;
}

bool method_learns_weights(Method m) { return info(m).learns_weights; }

std::vector<std::string> grid_keys(Method m) {
  if (m == Method::dnnr_lasso) return {"k", "k_prime", "lambda"};
  if (is_dnnr(m)) return {"k", "k_prime"};
  if (is_knn(m)) return {"k"};
  return {"k_region"};
}

Dataset load_source(const DatasetSource& source, std::uint64_t seed) {
  if (const auto* csv = std::get_if<CsvSource>(&source)) return load_csv(csv->path, csv->target);
  const auto& f = std::get<Friedman1Spec>(source);
  return friedman1(f.n_samples, f.n_features, f.noise, derive_seed(seed, 0xF1));
}

bool ExperimentConfig::learns_weights() const {
  return scale_features.value_or(method_learns_weights(method));
}

namespace {

void check_grid_values(const std::string& key, const std::vector<double>& values) {
  for (const double v : values) {
    if (!std::isfinite(v)) throw ConfigError("grid values must be finite");
    if (key == "lambda") {
      if (v < 0.0) throw ConfigError("lambda must be >= 0");
    } else if (v < 1.0 || v != std::floor(v)) {
      throw ConfigError("grid key '" + key + "' takes positive integers");
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (folds < 2) throw ConfigError("at least 2 folds required");
  if (scale_features && metric_fixed(method) && *scale_features != method_learns_weights(method))
    throw ConfigError("scale_features conflicts with method " + method_name(method));
  for (const auto& [key, values] : grid) {
    const auto keys = grid_keys(method);
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("grid key '" + key + "' is not valid for " + method_name(method));
    if (values.empty()) throw ConfigError("grid key '" + key + "' has no values");
    check_grid_values(key, values);
  }
  if (scale_train) scale_train->validate();
}

KPrimeGrid sample_kprime_grid(Index d, double lower, double upper, int count) {
  if (d < 1) throw ConfigError("dimension must be positive");
  if (!(lower >= 1.0)) throw ConfigError("lower bound must be >= 1");
  if (!(upper > lower)) throw ConfigError("upper bound must exceed lower bound");
  if (count < 1) throw ConfigError("count must be positive");
  const double dd = static_cast<double>(d);
  const Index lo = std::max<Index>(d, static_cast<Index>(std::ceil(lower * dd - 1e-9)));
  const Index hi = static_cast<Index>(std::floor(upper * dd + 1e-9));
  KPrimeGrid out;
  if (hi < lo) {
    out.values.push_back(lo);
    out.warning = "k' range is empty; using its lower end";
    return out;
  }
  if (count == 1) {
    out.values.push_back((lo + hi) / 2);
    return out;
  }
  const Index available = hi - lo + 1;
  if (available < count) {
    for (Index v = lo; v <= hi; ++v) out.values.push_back(v);
    out.warning = "k' range [" + std::to_string(lo) + ", " + std::to_string(hi) + "] holds only " +
                  std::to_string(available) + " distinct values, asked for " +
                  std::to_string(count);
    return out;
  }
  const double step = static_cast<double>(hi - lo) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) {
    const auto v = static_cast<Index>(std::llround(static_cast<double>(lo) + step * i));
    if (out.values.empty() || v > out.values.back()) out.values.push_back(v);
  }
  return out;
}

Grid default_grid(Method m, Index n, Index d) {
  const int size_class = n < 2000 ? 0 : (n < 50000 ? 1 : 2);
  Grid g;
  if (is_dnnr(m)) {
    static const std::vector<double> ks[] = {{1, 2, 3, 5, 7}, {3, 4}, {3}};
    static const double upper[] = {15, 18, 12};
    static const int count[] = {30, 20, 14};
    g["k"] = ks[size_class];
    g["k_prime"] = to_doubles(sample_kprime_grid(d, 2, upper[size_class], count[size_class]).values);
    if (m == Method::dnnr_lasso) g["lambda"] = as_doubles({0.001, 0.01, 0.1, 1.0});
  } else if (is_knn(m)) {
    static const std::vector<double> ks[] = {{2, 5, 7, 10, 20, 30, 40, 50},
                                             {2, 5, 7, 10, 25, 50, 100, 250},
                                             {2, 3, 5, 7, 10, 12, 15, 20, 25}};
    g["k"] = ks[size_class];
  } else {
    g["k_region"] = to_doubles(sample_kprime_grid(d, 2, 25, 50).values);
  }
  return g;
}

void validate_grid(Method m, const Grid& grid) {
  const auto keys = grid_keys(m);
  for (const auto& key : keys)
    if (!grid.contains(key) || grid.at(key).empty())
      throw ConfigError("grid is missing values for '" + key + "'");
  for (const auto& [key, values] : grid) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("grid key '" + key + "' is not valid for " + method_name(m));
    check_grid_values(key, values);
  }
}

std::vector<Hyperparameters> expand_grid(const Grid& grid) {
  std::vector<Hyperparameters> cells{{}};
  for (const auto& [key, values] : grid) {
    std::vector<Hyperparameters> next;
    next.reserve(cells.size() * values.size());
    for (const auto& cell : cells) {
      for (const double v : values) {
        auto c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

Vector fit_and_predict(Method m, const Hyperparameters& hp, const Dataset& train,
                       const ScalingWeights& weights, const Matrix& queries) {
  if (is_dnnr(m)) return DnnrModel(train, dnnr_config(m, hp), weights).predict(queries);
  if (is_knn(m)) return KnnModel(train, as_count(hp, "k"), weights).predict(queries);
  return LlModel(train, as_count(hp, "k_region"), weights).predict(queries);
}

GridResult grid_search(Method m, const Grid& grid, const Dataset& train, const Dataset& val,
                       const ScalingWeights& weights) {
  validate_grid(m, grid);
  GridResult result;
  result.best_mse = std::numeric_limits<double>::infinity();
  // Models differing only in k share neighbour indices and gradient caches.
  std::map<Hyperparameters, DnnrModel> dnnr_models;
  std::optional<KnnModel> knn;
  std::optional<LlModel> ll;
  for (const auto& cell : expand_grid(grid)) {
    if (!cell_feasible(m, cell, train.rows(), train.dim())) continue;
    Vector pred;
    if (is_dnnr(m)) {
      auto base_key = cell;
      base_key.erase("k");
      auto it = dnnr_models.find(base_key);
      if (it == dnnr_models.end())
        it = dnnr_models.emplace(base_key, DnnrModel(train, dnnr_config(m, cell), weights)).first;
      pred = it->second.with_k(as_count(cell, "k")).predict(val.features());
    } else if (is_knn(m)) {
      if (!knn) knn.emplace(train, 1, weights);
      pred = knn->with_k(as_count(cell, "k")).predict(val.features());
    } else {
      if (!ll) ll.emplace(train, train.dim() + 1, weights);
      pred = ll->with_k(as_count(cell, "k_region")).predict(val.features());
    }
    const double mse = mean_squared_error(pred, val.targets());
    result.cells.emplace_back(cell, mse);
    if (mse < result.best_mse) {
      result.best_mse = mse;
      result.best = cell;
    }
  }
  if (result.cells.empty())
    throw DataError("no grid cell is feasible for " + std::to_string(train.rows()) +
                    " training rows");
  return result;
}

ResultReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_source(config.dataset, config.seed));
}

ResultReport run_experiment(const ExperimentConfig& config, const Dataset& data) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Method m = config.method;
  const Grid grid = merged_grid(m, config.grid, data.rows(), data.dim());
  const FoldPlan plan = make_folds(data.rows(), config.folds, derive_seed(config.seed, 1));

  ResultReport report;
  report.method = method_name(m);
  report.n = data.rows();
  report.d = data.dim();
  for (int f = 0; f < config.folds; ++f) {
    const auto train_ids = plan.train_rows(f);
    const auto test_ids = plan.test_rows(f);
    observe(config, "scaler", f, train_ids);
    const Dataset raw_train = data.subset(train_ids);
    const StandardScaler scaler = fit_standard_scaler(raw_train);
    const Dataset train = scaler.transform(raw_train);
    const Dataset test = scaler.transform(data.subset(test_ids));

    ScalingWeights weights = ScalingWeights::identity(data.dim());
    if (config.learns_weights()) {
      observe(config, "weights", f, train_ids);
      auto sc = config.scale_train.value_or(default_scale_config(data.dim(), 0));
      sc.seed = derive_seed(config.seed, 100 + static_cast<std::uint64_t>(f));
      weights = train_weights(train, sc).final_weights;
      report.per_fold_weights.push_back(weights);
    }

    Hyperparameters hp;
    if (config.tune_first_fold_only && f > 0) {
      hp = report.per_fold_hyperparameters.front();
    } else {
      const auto [inner_train, inner_val] =
          split_rows(train.rows(), 0.2, derive_seed(config.seed, 200 + static_cast<std::uint64_t>(f)));
      observe(config, "grid_train", f, map_rows(train_ids, inner_train));
      observe(config, "grid_val", f, map_rows(train_ids, inner_val));
      hp = grid_search(m, grid, train.subset(inner_train), train.subset(inner_val), weights).best;
    }
    report.per_fold_hyperparameters.push_back(hp);

    observe(config, "refit", f, train_ids);
    observe(config, "test", f, test_ids);
    const Vector pred = fit_and_predict(m, hp, train, weights, test.features());
    report.per_fold_mse.push_back(mean_squared_error(pred, test.targets()));
    report.per_fold_r2.push_back(r_squared(pred, test.targets()));
  }
  report.mean_mse = mean(report.per_fold_mse);
  report.std_mse = sample_std(report.per_fold_mse);
  report.r2 = mean(report.per_fold_r2);
  report.best_hyperparameters = most_frequent(report.per_fold_hyperparameters);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "n_samples") return SweepAxis::n_samples;
  if (name == "noise") return SweepAxis::noise;
  if (name == "n_features") return SweepAxis::n_features;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::n_samples: return "n_samples";
    case SweepAxis::noise: return "noise";
    case SweepAxis::n_features: return "n_features";
  }
  return "";
}

std::vector<SweepRow> run_friedman_sweep(SweepAxis axis, const std::vector<double>& values,
                                         const std::vector<Method>& methods, std::uint64_t seed,
                                         const Grid& grid) {
  if (values.empty() || methods.empty()) throw ConfigError("sweep needs values and methods");
  std::vector<SweepRow> rows;
  for (const double v : values) {
    Friedman1Spec spec;
    switch (axis) {
      case SweepAxis::n_samples:
        if (v < 10 || v != std::floor(v)) throw ConfigError("n_samples must be an integer >= 10");
        spec.n_samples = static_cast<Index>(v);
        break;
      case SweepAxis::noise:
        if (!(v >= 0.0)) throw ConfigError("noise must be >= 0");
        spec.noise = v;
        break;
      case SweepAxis::n_features:
        if (v < 5 || v != std::floor(v)) throw ConfigError("n_features must be an integer >= 5");
        spec.n_features = static_cast<Index>(v);
        break;
    }
    for (const Method m : methods) {
      ExperimentConfig c;
      c.method = m;
      c.dataset = spec;
      c.folds = 5;
      c.seed = seed;
      c.tune_first_fold_only = true;
      for (const auto& [key, vals] : grid) {
        const auto keys = grid_keys(m);
        if (std::find(keys.begin(), keys.end(), key) != keys.end()) c.grid[key] = vals;
      }
      rows.push_back({axis, v, m, run_experiment(c)});
    }
  }
  return rows;
}

BoundSimResult run_bound_sim(const BoundSimConfig& c) {
  if (c.n_train < 2 || c.n_test < 1) throw ConfigError("bound simulation needs rows to work with");
  if (!(c.lipschitz > 0.0)) throw ConfigError("lipschitz must be > 0");
  const Dataset train = friedman1(c.n_train, 10, 0.0, derive_seed(c.seed, 1));
  const Dataset test = friedman1(c.n_test, 10, 0.0, derive_seed(c.seed, 2));
  const auto identity = ScalingWeights::identity(train.dim());
  DnnrConfig dc;
  dc.k = c.k;
  dc.k_prime = c.k_prime;
  const DnnrModel dnnr(train, dc, identity);
  const KnnModel knn(train, c.k, identity);

  BoundSimResult r;
  r.tolerances = pointwise_tolerances(dnnr, test.features(), c.lipschitz);
  const Vector pd = dnnr.predict(test.features());
  const Vector pk = knn.predict(test.features());
  r.dnnr_mse = mean_squared_error(pd, test.targets());
  r.knn_mse = mean_squared_error(pk, test.targets());
  std::vector<double> eps_d, eps_k, err_d, err_k;
  Index viol_d = 0, viol_k = 0;
  for (Index i = 0; i < test.rows(); ++i) {
    const double ed = std::abs(pd(i) - test.targets()(i));
    const double ek = std::abs(pk(i) - test.targets()(i));
    r.dnnr_abs_error.push_back(ed);
    r.knn_abs_error.push_back(ek);
    const auto& t = r.tolerances.points[static_cast<std::size_t>(i)];
    eps_k.push_back(t.eps_knn);
    err_k.push_back(ek);
    if (ek > t.eps_knn) ++viol_k;
    if (!t.valid) continue;
    eps_d.push_back(t.eps_dnnr);
    err_d.push_back(ed);
    if (ed > t.eps_dnnr) ++viol_d;
  }
  r.dnnr_violation_rate = static_cast<double>(viol_d) / static_cast<double>(eps_d.size());
  r.knn_violation_rate = static_cast<double>(viol_k) / static_cast<double>(eps_k.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.dnnr_spearman = eps_d.size() >= 2 ? spearman(eps_d, err_d) : nan;
  r.knn_spearman = eps_k.size() >= 2 ? spearman(eps_k, err_k) : nan;
  return r;
}

void write_bound_csv(std::ostream& out, const BoundSimResult& result) {
  const auto& pts = result.tolerances.points;
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ea = pts[a].valid ? pts[a].eps_dnnr : std::numeric_limits<double>::infinity();
    const double eb = pts[b].valid ? pts[b].eps_dnnr : std::numeric_limits<double>::infinity();
    return ea < eb;
  });
  const auto old = out.precision(17);
  out << "point_id,h,tau_local,eps_dnnr,eps_knn,abs_error,knn_abs_error\n";
  for (const std::size_t i : order) {
    const auto& p = pts[i];
    out << i << ',' << p.h << ',' << p.tau_local << ',' << p.eps_dnnr << ',' << p.eps_knn << ','
        << result.dnnr_abs_error[i] << ',' << result.knn_abs_error[i] << '\n';
  }
  out.precision(old);
}

std::string bound_summary(const BoundSimResult& r) {
  std::ostringstream s;
  s << std::setprecision(4) << "points=" << r.tolerances.points.size()
    << " excluded=" << r.tolerances.excluded << " dnnr_violation_rate=" << r.dnnr_violation_rate
    << " dnnr_spearman=" << r.dnnr_spearman << " knn_violation_rate=" << r.knn_violation_rate
    << " knn_spearman=" << r.knn_spearman << " dnnr_mse=" << r.dnnr_mse
    << " knn_mse=" << r.knn_mse;
  return s.str();
}

FittedModel fit_model(Method m, const Dataset& data, const Grid& grid, std::uint64_t seed,
                      std::optional<bool> scale_features) {
  ExperimentConfig probe;
  probe.method = m;
  probe.grid = grid;
  probe.scale_features = scale_features;
  probe.validate();
  FittedModel model;
  model.method = m;
  model.column_names = data.column_names();
  model.scaler = fit_standard_scaler(data);
  model.train = model.scaler.transform(data);
  model.weights = ScalingWeights::identity(data.dim());
  if (probe.learns_weights())
    model.weights = train_weights(model.train, default_scale_config(data.dim(), derive_seed(seed, 100)))
                        .final_weights;
  const Grid full = merged_grid(m, grid, data.rows(), data.dim());
  const auto [inner_train, inner_val] = split_rows(data.rows(), 0.2, derive_seed(seed, 200));
  model.hyperparameters =
      grid_search(m, full, model.train.subset(inner_train), model.train.subset(inner_val), model.weights)
          .best;
  return model;
}

Vector predict(const FittedModel& model, const Matrix& raw_features) {
  if (raw_features.cols() != model.train.dim()) throw DataError("feature count does not match the model");
  return fit_and_predict(model.method, model.hyperparameters, model.train, model.weights,
                         model.scaler.transform(raw_features));
}

Json to_json(const FittedModel& model) {
  return Json{{"method", method_name(model.method)},
              {"hyperparameters", model.hyperparameters},
              {"scaler", {{"means", to_json_array(model.scaler.means)},
                          {"stds", to_json_array(model.scaler.stds)}}},
              {"weights", model.weights},
              {"column_names", model.column_names},
              {"target_name", model.target_name},
              {"target_bounds", {model.train.target_bounds().first, model.train.target_bounds().second}},
              {"train_features", to_json_rows(model.train.features())},
              {"train_targets", to_json_array(model.train.targets())}};
}

FittedModel fitted_model_from_json(const Json& j) {
  try {
    FittedModel m;
    m.method = parse_method(j.at("method").get<std::string>());
    m.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
    m.scaler.means = vector_from_json(j.at("scaler").at("means"));
    m.scaler.stds = vector_from_json(j.at("scaler").at("stds"));
    m.weights = j.at("weights").get<ScalingWeights>();
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    m.target_name = j.at("target_name").get<std::string>();
    const auto bounds = j.at("target_bounds").get<std::pair<double, double>>();
    m.train = Dataset(matrix_from_json(j.at("train_features")),
                      vector_from_json(j.at("train_targets")), m.column_names, bounds);
    return m;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

Json to_json(const ResultReport& r, bool include_timing) {
  Json j{{"method", r.method},
         {"n", r.n},
         {"d", r.d},
         {"per_fold_mse", r.per_fold_mse},
         {"per_fold_r2", r.per_fold_r2},
         {"mean_mse", r.mean_mse},
         {"std_mse", r.std_mse},
         {"r2", r.r2},
         {"best_hyperparameters", r.best_hyperparameters},
         {"per_fold_hyperparameters", r.per_fold_hyperparameters}};
  if (!r.per_fold_weights.empty()) j["per_fold_weights"] = r.per_fold_weights;
  if (include_timing) j["wall_time_s"] = r.wall_time_s;
  return j;
}

std::string report_table(const ResultReport& r) {
  std::ostringstream s;
  s << std::left << std::setw(16) << "method" << r.method << '\n'
    << std::setw(16) << "rows x dims" << r.n << " x " << r.d << '\n';
  s << std::setw(16) << "fold" << std::setw(14) << "mse" << "r2\n";
  s << std::setprecision(6);
  for (std::size_t f = 0; f < r.per_fold_mse.size(); ++f)
    s << std::setw(16) << f << std::setw(14) << r.per_fold_mse[f] << r.per_fold_r2[f] << '\n';
  s << std::setw(16) << "mean" << std::setw(14) << r.mean_mse << r.r2 << '\n'
    << std::setw(16) << "std" << r.std_mse << '\n'
    << std::setw(16) << "best";
  for (const auto& [k, v] : r.best_hyperparameters) s << k << '=' << v << ' ';
  s << '\n' << std::setw(16) << "wall time (s)" << r.wall_time_s << '\n';
  return s.str();
}

std::string report_csv(const std::vector<ResultReport>& reports) {
  std::ostringstream s;
  s << std::setprecision(17) << "method,n,d,mean_mse,std_mse,r2,best_hyperparameters,wall_time_s\n";
  for (const auto& r : reports) {
    s << r.method << ',' << r.n << ',' << r.d << ',' << r.mean_mse << ',' << r.std_mse << ','
      << r.r2 << ',';
    bool first = true;
    for (const auto& [k, v] : r.best_hyperparameters) {
      s << (first ? "" : ";") << k << '=' << v;
      first = false;
    }
    s << ',' << r.wall_time_s << '\n';
  }
  return s.str();
}

Grid grid_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("grid must be a JSON object of value arrays");
  Grid g;
  for (const auto& [key, values] : j.items()) {
    if (!values.is_array()) throw ConfigError("grid entry '" + key + "' must be an array");
    for (const auto& v : values) {
      if (!v.is_number()) throw ConfigError("grid entry '" + key + "' must hold numbers");
      g[key].push_back(v.get<double>());
    }
  }
  return g;
}

}  // namespace dnnr
