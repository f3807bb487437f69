#include "dnnr/experiment.hpp"
#include "dnnr/inspect.hpp"
#include "dnnr/stats.hpp"
#include "dnnr/theory.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace dnnr;

namespace {

struct Common {
  std::string dataset;
  std::string target_col = "-1";
  std::string method = "dnnr";
  int folds = 5;
  std::uint64_t seed = 0;
  std::string grid_path;
  std::string out;
  std::string format = "table";
  std::string scale_features;  // "", "true" or "false"
};

void add_common(CLI::App* cmd, Common& c, bool needs_dataset = true) {
  auto* ds = cmd->add_option("--dataset", c.dataset,
                             "CSV path, or friedman1[:n=5000,d=10,noise=0]");
  if (needs_dataset) ds->required();
  cmd->add_option("--target-col", c.target_col, "target column name or index (negative counts from the end)");
  cmd->add_option("--method", c.method, "dnnr, dnnr2, dnnr-lasso, dnnr-unscaled, knn, knn-scaled, ll, ll-scaled");
  cmd->add_option("--folds", c.folds, "cross-validation folds");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--grid", c.grid_path, "JSON object mapping hyperparameter names to value arrays");
  cmd->add_option("--out", c.out, "output path (default: stdout)");
  cmd->add_option("--format", c.format, "json, table or csv")
      ->check(CLI::IsMember({"json", "table", "csv"}));
  cmd->add_option("--scale-features", c.scale_features, "learn feature weights (true/false)")
      ->check(CLI::IsMember({"true", "false"}));
}

ColumnRef parse_column(const std::string& s) {
  Index idx = 0;
  std::istringstream in(s);
  if (in >> idx && in.eof()) return idx;
  return s;
}

DatasetSource parse_dataset(const Common& c) {
  const std::string prefix = "friedman1";
  if (c.dataset.rfind(prefix, 0) != 0) return CsvSource{c.dataset, parse_column(c.target_col)};
  Friedman1Spec spec;
  std::string rest = c.dataset.substr(prefix.size());
  if (rest.empty()) return spec;
  if (rest.front() != ':') return CsvSource{c.dataset, parse_column(c.target_col)};
  std::istringstream in(rest.substr(1));
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in '" + item + "'");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad number in '" + item + "'");
    }
    if (key == "n")
      spec.n_samples = static_cast<Index>(value);
    else if (key == "d")
      spec.n_features = static_cast<Index>(value);
    else if (key == "noise")
      spec.noise = value;
    else
      throw ConfigError("unknown friedman1 key '" + key + "'");
  }
  return spec;
}

Grid read_grid(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file " + path);
  try {
    return grid_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("grid file is not valid JSON: ") + e.what());
  }
}

std::optional<bool> parse_flag(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s == "true";
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.out);
  if (!out) throw DataError("cannot write " + c.out);
  out << text;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

int cmd_evaluate(const Common& c) {
  ExperimentConfig cfg;
  cfg.method = parse_method(c.method);
  cfg.dataset = parse_dataset(c);
  cfg.folds = c.folds;
  cfg.seed = c.seed;
  cfg.grid = read_grid(c.grid_path);
  cfg.scale_features = parse_flag(c.scale_features);
  const auto report = run_experiment(cfg);
  if (c.format == "json")
    emit(c, to_json(report).dump(2) + "\n");
  else if (c.format == "csv")
    emit(c, report_csv({report}));
  else
    emit(c, report_table(report));
  return 0;
}

int cmd_fit(const Common& c) {
  const Method m = parse_method(c.method);
  const Dataset data = load_source(parse_dataset(c), c.seed);
  auto model = fit_model(m, data, read_grid(c.grid_path), c.seed, parse_flag(c.scale_features));
  emit(c, to_json(model).dump() + "\n");
  std::cerr << "fitted " << method_name(m) << " on " << data.rows() << " rows:";
  for (const auto& [k, v] : model.hyperparameters) std::cerr << ' ' << k << '=' << v;
  std::cerr << '\n';
  return 0;
}

int cmd_predict(const Common& c, const std::string& model_path) {
  std::ifstream in(model_path);
  if (!in) throw DataError("cannot open model " + model_path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  const FittedModel model = fitted_model_from_json(j);
  const auto table = load_feature_csv(c.dataset);
  Matrix x = table.features;
  std::optional<Vector> truth;
  if (x.cols() == model.train.dim() + 1) {
    const Dataset data = load_csv(c.dataset, parse_column(c.target_col));
    x = data.features();
    truth = data.targets();
  } else if (x.cols() != model.train.dim()) {
    throw DataError("dataset has " + std::to_string(x.cols()) + " columns; model expects " +
                    std::to_string(model.train.dim()) + " features");
  }
  const Vector pred = predict(model, x);
  std::ostringstream s;
  s.precision(17);
  if (c.format == "json") {
    Json out{{"predictions", to_json_array(pred)}};
    if (truth) out["mse"] = mean_squared_error(pred, *truth);
    s << out.dump(2) << '\n';
  } else {
    s << "prediction\n";
    for (Index i = 0; i < pred.size(); ++i) s << pred(i) << '\n';
  }
  emit(c, s.str());
  if (truth) std::cerr << "mse " << mean_squared_error(pred, *truth) << '\n';
  return 0;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::string& values,
              const std::string& methods) {
  std::vector<Method> ms;
  for (const auto& name : split_names(methods)) ms.push_back(parse_method(name));
  const auto rows = run_friedman_sweep(parse_axis(axis), parse_list(values), ms, c.seed,
                                       read_grid(c.grid_path));
  std::ostringstream s;
  if (c.format == "json") {
    Json out = Json::array();
    for (const auto& r : rows)
      out.push_back({{"axis", axis_name(r.axis)}, {"value", r.value}, {"report", to_json(r.report)}});
    s << out.dump(2) << '\n';
  } else if (c.format == "csv") {
    s.precision(17);
    s << "axis,value,method,mean_mse,std_mse,r2\n";
    for (const auto& r : rows)
      s << axis_name(r.axis) << ',' << r.value << ',' << r.report.method << ',' << r.report.mean_mse
        << ',' << r.report.std_mse << ',' << r.report.r2 << '\n';
  } else {
    s << std::left;
    s.width(14);
    s << axis_name(rows.front().axis);
    s.width(16);
    s << "method";
    s.width(14);
    s << "mean_mse" << "std_mse\n";
    for (const auto& r : rows) {
      s.width(14);
      s << r.value;
      s.width(16);
      s << r.report.method;
      s.width(14);
      s << r.report.mean_mse << r.report.std_mse << '\n';
    }
  }
  emit(c, s.str());
  return 0;
}

int cmd_bounds(const Common& c, const BoundSimConfig& sim, double epsilon, double delta) {
  const auto result = run_bound_sim(sim);
  std::ostringstream s;
  write_bound_csv(s, result);
  emit(c, s.str());
  std::cerr << bound_summary(result) << '\n';

  // Sample-size conditions at the simulated scale.
  const Dataset train = friedman1(sim.n_train, 10, 0.0, derive_seed(sim.seed, 1));
  DnnrConfig dc;
  dc.k = sim.k;
  dc.k_prime = sim.k_prime;
  const DnnrModel model(train, dc, ScalingWeights::identity(train.dim()));
  const auto tau = estimate_tau(model, friedman1(200, 10, 0.0, derive_seed(sim.seed, 3)).features());
  BoundInputs in;
  in.lipschitz = sim.lipschitz;
  in.epsilon = epsilon;
  in.delta = delta;
  in.y_range = train.target_bounds();
  in.tau = tau.tau;
  in.sigma_min = tau.mean_sigma_min;
  const double h = std::sqrt(epsilon / (sim.lipschitz * (1.0 + tau.tau)));
  const Vector center = Vector::Constant(10, 0.5);
  const double r0 = 0.3;
  const auto mc = ball_mass_estimate(uniform_cube_sampler(10), center, r0, 1000000, derive_seed(sim.seed, 4));
  if (!mc.warning.empty()) std::cerr << "warning: " << mc.warning << '\n';
  in.ball_mass = extrapolate_ball_mass(mc.mass, r0, h, 10);
  const auto report = theorem1_conditions(in);
  std::cerr << "tau=" << tau.tau << " (excluded points " << tau.excluded_points << ")"
            << " h*_dnnr=" << report.h_star_dnnr << " h*_knn=" << report.h_star_knn
            << " ball_mass=" << in.ball_mass << " n_required=" << report.n_required.str()
            << " k_min=" << report.k_min.str() << " k_max=" << report.k_max.str()
            << " feasible=" << (report.feasible ? "yes" : "no") << '\n';
  return 0;
}

int cmd_inspect(const Common& c, Index n_queries, const std::string& dims_text,
                const std::string& relevance_csv) {
  const Dataset raw = load_source(parse_dataset(c), c.seed);
  const Method m = parse_method(c.method);
  if (m != Method::dnnr && m != Method::dnnr2 && m != Method::dnnr_unscaled && m != Method::dnnr_lasso)
    throw ConfigError("inspect works on DNNR methods");
  const auto dims = parse_list(dims_text);
  if (dims.size() != 2) throw ConfigError("--dims takes two column indices");
  const auto [train_rows, query_rows] = split_rows(raw.rows(), 0.2, derive_seed(c.seed, 300));
  const Dataset train_raw = raw.subset(train_rows);
  const FittedModel fitted = fit_model(m, train_raw, read_grid(c.grid_path), c.seed, parse_flag(c.scale_features));
  DnnrConfig dc;
  dc.k = static_cast<Index>(fitted.hyperparameters.at("k"));
  dc.k_prime = static_cast<Index>(fitted.hyperparameters.at("k_prime"));
  if (m == Method::dnnr2) dc.order = 2;
  if (m == Method::dnnr_lasso) dc.lasso_lambda = fitted.hyperparameters.at("lambda");
  const DnnrModel model(fitted.train, dc, fitted.weights);

  const Dataset queries = fitted.scaler.transform(raw.subset(query_rows));
  const Index count = std::min<Index>(n_queries, queries.rows());
  std::vector<PredictionTrace> traces;
  std::vector<double> actual;
  for (Index i = 0; i < count; ++i) {
    traces.push_back(model.predict_traced(queries.features().row(i).transpose()));
    actual.push_back(queries.targets()(i));
  }
  const auto json = export_traces(traces, {static_cast<Index>(dims[0]), static_cast<Index>(dims[1])}, actual);
  emit(c, json.dump(2) + "\n");
  if (!relevance_csv.empty()) {
    const auto summary = collect_relevance(model, queries.features());
    std::ofstream out(relevance_csv);
    if (!out) throw DataError("cannot write " + relevance_csv);
    write_relevance_csv(out, summary);
  }
  return 0;
}

int cmd_gen(const Common& c, Index n, Index d, double noise) {
  if (c.out.empty()) throw ConfigError("gen-friedman1 needs --out");
  write_csv(friedman1(n, d, noise, c.seed), c.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential nearest neighbours regression toolkit"};
  app.require_subcommand(1);
  Common common;

  auto* fit = app.add_subcommand("fit", "tune and fit a model, write it as JSON");
  add_common(fit, common);
  auto* pred = app.add_subcommand("predict", "predict rows of a CSV with a fitted model");
  add_common(pred, common);
  std::string model_path;
  pred->add_option("--model", model_path, "model JSON written by fit")->required();
  auto* eval = app.add_subcommand("evaluate", "k-fold cross-validated evaluation with grid search");
  add_common(eval, common);

  auto* sweep = app.add_subcommand("sweep", "Friedman-1 sweep over samples, noise or features");
  add_common(sweep, common, false);
  std::string axis = "n_samples", values = "500,5000", methods = "dnnr,knn";
  sweep->add_option("--axis", axis, "n_samples, noise or n_features");
  sweep->add_option("--values", values, "comma separated axis values");
  sweep->add_option("--methods", methods, "comma separated methods");

  auto* bounds = app.add_subcommand("bounds", "per-point error tolerances on Friedman-1");
  add_common(bounds, common, false);
  BoundSimConfig sim;
  double epsilon = 0.1, delta = 0.05;
  bounds->add_option("--n-train", sim.n_train);
  bounds->add_option("--n-test", sim.n_test);
  bounds->add_option("--k", sim.k);
  bounds->add_option("--k-prime", sim.k_prime);
  bounds->add_option("--lipschitz", sim.lipschitz);
  bounds->add_option("--epsilon", epsilon);
  bounds->add_option("--delta", delta);

  auto* inspect = app.add_subcommand("inspect", "export prediction traces and relevance");
  add_common(inspect, common);
  Index n_queries = 20;
  std::string dims = "0,1", relevance_csv;
  inspect->add_option("--queries", n_queries, "number of traced held-out queries");
  inspect->add_option("--dims", dims, "two columns to project onto");
  inspect->add_option("--relevance-csv", relevance_csv, "also write the relevance summary");

  auto* gen = app.add_subcommand("gen-friedman1", "write a Friedman-1 sample as CSV");
  add_common(gen, common, false);
  Index gen_n = 5000, gen_d = 10;
  double gen_noise = 0.0;
  gen->add_option("--n", gen_n);
  gen->add_option("--d", gen_d);
  gen->add_option("--noise", gen_noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    sim.seed = common.seed;
    if (*fit) return cmd_fit(common);
    if (*pred) return cmd_predict(common, model_path);
    if (*eval) return cmd_evaluate(common);
    if (*sweep) return cmd_sweep(common, axis, values, methods);
    if (*bounds) return cmd_bounds(common, sim, epsilon, delta);
    if (*inspect) return cmd_inspect(common, n_queries, dims, relevance_csv);
    if (*gen) return cmd_gen(common, gen_n, gen_d, gen_noise);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
