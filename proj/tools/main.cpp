#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "permsym/canon.hpp"
#include "permsym/invariants.hpp"
#include "permsym/json_io.hpp"
#include "permsym/layers.hpp"
#include "permsym/symtest.hpp"
#include "permsym/train.hpp"

namespace {

using permsym::Json;

constexpr int kExitOk = 0;
constexpr int kExitTestFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitFeasibility = 3;

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

void write_output(const Json& j, const std::string& out_path) {
  std::string text = permsym::dump_json(j, 2);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write " + out_path);
  out << text;
}

permsym::GroupSpec spec_for(const std::string& mode,
                            const permsym::DenseArray& x) {
  if (mode == "seq") {
    if (x.rank() != 1)
      throw std::invalid_argument("seq mode expects a rank-1 array");
    return permsym::GroupSpec::seq(x.shape()[0]);
  }
  if (mode == "separate") {
    if (x.rank() < 2)
      throw std::invalid_argument("separate mode expects rank >= 2");
    return permsym::GroupSpec::separate(x.shape());
  }
  if (mode == "joint") {
    if (x.rank() != 2 || x.shape()[0] != x.shape()[1])
      throw std::invalid_argument("joint mode expects a square matrix");
    if (!x.is_symmetric())
      throw std::invalid_argument("joint mode expects a symmetric matrix");
    return permsym::GroupSpec::joint(x.shape()[0]);
  }
  throw std::invalid_argument("unknown mode " + mode + "; use seq, separate "
                              "or joint");
}

struct ArrayInput {
  permsym::DenseArray array;
  std::string mode;
};

ArrayInput load_array_input(const std::string& path) {
  Json j = load_json(path);
  permsym::reject_unknown_keys(j, {"schema_version", "array", "mode"},
                               "input");
  permsym::check_schema_version(j, "input");
  ArrayInput in{permsym::array_from_json(j.at("array")),
                j.at("mode").get<std::string>()};
  return in;
}

int cmd_canon(const std::string& input, const std::string& out,
              bool force_brute) {
  ArrayInput in = load_array_input(input);
  permsym::GroupSpec spec = spec_for(in.mode, in.array);
  permsym::CanonResult res = permsym::canon_array(
      in.array, spec,
      force_brute ? permsym::CanonAlgo::Brute : permsym::CanonAlgo::Auto);
  Json j;
  j["schema_version"] = permsym::kSchemaVersion;
  j["mode"] = in.mode;
  j["canon"] = permsym::array_to_json(res.canon);
  j["witness"] = permsym::tuple_to_json(res.witness);
  j["orbit_size"] = permsym::orbit_size(in.array, spec);
  write_output(j, out);
  return kExitOk;
}

int cmd_sample(const std::string& input, const std::string& out,
               std::uint64_t seed, std::size_t n) {
  ArrayInput in = load_array_input(input);
  permsym::GroupSpec spec = spec_for(in.mode, in.array);
  permsym::NoiseSource src{seed, 0, 0};
  std::map<std::string, std::pair<Json, std::size_t>> counts;
  Json samples = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    auto [draw, next] = permsym::orbit_law_sample(in.array, spec, src);
    src = next;
    Json nested = permsym::array_to_json(draw);
    auto key = permsym::outcome_key(std::span<const double>(draw.data()));
    auto [it, fresh] = counts.emplace(key, std::make_pair(nested, 0));
    (void)fresh;
    it->second.second += 1;
    if (n <= 1000) samples.push_back(nested);
  }
  Json j;
  j["schema_version"] = permsym::kSchemaVersion;
  j["mode"] = in.mode;
  j["seed"] = seed;
  j["n"] = n;
  j["counts"] = Json::array();
  for (const auto& [key, entry] : counts) {
    Json c;
    c["outcome"] = entry.first;
    c["count"] = entry.second;
    j["counts"].push_back(c);
  }
  if (n <= 1000) j["samples"] = samples;
  write_output(j, out);
  return kExitOk;
}

struct CheckConfig {
  std::uint64_t seed = 0;
  std::vector<std::string> suites;
  double tol = 1e-9;
  bool bitexact = false;
};

CheckConfig parse_check_config(const Json& j) {
  permsym::reject_unknown_keys(
      j, {"schema_version", "seed", "suites", "tol", "bitexact"}, "config");
  permsym::check_schema_version(j, "config");
  if (!j.contains("seed"))
    throw std::invalid_argument("config: seed is mandatory");
  CheckConfig cfg;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.suites = j.at("suites").get<std::vector<std::string>>();
  if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
  if (j.contains("bitexact")) cfg.bitexact = j.at("bitexact").get<bool>();
  return cfg;
}

int cmd_check(const std::string& config_path, const std::string& out,
              double tol_override, bool bitexact_flag, bool seed_set,
              std::uint64_t seed_override) {
  CheckConfig cfg = parse_check_config(load_json(config_path));
  if (tol_override > 0.0) cfg.tol = tol_override;
  if (bitexact_flag) cfg.bitexact = true;
  if (seed_set) cfg.seed = seed_override;
  if (cfg.suites.empty())
    std::cerr << "warning: empty suite list; nothing to run\n";

  Json j;
  j["schema_version"] = permsym::kSchemaVersion;
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol;
  j["bitexact"] = cfg.bitexact;
  j["reports"] = Json::array();
  bool all_passed = true;
  for (const auto& suite : cfg.suites) {
    for (const auto& r :
         permsym::run_suite(suite, cfg.seed, cfg.tol, cfg.bitexact)) {
      j["reports"].push_back(permsym::report_to_json(r));
      all_passed = all_passed && r.passed;
      std::cerr << (r.passed ? "[pass] " : "[FAIL] ") << r.name << "\n";
    }
  }
  j["all_passed"] = all_passed;
  write_output(j, out);
  return all_passed ? kExitOk : kExitTestFailure;
}

struct TrainFileConfig {
  std::uint64_t seed = 0;
  std::string task;
  std::size_t set_size = 5;
  std::size_t rows = 3, cols = 3;
  std::size_t train_examples = 10000;
  std::size_t test_examples = 1000;
  std::size_t epochs = 30;
  double lr = 0.05;
};

TrainFileConfig parse_train_config(const Json& j) {
  permsym::reject_unknown_keys(
      j,
      {"schema_version", "seed", "task", "set_size", "rows", "cols",
       "train_examples", "test_examples", "epochs", "lr"},
      "config");
  permsym::check_schema_version(j, "config");
  if (!j.contains("seed"))
    throw std::invalid_argument("config: seed is mandatory");
  TrainFileConfig cfg;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.task = j.at("task").get<std::string>();
  if (j.contains("set_size")) cfg.set_size = j.at("set_size").get<std::size_t>();
  if (j.contains("rows")) cfg.rows = j.at("rows").get<std::size_t>();
  if (j.contains("cols")) cfg.cols = j.at("cols").get<std::size_t>();
  if (j.contains("train_examples"))
    cfg.train_examples = j.at("train_examples").get<std::size_t>();
  if (j.contains("test_examples"))
    cfg.test_examples = j.at("test_examples").get<std::size_t>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
  return cfg;
}

permsym::SetTask task_from_name(const std::string& name) {
  if (name == "mean") return permsym::SetTask::Mean;
  if (name == "sum") return permsym::SetTask::Sum;
  if (name == "max") return permsym::SetTask::Max;
  if (name == "variance") return permsym::SetTask::Variance;
  throw std::invalid_argument("unknown task " + name);
}

int cmd_train(const std::string& config_path, const std::string& out,
              const std::string& model_out, bool seed_set,
              std::uint64_t seed_override) {
  TrainFileConfig cfg = parse_train_config(load_json(config_path));
  if (seed_set) cfg.seed = seed_override;
  permsym::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr;
  tc.seed = cfg.seed;

  Json j;
  j["schema_version"] = permsym::kSchemaVersion;
  j["task"] = cfg.task;
  j["seed"] = cfg.seed;

  if (cfg.task == "matrix") {
    permsym::NoiseSource src{cfg.seed, 1, 0};
    permsym::Dataset train = permsym::make_matrix_dataset(
        cfg.train_examples, cfg.rows, cfg.cols, permsym::noise_fork(src, {1}));
    permsym::Dataset test = permsym::make_matrix_dataset(
        cfg.test_examples, cfg.rows, cfg.cols, permsym::noise_fork(src, {2}));
    permsym::MatrixLayerParams params;
    permsym::TrainResult res =
        permsym::sgd_train_matrix(params, train, test, tc);
    j["train_mse"] = res.final_train_mse;
    j["test_mse"] = res.test_mse;
    j["loss_trace"] = res.loss_trace;
    Json thetas = Json::array();
    for (double t : params.thetas) thetas.push_back(t);
    j["model"] = Json{{"thetas", thetas}};
    write_output(j, out);
    return kExitOk;
  }

  permsym::SetTask task = task_from_name(cfg.task);
  permsym::NoiseSource src{cfg.seed, 1, 0};
  permsym::Dataset train = permsym::make_set_dataset(
      task, cfg.train_examples, cfg.set_size, permsym::noise_fork(src, {1}));
  permsym::Dataset test = permsym::make_set_dataset(
      task, cfg.test_examples, cfg.set_size, permsym::noise_fork(src, {2}));
  permsym::LayerStack stack =
      permsym::deep_sets_stack(task, permsym::noise_fork(src, {3}));
  permsym::TrainResult res = permsym::sgd_train(stack, train, test, tc);

  j["train_mse"] = res.final_train_mse;
  j["test_mse"] = res.test_mse;
  j["loss_trace"] = res.loss_trace;

  // invariance audit of the trained model
  {
    permsym::GroupSpec spec = permsym::GroupSpec::seq(cfg.set_size);
    auto fn = [&](const permsym::DenseArray& v) {
      return permsym::stack_forward(stack, v, permsym::NoiseSource{0, 0, 0});
    };
    permsym::TestReport audit = permsym::check_invariance_exhaustive(
        "train/invariance_audit", fn, test.inputs.at(0), spec, 1e-9);
    Json a;
    a["passed"] = audit.passed;
    a["max_deviation"] = audit.max_deviation;
    a["cases_checked"] = audit.cases_checked;
    j["invariance_audit"] = a;
    if (!audit.passed) {
      write_output(j, out);
      return kExitTestFailure;
    }
  }

  if (!model_out.empty()) {
    Json model;
    model["schema_version"] = permsym::kSchemaVersion;
    model["task"] = cfg.task;
    Json layers = Json::array();
    for (const auto& l : stack.layers) {
      Json layer;
      layer["kind"] = "invariant";
      layer["pooling"] = l.set.pooling == permsym::Pooling::UStat ? "ustat"
                         : l.set.pooling == permsym::Pooling::Max ? "max"
                                                                  : "sum";
      layer["ustat_k"] = l.set.ustat_k;
      layer["phi"] = permsym::mlp_to_json(l.set.phi);
      layer["rho"] = permsym::mlp_to_json(l.set.rho);
      layers.push_back(layer);
    }
    model["stack"] = layers;
    write_output(model, model_out);
  }
  write_output(j, out);
  return kExitOk;
}

int cmd_report(const std::string& input) {
  Json j = load_json(input);
  permsym::reject_unknown_keys(j,
                               {"schema_version", "seed", "tol", "bitexact",
                                "reports", "all_passed"},
                               "report");
  permsym::check_schema_version(j, "report");
  std::size_t passed = 0, failed = 0;
  for (const auto& item : j.at("reports")) {
    permsym::TestReport r = permsym::report_from_json(item);
    (r.passed ? passed : failed) += 1;
    std::cout << (r.passed ? "[pass] " : "[FAIL] ") << r.name
              << "  max_dev=" << r.max_deviation;
    if (r.p_value) std::cout << "  p=" << *r.p_value;
    std::cout << "\n";
  }
  std::cout << passed << " passed, " << failed << " failed\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permutation-symmetric stochastic layers: canonization, orbit "
               "sampling, verification suites, toy training"};
  app.require_subcommand(1);

  std::string input, out = "-", config, model_out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t n_samples = 1;
  bool force_brute = false, bitexact = false;
  double tol = -1.0;

  auto* canon = app.add_subcommand("canon", "canonical form and witness");
  canon->add_option("--input", input, "input JSON")->required();
  canon->add_option("--out", out, "output path, - for stdout");
  canon->add_flag("--brute", force_brute, "force brute-force search");

  auto* sample = app.add_subcommand("sample", "draw from the orbit law");
  sample->add_option("--input", input, "input JSON")->required();
  sample->add_option("--out", out, "output path");
  sample->add_option("--seed", seed, "rng seed (mandatory)")
      ->required()
      ->each([&](const std::string&) { seed_set = true; });
  sample->add_option("--n", n_samples, "number of draws");

  auto* check = app.add_subcommand("check", "run verification suites");
  check->add_option("--config", config, "config JSON")->required();
  check->add_option("--out", out, "report path");
  check->add_option("--tol", tol, "tolerance override");
  check->add_flag("--bitexact", bitexact, "sorted-order pooling");
  check->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* train = app.add_subcommand("train", "train a toy model");
  train->add_option("--config", config, "config JSON")->required();
  train->add_option("--out", out, "metrics path");
  train->add_option("--model-out", model_out, "trained model path");
  train->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* report = app.add_subcommand("report", "validate and summarize a "
                                              "report JSON");
  report->add_option("--input", input, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (canon->parsed()) return cmd_canon(input, out, force_brute);
    if (sample->parsed()) return cmd_sample(input, out, seed, n_samples);
    if (check->parsed())
      return cmd_check(config, out, tol, bitexact, seed_set, seed);
    if (train->parsed())
      return cmd_train(config, out, model_out, seed_set, seed);
    if (report->parsed()) return cmd_report(input);
  } catch (const permsym::FeasibilityError& e) {
    std::cerr << "feasibility: " << e.what() << "\n";
    return kExitFeasibility;
  } catch (const Json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::out_of_range& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTestFailure;
  }
  return kExitInputError;
}
