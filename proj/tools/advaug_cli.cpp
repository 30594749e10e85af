// advaug: data generation, training, verification, ensembles and evaluation.
//
// Exit codes: 0 success, 1 usage/config/input error, 2 numerical or
// verification failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advaug/config.hpp"
#include "advaug/data.hpp"
#include "advaug/ensemble.hpp"
#include "advaug/errors.hpp"
#include "advaug/model_io.hpp"
#include "advaug/trainer.hpp"
#include "advaug/verify.hpp"

#ifndef ADVAUG_VERSION
#define ADVAUG_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advaug;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

// Thrown for verification suites that ran but did not pass.
struct VerificationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "' is not valid JSON: " + e.what());
  }
}

// A run manifest can be passed back as --config; its resolved config is used.
json unwrap_manifest(json j) {
  if (j.is_object() && j.contains("tool") && j.contains("config")) return j.at("config");
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

GenConfig load_gen_config(const std::string& spec) {
  if (is_gen_preset(spec)) return gen_preset(spec);
  return gen_config_from_json(unwrap_manifest(read_json_file(spec)));
}

RunConfig load_run_config(const std::string& spec) {
  if (is_run_preset(spec)) return run_preset(spec);
  return run_config_from_json(unwrap_manifest(read_json_file(spec)));
}

Dataset load_dataset(const std::string& path) {
  if (!fs::exists(path)) throw std::invalid_argument("dataset '" + path + "' does not exist");
  if (fs::path(path).extension() == ".csv") return read_csv(path);
  return read_dataset(path);
}

json manifest(const std::string& command, const json& config, const json& inputs,
              const std::string& out, std::optional<std::uint64_t> seed) {
  json m{{"tool", "advaug"},     {"version", ADVAUG_VERSION}, {"command", command},
         {"config", config},     {"inputs", inputs},          {"out", out},
         {"started_at", utc_now()}};
  if (seed) m["seed"] = *seed;
  return m;
}

struct Options {
  bool serial = false;

  std::string gen_config = "toy-default";
  std::string out;

  std::string run_config = "toy-default";
  std::string data;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> rounds_override;

  std::string suite = "all";
  int trials = 50;
  std::uint64_t verify_seed = 0;
  std::string report;

  std::string model;
  std::string ensemble;
  std::vector<std::string> eval_data;
};

void apply_overrides(RunConfig& cfg, const Options& opt) {
  if (opt.seed_override) cfg.train.seed = *opt.seed_override;
  if (opt.rounds_override) cfg.train.rounds = *opt.rounds_override;
  if (opt.serial) cfg.train.threads = 1;
  validate(cfg.train);
}

void cmd_gen(const Options& opt) {
  const GenConfig cfg = load_gen_config(opt.gen_config);
  const fs::path out(opt.out);
  fs::create_directories(out);
  json m = manifest("gen", to_json(cfg), {{"config", opt.gen_config}}, opt.out, std::nullopt);
  write_json(out / "manifest.json", m);
  write_json(out / "config.json", to_json(cfg));

  json files = json::array();
  for (const NamedDomain& d : cfg.domains) {
    const Dataset ds = generate(d.spec);
    const std::string name = d.name + ".bin";
    write_dataset((out / name).string(), ds);
    files.push_back({{"domain", d.name}, {"path", name}, {"n", ds.size()}});
    std::cerr << "gen: " << d.name << " (" << ds.size() << " examples) -> " << (out / name).string()
              << '\n';
  }
  m["outputs"] = files;
  m["finished_at"] = utc_now();
  write_json(out / "manifest.json", m);
}

void cmd_train(const Options& opt) {
  RunConfig cfg = load_run_config(opt.run_config);
  apply_overrides(cfg, opt);
  const Dataset ds = load_dataset(opt.data);
  const fs::path out(opt.out);
  fs::create_directories(out);
  json m = manifest("train", to_json(cfg), {{"config", opt.run_config}, {"data", opt.data}}, opt.out,
                    cfg.train.seed);
  write_json(out / "manifest.json", m);
  write_json(out / "config.json", to_json(cfg));

  const Network net0 = make_network(cfg.architecture, ds.dim, ds.num_classes, cfg.train.seed);
  const TrainResult result = train(net0, ds, cfg.train);
  write_run_outputs(out, result);

  m["finished_at"] = utc_now();
  m["outputs"] = {"model.adaw", "log.jsonl", "dataset.augmented.bin", "models/"};
  write_json(out / "manifest.json", m);
  std::cerr << "train: " << result.log.phases.size() << " phases, final dataset "
            << result.dataset.data.size() << " examples -> " << (out / "model.adaw").string() << '\n';
}

void cmd_ensemble(const Options& opt) {
  RunConfig cfg = load_run_config(opt.run_config);
  apply_overrides(cfg, opt);
  if (cfg.gamma_grid.empty()) cfg.gamma_grid = default_gamma_grid();
  const Dataset ds = load_dataset(opt.data);
  const fs::path out(opt.out);
  fs::create_directories(out);
  json m = manifest("ensemble", to_json(cfg), {{"config", opt.run_config}, {"data", opt.data}},
                    opt.out, cfg.train.seed);
  write_json(out / "manifest.json", m);
  write_json(out / "config.json", to_json(cfg));

  const EnsembleModel ens =
      train_ensemble(ds, cfg.train, cfg.architecture, cfg.gamma_grid, cfg.selection, cfg.train.threads);
  write_ensemble(out, ens);

  m["finished_at"] = utc_now();
  m["outputs"] = {"ensemble.json", "members/"};
  write_json(out / "manifest.json", m);
  std::cerr << "ensemble: " << ens.size() << " members -> " << (out / "ensemble.json").string()
            << '\n';
}

void cmd_eval(const Options& opt) {
  std::optional<Network> net;
  std::optional<EnsembleModel> ens;
  json report;
  if (!opt.model.empty()) {
    net = read_model(opt.model);
    report["model"] = opt.model;
  } else {
    ens = read_ensemble(opt.ensemble);
    report["ensemble"] = opt.ensemble;
    report["selection"] = to_string(ens->selection());
  }
  json results = json::array();
  for (const std::string& path : opt.eval_data) {
    const Dataset ds = load_dataset(path);
    const double acc = net ? accuracy(*net, ds) : accuracy(*ens, ds);
    results.push_back({{"data", path}, {"n", ds.size()}, {"accuracy", acc}});
  }
  report["results"] = results;
  if (!opt.report.empty()) write_json(opt.report, report);
  std::cout << report.dump(2) << '\n';
}

void cmd_verify(const Options& opt) {
  std::vector<std::string> suites;
  if (opt.suite == "all") suites = verify_suite_names();
  else suites.push_back(opt.suite);

  json report;
  bool pass = true;
  if (suites.size() == 1) {
    report = run_verify_suite(suites[0], opt.trials, opt.verify_seed);
    pass = report.at("pass").get<bool>();
  } else {
    report = {{"suite", "all"}, {"trials", opt.trials}, {"seed", opt.verify_seed}};
    json parts = json::array();
    for (const std::string& s : suites) {
      json r = run_verify_suite(s, opt.trials, opt.verify_seed);
      pass = pass && r.at("pass").get<bool>();
      parts.push_back(std::move(r));
    }
    report["pass"] = pass;
    report["suites"] = parts;
  }
  if (!opt.report.empty()) write_json(opt.report, report);
  else std::cout << report.dump(2) << '\n';

  for (const std::string& s : suites)
    std::cerr << "verify: " << s << '\n';
  std::cerr << "verify: " << (pass ? "all checks passed" : "FAILED") << '\n';
  if (!pass) throw VerificationFailed("verification failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial data augmentation for single-source domain generalization"};
  app.set_version_flag("--version", std::string(ADVAUG_VERSION));
  app.require_subcommand(1);
  Options opt;
  app.add_flag("--serial", opt.serial, "Force the deterministic single-threaded reference order");

  auto* gen = app.add_subcommand("gen", "Generate source/target datasets");
  gen->add_option("--config", opt.gen_config, "Gen config path or preset (identity-shift, toy-default)")
      ->capture_default_str();
  gen->add_option("--out", opt.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Run adversarial augmentation training");
  auto* ensemble = app.add_subcommand("ensemble", "Train a gamma-grid ensemble");
  for (auto* sub : {train, ensemble}) {
    sub->add_option("--config", opt.run_config,
                    "Run config path, run manifest, or preset (toy-default, defaults)")
        ->capture_default_str();
    sub->add_option("--data", opt.data, "Training dataset (.bin or .csv)")->required();
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--seed", opt.seed_override, "Override train.seed");
    sub->add_option("--rounds", opt.rounds_override, "Override train.K")->check(CLI::NonNegativeNumber);
    sub->add_flag("--serial", opt.serial, "Force single-threaded max phases");
  }

  auto* verify = app.add_subcommand("verify", "Run numerical verification suites");
  std::vector<std::string> suite_choices = verify_suite_names();
  suite_choices.push_back("all");
  verify->add_option("--suite", opt.suite, "Suite name")
      ->check(CLI::IsMember(suite_choices))
      ->capture_default_str();
  verify->add_option("--trials", opt.trials, "Number of seeded instances")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_option("--seed", opt.verify_seed, "Base seed")->capture_default_str();
  verify->add_option("--report", opt.report, "Write the JSON report here instead of stdout");

  auto* eval = app.add_subcommand("eval", "Evaluate a model or ensemble");
  auto* model_opt = eval->add_option("--model", opt.model, "Model file (.adaw)");
  auto* ens_opt = eval->add_option("--ensemble", opt.ensemble, "Ensemble manifest (ensemble.json)");
  model_opt->excludes(ens_opt);
  eval->add_option("--data", opt.eval_data, "Dataset(s) to evaluate")->required();
  eval->add_option("--report", opt.report, "Also write the JSON report here");

  try {
    app.parse(argc, argv);
    if (eval->parsed() && opt.model.empty() && opt.ensemble.empty())
      throw CLI::RequiredError("eval requires --model or --ensemble");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) cmd_gen(opt);
    else if (train->parsed()) cmd_train(opt);
    else if (ensemble->parsed()) cmd_ensemble(opt);
    else if (eval->parsed()) cmd_eval(opt);
    else if (verify->parsed()) cmd_verify(opt);
  } catch (const VerificationFailed& e) {
    return kExitNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const CurvatureError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return 0;
}
