#include "advaug/config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace advaug {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.contains(key))
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const DomainSpec& spec) {
  json shift{{"rotation", spec.shift.rotation},
             {"scale", spec.shift.scale},
             {"feature_noise", spec.shift.feature_noise},
             {"translation", std::vector<double>(spec.shift.translation.data(),
                                                 spec.shift.translation.data() +
                                                     spec.shift.translation.size())}};
  return {{"generator", to_string(spec.generator)}, {"num_classes", spec.num_classes},
          {"dim", spec.dim},                          {"num_samples", spec.num_samples},
          {"seed", spec.seed},                        {"shift", shift}};
}

DomainSpec domain_from_json(const json& j) {
  check_keys(j, {"name", "generator", "num_classes", "dim", "num_samples", "seed", "shift"}, "domain");
  DomainSpec spec;
  if (j.contains("generator")) spec.generator = generator_from_string(j.at("generator").get<std::string>());
  read(j, "num_classes", spec.num_classes);
  read(j, "dim", spec.dim);
  read(j, "num_samples", spec.num_samples);
  read(j, "seed", spec.seed);
  if (j.contains("shift")) {
    const json& s = j.at("shift");
    check_keys(s, {"rotation", "translation", "scale", "feature_noise"}, "shift");
    read(s, "rotation", spec.shift.rotation);
    read(s, "scale", spec.shift.scale);
    read(s, "feature_noise", spec.shift.feature_noise);
    if (s.contains("translation")) {
      const auto t = s.at("translation").get<std::vector<double>>();
      spec.shift.translation = Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
    }
  }
  validate(spec);
  return spec;
}

json to_json(const GenConfig& cfg) {
  json domains = json::array();
  for (const auto& d : cfg.domains) {
    json entry = to_json(d.spec);
    entry["name"] = d.name;
    domains.push_back(entry);
  }
  return {{"domains", domains}};
}

GenConfig gen_config_from_json(const json& j) {
  check_keys(j, {"domains"}, "gen config");
  GenConfig cfg;
  std::set<std::string> names;
  for (const auto& d : j.at("domains")) {
    NamedDomain nd{d.at("name").get<std::string>(), domain_from_json(d)};
    if (nd.name.empty() || nd.name.find('/') != std::string::npos)
      throw std::invalid_argument("gen config: invalid domain name '" + nd.name + "'");
    if (!names.insert(nd.name).second)
      throw std::invalid_argument("gen config: duplicate domain '" + nd.name + "'");
    cfg.domains.push_back(std::move(nd));
  }
  return cfg;
}

json to_json(const TrainConfig& c) {
  json j{{"alpha", c.alpha},
         {"eta", c.eta},
         {"gamma", c.gamma},
         {"K", c.rounds},
         {"T_min", c.t_min},
         {"T_max", c.t_max},
         {"T_final", c.t_final},
         {"batch_size", c.batch_size},
         {"optimizer", c.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
         {"beta1", c.beta1},
         {"beta2", c.beta2},
         {"adam_eps", c.adam_eps},
         {"seed", c.seed},
         {"cost_space", c.cost_space == CostSpace::Semantic ? "semantic" : "input"},
         {"threads", c.threads}};
  j["n_append"] = c.n_append ? json(*c.n_append) : json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  check_keys(j, {"alpha", "eta", "gamma", "K", "T_min", "T_max", "T_final", "batch_size",
                 "optimizer", "beta1", "beta2", "adam_eps", "seed", "n_append", "cost_space",
                 "threads"},
             "train config");
  TrainConfig c;
  read(j, "alpha", c.alpha);
  read(j, "eta", c.eta);
  read(j, "gamma", c.gamma);
  read(j, "K", c.rounds);
  read(j, "T_min", c.t_min);
  read(j, "T_max", c.t_max);
  read(j, "T_final", c.t_final);
  read(j, "batch_size", c.batch_size);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  if (j.contains("optimizer")) {
    const auto name = j.at("optimizer").get<std::string>();
    if (name == "adam") c.optimizer = OptimizerKind::Adam;
    else if (name == "sgd") c.optimizer = OptimizerKind::Sgd;
    else throw std::invalid_argument("train config: unknown optimizer '" + name + "'");
  }
  if (j.contains("cost_space")) {
    const auto name = j.at("cost_space").get<std::string>();
    if (name == "semantic") c.cost_space = CostSpace::Semantic;
    else if (name == "input") c.cost_space = CostSpace::Input;
    else throw std::invalid_argument("train config: unknown cost_space '" + name + "'");
  }
  if (j.contains("n_append") && !j.at("n_append").is_null())
    c.n_append = j.at("n_append").get<std::size_t>();
  validate(c);
  return c;
}

json to_json(const Architecture& arch) {
  return {{"hidden", arch.hidden}, {"activation", to_string(arch.activation)}};
}

Architecture architecture_from_json(const json& j) {
  check_keys(j, {"hidden", "activation"}, "architecture");
  Architecture arch;
  read(j, "hidden", arch.hidden);
  if (j.contains("activation"))
    arch.activation = activation_from_string(j.at("activation").get<std::string>());
  if (arch.hidden.empty()) throw std::invalid_argument("architecture: need at least one hidden layer");
  for (auto w : arch.hidden)
    if (w == 0) throw std::invalid_argument("architecture: hidden widths must be positive");
  return arch;
}

json to_json(const RunConfig& cfg) {
  return {{"architecture", to_json(cfg.architecture)},
          {"train", to_json(cfg.train)},
          {"gamma_grid", cfg.gamma_grid},
          {"selection", to_string(cfg.selection)}};
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, {"architecture", "train", "gamma_grid", "selection"}, "run config");
  RunConfig cfg;
  if (j.contains("architecture")) cfg.architecture = architecture_from_json(j.at("architecture"));
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
  read(j, "gamma_grid", cfg.gamma_grid);
  if (j.contains("selection"))
    cfg.selection = selection_from_string(j.at("selection").get<std::string>());
  for (double g : cfg.gamma_grid)
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("run config: bad gamma in grid");
  return cfg;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 6; ++i) grid.push_back(std::pow(10.0, -i));
  return grid;
}

bool is_gen_preset(const std::string& name) {
  return name == "identity-shift" || name == "toy-default";
}

GenConfig gen_preset(const std::string& name) {
  DomainSpec base;  // gaussian_mixture, d = 2, m = 3, n = 600
  base.seed = 1;
  GenConfig cfg;
  if (name == "identity-shift") {
    DomainSpec test = base;
    test.seed = 2;
    cfg.domains = {{"source", base}, {"source_test", test}};
    return cfg;
  }
  if (name == "toy-default") {
    DomainSpec test = base;
    test.seed = 2;
    cfg.domains = {{"source", base}, {"source_test", test}};
    std::uint64_t seed = 3;
    for (const auto& sev : kSeverityLadder) {
      DomainSpec target = base;
      target.seed = seed++;
      target.shift.rotation = sev.rotation;
      cfg.domains.push_back({std::string(sev.name), target});
    }
    return cfg;
  }
  throw std::invalid_argument("unknown gen preset '" + name + "'");
}

bool is_run_preset(const std::string& name) {
  return name == "toy-default" || name == "defaults";
}

RunConfig run_preset(const std::string& name) {
  RunConfig cfg;
  cfg.gamma_grid = default_gamma_grid();
  if (name == "defaults") return cfg;  // alpha 1e-4, eta 1, T_min 100, T_max 15
  if (name == "toy-default") {
    cfg.train.alpha = 1e-3;
    cfg.train.t_final = 2000;
    return cfg;
  }
  throw std::invalid_argument("unknown run preset '" + name + "'");
}

}  // namespace advaug
