#include "advaug/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>

#include <json.hpp>

#include "advaug/errors.hpp"
#include "advaug/model_io.hpp"

namespace advaug {

std::string_view to_string(Selection s) {
  return s == Selection::MaxLogit ? "max_logit" : "max_softmax";
}

Selection selection_from_string(std::string_view name) {
  if (name == "max_logit") return Selection::MaxLogit;
  if (name == "max_softmax") return Selection::MaxSoftmax;
  throw std::invalid_argument("unknown selection rule '" + std::string(name) + "'");
}

EnsembleModel::EnsembleModel(std::vector<EnsembleMember> members, Selection selection)
    : members_(std::move(members)), selection_(selection) {
  if (members_.empty()) throw std::invalid_argument("ensemble needs at least one member");
  std::set<std::pair<double, std::uint64_t>> keys;
  for (const auto& m : members_) {
    if (m.net.layer_dims() != members_.front().net.layer_dims())
      throw DimensionError("ensemble members must share input and class dimensions");
    if (!keys.insert({m.gamma, m.seed}).second)
      throw std::invalid_argument("ensemble members must have distinct (gamma, seed) pairs");
  }
}

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers; each job writes only
// its own slot, so results do not depend on scheduling.
template <typename Job>
void run_jobs(std::size_t n, std::size_t threads, Job&& job) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

EnsembleModel train_members(const Dataset& dataset, const std::vector<TrainConfig>& cfgs,
                            const Architecture& arch, Selection selection, std::size_t threads) {
  std::vector<std::optional<Network>> nets(cfgs.size());
  run_jobs(cfgs.size(), threads, [&](std::size_t i) {
    TrainConfig cfg = cfgs[i];
    cfg.threads = 1;  // parallelism is across members here
    Network net0 = make_network(arch, dataset.dim, dataset.num_classes, cfg.seed);
    nets[i] = train(std::move(net0), dataset, cfg).net;
  });
  std::vector<EnsembleMember> members;
  for (std::size_t i = 0; i < cfgs.size(); ++i)
    members.push_back({cfgs[i].gamma, cfgs[i].seed, std::move(*nets[i])});
  return EnsembleModel(std::move(members), selection);
}

}  // namespace

EnsembleModel train_ensemble(const Dataset& dataset, const TrainConfig& base_cfg,
                             const Architecture& arch, const std::vector<double>& gamma_grid,
                             Selection selection, std::size_t threads) {
  if (gamma_grid.empty()) throw std::invalid_argument("train_ensemble: empty gamma grid");
  std::vector<TrainConfig> cfgs;
  for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
    TrainConfig cfg = base_cfg;
    cfg.gamma = gamma_grid[i];
    cfg.seed = base_cfg.seed ^ static_cast<std::uint64_t>(i);
    cfgs.push_back(cfg);
  }
  return train_members(dataset, cfgs, arch, selection, threads);
}

EnsembleModel train_baseline_ensemble(const Dataset& dataset, const TrainConfig& base_cfg,
                                      const Architecture& arch, std::size_t size,
                                      Selection selection, std::size_t threads) {
  if (size == 0) throw std::invalid_argument("train_baseline_ensemble: size must be positive");
  std::vector<TrainConfig> cfgs;
  for (std::size_t i = 0; i < size; ++i) {
    TrainConfig cfg = base_cfg;
    cfg.rounds = 0;
    cfg.seed = base_cfg.seed ^ static_cast<std::uint64_t>(i);
    cfgs.push_back(cfg);
  }
  return train_members(dataset, cfgs, arch, selection, threads);
}

double member_score(const Network& net, const Vector& x, Selection selection) {
  const Vector z = features(net, x);
  if (selection == Selection::MaxLogit) return logits(net.theta_c(), z).maxCoeff();
  return softmax_probs(net.theta_c(), z).maxCoeff();
}

std::size_t select(const EnsembleModel& ens, const Vector& x) {
  std::size_t best = 0;
  double best_score = member_score(ens.members()[0].net, x, ens.selection());
  for (std::size_t u = 1; u < ens.size(); ++u) {
    const double score = member_score(ens.members()[u].net, x, ens.selection());
    if (score > best_score) {
      best = u;
      best_score = score;
    }
  }
  return best;
}

std::size_t predict(const EnsembleModel& ens, const Vector& x) {
  return predict(ens.members()[select(ens, x)].net, x);
}

double accuracy(const Network& net, const Dataset& ds) {
  if (ds.examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : ds.examples) hits += predict(net, ex.x) == ex.label;
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

double accuracy(const EnsembleModel& ens, const Dataset& ds) {
  if (ds.examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : ds.examples) hits += predict(ens, ex.x) == ex.label;
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

void write_ensemble(const std::filesystem::path& dir, const EnsembleModel& ens) {
  std::filesystem::create_directories(dir / "members");
  nlohmann::json manifest{{"selection", to_string(ens.selection())},
                          {"members", nlohmann::json::array()}};
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const auto& m = ens.members()[i];
    const std::string rel = "members/member_" + std::to_string(i) + ".adaw";
    write_model((dir / rel).string(), m.net);
    manifest["members"].push_back({{"gamma", m.gamma}, {"seed", m.seed}, {"model", rel}});
  }
  std::ofstream out(dir / "ensemble.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

EnsembleModel read_ensemble(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw FormatError("cannot open ensemble manifest '" + manifest.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("ensemble manifest: " + std::string(e.what()));
  }
  std::vector<EnsembleMember> members;
  Selection selection = Selection::MaxLogit;
  try {
    for (const auto& m : j.at("members")) {
      const std::filesystem::path path = manifest.parent_path() / m.at("model").get<std::string>();
      members.push_back({m.at("gamma").get<double>(), m.at("seed").get<std::uint64_t>(),
                         read_model(path.string())});
    }
    selection = selection_from_string(j.value("selection", std::string("max_logit")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("ensemble manifest: " + std::string(e.what()));
  }
  return EnsembleModel(std::move(members), selection);
}

}  // namespace advaug
