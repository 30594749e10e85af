#include "advaug/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "advaug/errors.hpp"
#include "advaug/model_io.hpp"

namespace advaug {

void validate(const TrainConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("train config: ") + what);
  };
  require(cfg.alpha >= 0.0 && std::isfinite(cfg.alpha), "alpha must be finite and >= 0");
  require(cfg.eta >= 0.0 && std::isfinite(cfg.eta), "eta must be finite and >= 0");
  require(cfg.gamma >= 0.0 && std::isfinite(cfg.gamma), "gamma must be finite and >= 0");
  require(cfg.rounds >= 0, "K must be >= 0");
  require(cfg.t_min >= 0 && cfg.t_final >= 0, "step counts must be >= 0");
  require(cfg.t_max >= 1, "T_max must be >= 1");
  require(cfg.batch_size >= 1, "batch size must be positive");
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(cfg.adam_eps > 0.0, "Adam epsilon must be positive");
  require(cfg.threads >= 1, "threads must be >= 1");
}

AugmentedDataset AugmentedDataset::from_original(Dataset ds) {
  AugmentedDataset aug;
  aug.original_count = ds.size();
  aug.provenance.assign(ds.size(), 0);
  aug.data = std::move(ds);
  return aug;
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, Eigen::Index n) : cfg_(cfg) {
    if (cfg.optimizer == OptimizerKind::Adam) {
      m_ = Vector::Zero(n);
      v_ = Vector::Zero(n);
    }
  }

  void step(Vector& params, const Vector& grad) {
    if (cfg_.optimizer == OptimizerKind::Sgd) {
      params -= cfg_.alpha * grad;
      return;
    }
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    params.array() -= cfg_.alpha * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.adam_eps);
  }

 private:
  const TrainConfig& cfg_;
  Vector m_, v_;
  int t_ = 0;
};

}  // namespace

MinPhaseResult min_phase(Network& net, const Dataset& dataset, const TrainConfig& cfg, int steps,
                         Rng& rng) {
  if (dataset.examples.empty()) throw std::invalid_argument("min_phase: empty dataset");
  if (steps < 0) throw std::invalid_argument("min_phase: negative step count");
  Optimizer opt(cfg, static_cast<Eigen::Index>(net.num_parameters()));
  Vector params = net.parameters();
  MinPhaseResult res;
  res.steps = steps;
  const int window = std::min(steps, 100);
  double total = 0.0, window_total = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

  for (int t = 0; t < steps; ++t) {
    Vector grad = Vector::Zero(params.size());
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const LabeledExample& ex = dataset.examples[rng.index(dataset.size())];
      batch_loss += loss(net, ex);
      grad += grad_params_loss(net, ex);
    }
    batch_loss *= inv_batch;
    grad *= inv_batch;
    if (!std::isfinite(batch_loss) || !grad.allFinite())
      throw NumericalError("min_phase: non-finite loss " + std::to_string(batch_loss) + " at step " +
                           std::to_string(t));
    opt.step(params, grad);
    if (!params.allFinite())
      throw NumericalError("min_phase: non-finite weights after step " + std::to_string(t));
    net.set_parameters(params);
    total += batch_loss;
    if (t >= steps - window) window_total += batch_loss;
  }
  if (steps > 0) {
    res.mean_loss = total / steps;
    res.last_window_loss = window_total / window;
  }
  return res;
}

MinPhaseResult min_phase(Network& net, const Dataset& dataset, const TrainConfig& cfg, int steps) {
  Rng rng(cfg.seed);
  return min_phase(net, dataset, cfg, steps, rng);
}

MaxPhaseResult max_phase(const Network& net, const Dataset& dataset, const TrainConfig& cfg,
                         std::size_t n_append, Rng& rng) {
  MaxPhaseResult res;
  if (n_append == 0) return res;
  if (dataset.examples.empty()) throw std::invalid_argument("max_phase: empty dataset");
  res.sources.reserve(n_append);
  for (std::size_t i = 0; i < n_append; ++i) res.sources.push_back(rng.index(dataset.size()));
  res.appended.resize(n_append);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const LabeledExample& src = dataset.examples[res.sources[i]];
      res.appended[i] = ascend_x(net, src, src, cfg.gamma, cfg.eta, cfg.t_max, cfg.cost_space);
    }
  };
  const std::size_t workers = std::min(cfg.threads, n_append);
  if (workers <= 1) {
    work(0, n_append);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_append + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w * chunk, std::min(n_append, (w + 1) * chunk));
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (std::size_t i = 0; i < n_append; ++i) {
    res.source_mean_loss += loss(net, dataset.examples[res.sources[i]]);
    res.appended_mean_loss += loss(net, res.appended[i]);
  }
  res.source_mean_loss /= static_cast<double>(n_append);
  res.appended_mean_loss /= static_cast<double>(n_append);
  return res;
}

TrainResult train(Network net0, const Dataset& dataset0, const TrainConfig& cfg) {
  validate(cfg);
  if (dataset0.examples.empty()) throw std::invalid_argument("train: empty dataset");
  if (dataset0.dim != net0.input_dim() || dataset0.num_classes != net0.num_classes())
    throw DimensionError("train: dataset shape does not match the network");

  using clock = std::chrono::steady_clock;
  auto elapsed_ms = [](clock::time_point since) {
    return std::chrono::duration<double, std::milli>(clock::now() - since).count();
  };

  TrainResult result{std::move(net0), AugmentedDataset::from_original(dataset0), {}, {}};
  Rng rng(cfg.seed);
  const std::size_t n_append = cfg.n_append.value_or(result.dataset.original_count);

  for (int k = 1; k <= cfg.rounds; ++k) {
    auto start = clock::now();
    const MinPhaseResult mr = min_phase(result.net, result.dataset.data, cfg, cfg.t_min, rng);
    result.log.phases.push_back({"min", k, mr.steps, mr.mean_loss, mr.last_window_loss, 0.0, 0.0,
                                 result.dataset.data.size()});
    result.log.wall_ms.push_back(elapsed_ms(start));

    start = clock::now();
    MaxPhaseResult xr = max_phase(result.net, result.dataset.data, cfg, n_append, rng);
    for (auto& ex : xr.appended) {
      result.dataset.data.examples.push_back(std::move(ex));
      result.dataset.provenance.push_back(k);
    }
    result.log.phases.push_back({"max", k, cfg.t_max, 0.0, 0.0, xr.source_mean_loss,
                                 xr.appended_mean_loss, result.dataset.data.size()});
    result.log.wall_ms.push_back(elapsed_ms(start));
    result.round_checkpoints.push_back(result.net);
  }

  auto start = clock::now();
  const MinPhaseResult fr = min_phase(result.net, result.dataset.data, cfg, cfg.t_final, rng);
  result.log.phases.push_back({"final", cfg.rounds, fr.steps, fr.mean_loss, fr.last_window_loss,
                               0.0, 0.0, result.dataset.data.size()});
  result.log.wall_ms.push_back(elapsed_ms(start));
  return result;
}

void write_run_outputs(const std::filesystem::path& dir, const TrainResult& result) {
  std::filesystem::create_directories(dir / "models");
  write_model((dir / "model.adaw").string(), result.net);
  for (std::size_t k = 0; k < result.round_checkpoints.size(); ++k)
    write_model((dir / "models" / ("round_" + std::to_string(k + 1) + ".adaw")).string(),
                result.round_checkpoints[k]);
  write_dataset((dir / "dataset.augmented.bin").string(), result.dataset.data);

  std::ofstream log(dir / "log.jsonl", std::ios::trunc);
  for (std::size_t i = 0; i < result.log.phases.size(); ++i) {
    const PhaseRecord& r = result.log.phases[i];
    nlohmann::json j{{"event", "phase"},        {"phase", r.phase},
                     {"round", r.round},        {"steps", r.steps},
                     {"dataset_size", r.dataset_size}};
    if (r.phase == "max") {
      j["source_mean_loss"] = r.source_mean_loss;
      j["appended_mean_loss"] = r.appended_mean_loss;
    } else {
      j["mean_loss"] = r.mean_loss;
      j["last_window_loss"] = r.last_window_loss;
    }
    if (i < result.log.wall_ms.size()) j["wall_ms"] = result.log.wall_ms[i];
    log << j.dump() << '\n';
  }
}

}  // namespace advaug
