#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "advaug/data.hpp"
#include "advaug/net.hpp"
#include "advaug/rng.hpp"
#include "advaug/surrogate.hpp"

namespace advaug {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  double alpha = 1e-4;  // learning rate
  double eta = 1.0;     // ascent step
  double gamma = 1.0;   // penalty weight
  int rounds = 2;       // K; 0 is plain ERM
  int t_min = 100;
  int t_max = 15;
  int t_final = 3000;
  std::size_t batch_size = 32;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  // Examples perturbed per max phase; defaults to the original dataset size.
  std::optional<std::size_t> n_append;
  CostSpace cost_space = CostSpace::Semantic;
  // Worker threads for the max phase; results do not depend on this.
  std::size_t threads = 1;
};

void validate(const TrainConfig& cfg);

struct AugmentedDataset {
  Dataset data;
  std::vector<int> provenance;  // 0 = original, k = appended in round k
  std::size_t original_count = 0;

  static AugmentedDataset from_original(Dataset ds);
};

struct MinPhaseResult {
  int steps = 0;
  double mean_loss = 0.0;         // mean minibatch loss over the phase
  double last_window_loss = 0.0;  // mean over the final min(100, steps) steps
};

// `steps` optimizer updates on minibatches drawn uniformly with replacement.
// Optimizer state starts fresh on every call.
MinPhaseResult min_phase(Network& net, const Dataset& dataset, const TrainConfig& cfg, int steps,
                         Rng& rng);
MinPhaseResult min_phase(Network& net, const Dataset& dataset, const TrainConfig& cfg, int steps);

struct MaxPhaseResult {
  std::vector<LabeledExample> appended;
  std::vector<std::size_t> sources;  // dataset index each appended example came from
  double source_mean_loss = 0.0;     // under the frozen model
  double appended_mean_loss = 0.0;
};

// Samples n_append examples uniformly and perturbs each with ascend_x,
// anchored at itself. The model is not modified.
MaxPhaseResult max_phase(const Network& net, const Dataset& dataset, const TrainConfig& cfg,
                         std::size_t n_append, Rng& rng);

struct PhaseRecord {
  std::string phase;  // "min", "max" or "final"
  int round = 0;
  int steps = 0;
  double mean_loss = 0.0;
  double last_window_loss = 0.0;
  double source_mean_loss = 0.0;    // max phases only
  double appended_mean_loss = 0.0;  // max phases only
  std::size_t dataset_size = 0;
  friend bool operator==(const PhaseRecord&, const PhaseRecord&) = default;
};

struct RunLog {
  std::vector<PhaseRecord> phases;
  std::vector<double> wall_ms;  // per phase; excluded from equality
  friend bool operator==(const RunLog& a, const RunLog& b) { return a.phases == b.phases; }
};

struct TrainResult {
  Network net;
  AugmentedDataset dataset;
  RunLog log;
  std::vector<Network> round_checkpoints;  // model after each minimax round
};

// K rounds of (min phase, max phase) followed by a final min phase.
TrainResult train(Network net0, const Dataset& dataset0, const TrainConfig& cfg);

// Writes model.adaw, models/round_k.adaw, log.jsonl and dataset.augmented.bin.
void write_run_outputs(const std::filesystem::path& dir, const TrainResult& result);

}  // namespace advaug
