#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "advaug/data.hpp"
#include "advaug/net.hpp"
#include "advaug/trainer.hpp"

namespace advaug {

// max_logit picks the member with the largest raw logit; max_softmax the one
// with the largest top-class probability.
enum class Selection { MaxLogit, MaxSoftmax };
std::string_view to_string(Selection s);
Selection selection_from_string(std::string_view name);

struct EnsembleMember {
  double gamma = 0.0;
  std::uint64_t seed = 0;
  Network net;
};

class EnsembleModel {
 public:
  // Needs at least one member, members with identical shapes, and distinct
  // (gamma, seed) pairs.
  EnsembleModel(std::vector<EnsembleMember> members, Selection selection = Selection::MaxLogit);

  const std::vector<EnsembleMember>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  Selection selection() const { return selection_; }

 private:
  std::vector<EnsembleMember> members_;
  Selection selection_;
};

// One trainer run per gamma; member i is initialized and trained with seed
// base_cfg.seed ^ i. Members train on up to `threads` workers; the result does
// not depend on the thread count.
EnsembleModel train_ensemble(const Dataset& dataset, const TrainConfig& base_cfg,
                             const Architecture& arch, const std::vector<double>& gamma_grid,
                             Selection selection = Selection::MaxLogit, std::size_t threads = 1);

// Same-size ensemble of ERM models differing only in seed.
EnsembleModel train_baseline_ensemble(const Dataset& dataset, const TrainConfig& base_cfg,
                                      const Architecture& arch, std::size_t size,
                                      Selection selection = Selection::MaxLogit, std::size_t threads = 1);

// Score used by select(): max logit or max softmax probability.
double member_score(const Network& net, const Vector& x, Selection selection);

// Argmax over members of member_score; ties go to the lowest index.
std::size_t select(const EnsembleModel& ens, const Vector& x);
std::size_t predict(const EnsembleModel& ens, const Vector& x);

double accuracy(const Network& net, const Dataset& ds);
double accuracy(const EnsembleModel& ens, const Dataset& ds);

// Writes members/member_<i>.adaw and the JSON manifest `ensemble.json`.
void write_ensemble(const std::filesystem::path& dir, const EnsembleModel& ens);
// Member paths in the manifest are resolved relative to the manifest.
EnsembleModel read_ensemble(const std::filesystem::path& manifest);

}  // namespace advaug
