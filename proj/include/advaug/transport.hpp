#pragma once

#include <cstddef>
#include <vector>

#include "advaug/net.hpp"

namespace advaug {

// Nonnegative transport cost, or INFEASIBLE for mass moved across labels.
class TransportCost {
 public:
  static TransportCost infeasible() { return TransportCost(); }
  static TransportCost of(double value);

  bool feasible() const { return feasible_; }
  // Throws std::logic_error when infeasible.
  double value() const;

  friend bool operator==(const TransportCost&, const TransportCost&) = default;

 private:
  TransportCost() = default;
  bool feasible_ = false;
  double value_ = 0.0;
};

// 1/2 ||z - z2||^2 when labels agree, INFEASIBLE otherwise.
TransportCost cost(const Vector& z, std::size_t y, const Vector& z2, std::size_t y2);

// cost() evaluated on the network's features.
TransportCost cost_theta(const Network& net, const Vector& x, std::size_t y, const Vector& x2,
                         std::size_t y2);

struct Atom {
  Vector z;
  std::size_t label = 0;
};

// Finite-support weighted point set in feature space.
class DiscreteDistribution {
 public:
  static constexpr double kWeightTolerance = 1e-12;

  // Throws std::invalid_argument unless weights are nonnegative and sum to 1.
  DiscreteDistribution(std::vector<Atom> atoms, std::vector<double> weights);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  std::size_t dim() const { return atoms_.empty() ? 0 : static_cast<std::size_t>(atoms_.front().z.size()); }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> weights_;
};

inline constexpr std::size_t kMaxOracleAtoms = 64;

// Exact optimal transport value under cost(); solved as a linear program over
// couplings with cross-label arcs removed. INFEASIBLE when some label's
// marginal masses differ.
TransportCost wasserstein(const DiscreteDistribution& P, const DiscreteDistribution& Q);

// sup_P { E_P[loss] - gamma * W(P, Q) } over all distributions on the finite
// grid, computed as a linear program over couplings whose Q-marginal is fixed.
// losses[j] is the loss at grid[j]; every atom of Q must be a grid point.
double penalty_sup_oracle(const std::vector<Atom>& grid, const Vector& losses,
                          const DiscreteDistribution& Q, double gamma);

// sum_i q_i max_j { losses[j] - gamma * cost(grid[j], atom_i) }: the expected
// per-atom robust surrogate restricted to the grid.
double grid_surrogate_expectation(const std::vector<Atom>& grid, const Vector& losses,
                                  const DiscreteDistribution& Q, double gamma);

}  // namespace advaug
