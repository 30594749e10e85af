#include "advaug/transport.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "advaug/errors.hpp"
#include "advaug/lp.hpp"

namespace advaug {

TransportCost TransportCost::of(double value) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw std::invalid_argument("transport cost must be finite and nonnegative");
  TransportCost c;
  c.feasible_ = true;
  c.value_ = value;
  return c;
}

double TransportCost::value() const {
  if (!feasible_) throw std::logic_error("transport cost is INFEASIBLE");
  return value_;
}

TransportCost cost(const Vector& z, std::size_t y, const Vector& z2, std::size_t y2) {
  if (z.size() != z2.size())
    throw DimensionError("cost: points have dimensions " + std::to_string(z.size()) + " and " +
                         std::to_string(z2.size()));
  if (y != y2) return TransportCost::infeasible();
  return TransportCost::of(0.5 * (z - z2).squaredNorm());
}

TransportCost cost_theta(const Network& net, const Vector& x, std::size_t y, const Vector& x2,
                         std::size_t y2) {
  return cost(features(net, x), y, features(net, x2), y2);
}

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw std::invalid_argument("distribution needs at least one atom");
  if (atoms_.size() != weights_.size())
    throw std::invalid_argument("distribution: atom and weight counts differ");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].z.size() != atoms_.front().z.size())
      throw DimensionError("distribution: atoms have different dimensions");
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i]))
      throw std::invalid_argument("distribution: weights must be finite and nonnegative");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw std::invalid_argument("distribution: weights sum to " + std::to_string(total) +
                                ", expected 1");
}

namespace {

struct Arc {
  std::size_t from;
  std::size_t to;
  double cost;
};

std::vector<Arc> feasible_arcs(const std::vector<Atom>& from, const std::vector<Atom>& to) {
  std::vector<Arc> arcs;
  for (std::size_t i = 0; i < from.size(); ++i)
    for (std::size_t j = 0; j < to.size(); ++j) {
      const TransportCost c = cost(from[i].z, from[i].label, to[j].z, to[j].label);
      if (c.feasible()) arcs.push_back({i, j, c.value()});
    }
  return arcs;
}

void check_oracle_size(std::size_t n, const char* what) {
  if (n > kMaxOracleAtoms)
    throw std::invalid_argument(std::string(what) + ": more than " +
                                std::to_string(kMaxOracleAtoms) + " atoms");
}

}  // namespace

TransportCost wasserstein(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
  check_oracle_size(P.size(), "wasserstein");
  check_oracle_size(Q.size(), "wasserstein");
  if (P.dim() != Q.dim()) throw DimensionError("wasserstein: dimension mismatch");

  std::map<std::size_t, double> label_mass;
  for (std::size_t i = 0; i < P.size(); ++i) label_mass[P.atoms()[i].label] += P.weights()[i];
  for (std::size_t j = 0; j < Q.size(); ++j) label_mass[Q.atoms()[j].label] -= Q.weights()[j];
  for (const auto& [label, diff] : label_mass)
    if (std::abs(diff) > 1e-10) return TransportCost::infeasible();

  const std::vector<Arc> arcs = feasible_arcs(P.atoms(), Q.atoms());
  const auto rows = static_cast<Eigen::Index>(P.size() + Q.size());
  const auto cols = static_cast<Eigen::Index>(arcs.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd b(rows);
  Eigen::VectorXd c(cols);
  for (std::size_t i = 0; i < P.size(); ++i) b(static_cast<Eigen::Index>(i)) = P.weights()[i];
  for (std::size_t j = 0; j < Q.size(); ++j)
    b(static_cast<Eigen::Index>(P.size() + j)) = Q.weights()[j];
  for (Eigen::Index k = 0; k < cols; ++k) {
    const Arc& arc = arcs[static_cast<std::size_t>(k)];
    A(static_cast<Eigen::Index>(arc.from), k) = 1.0;
    A(static_cast<Eigen::Index>(P.size() + arc.to), k) = 1.0;
    c(k) = -arc.cost;
  }
  const LpSolution sol = solve_lp_max(A, b, c);
  if (sol.status != LpStatus::Optimal) return TransportCost::infeasible();
  return TransportCost::of(std::max(0.0, -sol.objective));
}

namespace {

void check_grid(const std::vector<Atom>& grid, const Vector& losses, const DiscreteDistribution& Q,
                double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("penalty weight gamma must be >= 0");
  if (grid.empty()) throw std::invalid_argument("grid must be nonempty");
  if (static_cast<std::size_t>(losses.size()) != grid.size())
    throw DimensionError("one loss value per grid point required");
  check_oracle_size(grid.size(), "penalty grid");
  check_oracle_size(Q.size(), "penalty grid");
  for (const Atom& q : Q.atoms()) {
    bool on_grid = false;
    for (const Atom& g : grid) on_grid = on_grid || (g.label == q.label && g.z == q.z);
    if (!on_grid) throw std::invalid_argument("every atom of Q must be a grid point");
  }
}

}  // namespace

double penalty_sup_oracle(const std::vector<Atom>& grid, const Vector& losses,
                          const DiscreteDistribution& Q, double gamma) {
  check_grid(grid, losses, Q, gamma);
  // Coupling M_{ij}: mass moved from Q atom i to grid point j. Row sums are
  // pinned to q_i; the grid marginal (the candidate P) is free.
  const std::vector<Arc> arcs = feasible_arcs(Q.atoms(), grid);
  const auto rows = static_cast<Eigen::Index>(Q.size());
  const auto cols = static_cast<Eigen::Index>(arcs.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd b(rows);
  Eigen::VectorXd c(cols);
  for (std::size_t i = 0; i < Q.size(); ++i) b(static_cast<Eigen::Index>(i)) = Q.weights()[i];
  for (Eigen::Index k = 0; k < cols; ++k) {
    const Arc& arc = arcs[static_cast<std::size_t>(k)];
    A(static_cast<Eigen::Index>(arc.from), k) = 1.0;
    c(k) = losses(static_cast<Eigen::Index>(arc.to)) - gamma * arc.cost;
  }
  const LpSolution sol = solve_lp_max(A, b, c);
  if (sol.status != LpStatus::Optimal)
    throw NumericalError("penalty_sup_oracle: transport LP did not reach an optimum");
  return sol.objective;
}

double grid_surrogate_expectation(const std::vector<Atom>& grid, const Vector& losses,
                                  const DiscreteDistribution& Q, double gamma) {
  check_grid(grid, losses, Q, gamma);
  double total = 0.0;
  for (std::size_t i = 0; i < Q.size(); ++i) {
    const Atom& q = Q.atoms()[i];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const TransportCost c = cost(grid[j].z, grid[j].label, q.z, q.label);
      if (c.feasible())
        best = std::max(best, losses(static_cast<Eigen::Index>(j)) - gamma * c.value());
    }
    total += Q.weights()[i] * best;
  }
  return total;
}

}  // namespace advaug
