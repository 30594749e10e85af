#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "advaug/net.hpp"

namespace advaug {

// Numerical verification suites behind `advaug verify`. Each returns a JSON
// report: {"suite", "trials", "seed", "pass", "checks": [...]}, one check
// object per instance with its seed, gamma, LHS, RHS, pass flag and constants.
//
//   duality   LP supremum over grid distributions vs expected per-atom surrogate
//   newton    Newton-proxy distance bound, gamma in {2, 10, 100} x L1
//   displacement  first-order displacement bound on the same sweep
//   sandwich  softmax surrogate gap sandwich, gamma in {2, 10} x L(theta)
//   ordering  phi >= loss and monotonicity in gamma, pairs (2L, 20L)
//   gradients analytic z / x / theta gradients and z-Hessian vs central differences
//   envelope  d phi / d theta_c vs loss gradient at the inner maximizer
const std::vector<std::string>& verify_suite_names();

nlohmann::json run_verify_suite(std::string_view suite, int trials, std::uint64_t seed);

// Per-instance seed derivation shared by all suites.
std::uint64_t instance_seed(std::uint64_t seed, int trial);

struct SoftmaxInstance {
  Matrix theta_c;
  Vector z;
  std::size_t label = 0;
};

// theta_c and z with standard normal entries; p, m drawn from [2, 5] and
// [2, 4] when passed as zero.
SoftmaxInstance random_softmax_instance(std::uint64_t seed, std::size_t p = 0, std::size_t m = 0);

// Small tanh network with random shape and a random example.
struct NetInstance {
  Network net;
  LabeledExample example;
};
NetInstance random_net_instance(std::uint64_t seed, std::size_t num_classes = 0);

struct GradientCheck {
  double z_rel_error = 0.0;
  double x_rel_error = 0.0;
  double theta_rel_error = 0.0;
  double hessian_abs_error = 0.0;  // entrywise
};

// Central differences with the given step against the analytic derivatives.
// Relative errors are ||analytic - numeric||_inf / ||numeric||_inf.
GradientCheck check_gradients(const Network& net, const LabeledExample& ex, double step = 1e-5);

}  // namespace advaug
