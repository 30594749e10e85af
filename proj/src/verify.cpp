#include "advaug/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "advaug/errors.hpp"
#include "advaug/rng.hpp"
#include "advaug/surrogate.hpp"
#include "advaug/transport.hpp"

namespace advaug {

using nlohmann::json;

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"duality",  "newton",    "displacement",  "sandwich",
                                              "ordering", "gradients", "envelope"};
  return names;
}

std::uint64_t instance_seed(std::uint64_t seed, int trial) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(trial + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SoftmaxInstance random_softmax_instance(std::uint64_t seed, std::size_t p, std::size_t m) {
  Rng rng(seed);
  if (p == 0) p = 2 + rng.index(4);
  if (m == 0) m = 2 + rng.index(3);
  SoftmaxInstance inst;
  inst.theta_c.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < inst.theta_c.size(); ++i) inst.theta_c(i) = rng.normal();
  inst.z.resize(static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < inst.z.size(); ++i) inst.z(i) = rng.normal();
  inst.label = rng.index(m);
  return inst;
}

NetInstance random_net_instance(std::uint64_t seed, std::size_t num_classes) {
  Rng rng(seed);
  const std::size_t d = 2 + rng.index(4);
  const std::size_t hidden_layers = 1 + rng.index(2);
  std::vector<std::size_t> dims{d};
  for (std::size_t l = 0; l < hidden_layers; ++l) dims.push_back(2 + rng.index(5));
  const std::size_t m = num_classes ? num_classes : 2 + rng.index(3);
  dims.push_back(m);
  Network net = Network::initialized(dims, std::vector<Activation>(hidden_layers, Activation::Tanh),
                                     rng.next());
  // Nonzero biases so every parameter block is exercised.
  Vector params = net.parameters();
  for (std::size_t l = 0; l < net.num_hidden(); ++l) {
    auto b = net.bias(l);
    const auto off = b.data() - net.parameters().data();
    for (Eigen::Index i = 0; i < b.size(); ++i) params(off + i) = 0.5 * rng.normal();
  }
  net.set_parameters(params);
  LabeledExample ex;
  ex.x.resize(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < ex.x.size(); ++i) ex.x(i) = rng.normal();
  ex.label = rng.index(m);
  return {std::move(net), std::move(ex)};
}

namespace {

double rel_error(const Vector& analytic, const Vector& numeric) {
  const double denom = std::max(numeric.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (analytic - numeric).cwiseAbs().maxCoeff() / denom;
}

template <typename F>
Vector central_diff(F&& f, const Vector& at, double step) {
  Vector out(at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    Vector plus = at, minus = at;
    plus(k) += step;
    minus(k) -= step;
    out(k) = (f(plus) - f(minus)) / (2.0 * step);
  }
  return out;
}

json constants_json(const LipschitzCertificate& c) {
  return {{"L0", c.L0},
          {"L1", c.L1},
          {"L2", c.L2},
          {"L_theta", c.L_theta},
          {"L2_method", to_string(c.L2_method)}};
}

json duality_suite(int trials, std::uint64_t seed, bool& all_pass) {
  static constexpr double kGammas[] = {0.0, 0.5, 1.0, 10.0};
  json checks = json::array();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = instance_seed(seed, t);
    Rng rng(s);
    const std::size_t grid_size = 3 + rng.index(8);  // 3..10 atoms
    std::vector<Atom> grid;
    Vector losses(static_cast<Eigen::Index>(grid_size));
    for (std::size_t j = 0; j < grid_size; ++j) {
      Atom a;
      a.z = Vector(2);
      a.z << rng.normal(), rng.normal();
      a.label = rng.index(2);
      grid.push_back(a);
      losses(static_cast<Eigen::Index>(j)) = rng.uniform(0.1, 3.0);
    }
    const std::size_t q_size = 1 + rng.index(std::min<std::size_t>(4, grid_size));
    std::vector<Atom> q_atoms;
    std::vector<double> q_weights;
    double total = 0.0;
    for (std::size_t i = 0; i < q_size; ++i) {
      q_atoms.push_back(grid[rng.index(grid_size)]);
      q_weights.push_back(rng.uniform(0.1, 1.0));
      total += q_weights.back();
    }
    for (double& w : q_weights) w /= total;
    const DiscreteDistribution Q(q_atoms, q_weights);
    const double gamma = kGammas[t % 4];
    const double lhs = penalty_sup_oracle(grid, losses, Q, gamma);
    const double rhs = grid_surrogate_expectation(grid, losses, Q, gamma);
    const double rel = std::abs(lhs - rhs) / std::max(std::abs(rhs), std::numeric_limits<double>::min());
    const bool pass = rel <= 1e-8;
    all_pass = all_pass && pass;
    checks.push_back({{"seed", s}, {"gamma", gamma}, {"grid_atoms", grid_size}, {"q_atoms", q_size},
                      {"lhs", lhs}, {"rhs", rhs}, {"rel_error", rel}, {"tolerance", 1e-8},
                      {"pass", pass}});
  }
  return checks;
}

json bound_json(std::uint64_t s, const BoundReport& r, double multiple) {
  return {{"seed", s},          {"gamma", r.gamma},       {"gamma_over_L1", multiple},
          {"lhs", r.lhs},       {"rhs", r.rhs},           {"epsilon", r.epsilon},
          {"pass", r.pass},     {"constants", constants_json(r.constants)}};
}

json newton_or_displacement_suite(bool newton, int trials, std::uint64_t seed, bool& all_pass) {
  static constexpr double kMultiples[] = {2.0, 10.0, 100.0};
  json checks = json::array();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = instance_seed(seed, t);
    const SoftmaxInstance inst = random_softmax_instance(s);
    const SoftmaxLoss loss(inst.theta_c, inst.label);
    const LipschitzCertificate cert = newton ? loss.certificate()
                                             : SoftmaxLoss(inst.theta_c, inst.label, 0.0).certificate();
    double first_lhs = 0.0;
    for (double mult : kMultiples) {
      const double gamma = mult * cert.L1;
      const BoundReport r = newton ? check_newton_bound(loss, cert, inst.z, gamma, 1e-10)
                                   : check_displacement_bound(loss, cert, inst.z, gamma, 1e-10);
      json c = bound_json(s, r, mult);
      bool pass = r.pass;
      if (mult == kMultiples[0]) first_lhs = r.lhs;
      if (newton && mult == kMultiples[2]) {
        const bool decays = r.lhs < first_lhs;
        c["lhs_below_2L1_case"] = decays;
        pass = pass && decays;
        c["pass"] = pass;
      }
      all_pass = all_pass && pass;
      checks.push_back(c);
    }
  }
  return checks;
}

json sandwich_suite(int trials, std::uint64_t seed, bool& all_pass) {
  json checks = json::array();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = instance_seed(seed, t);
    const SoftmaxInstance inst = random_softmax_instance(s);
    const double L = softmax_curvature_bound(inst.theta_c);
    for (double mult : {2.0, 10.0}) {
      const SandwichReport r = check_gap_sandwich(inst.theta_c, inst.z, inst.label, mult * L);
      all_pass = all_pass && r.pass;
      checks.push_back({{"seed", s},
                        {"gamma", r.gamma},
                        {"gamma_over_L", mult},
                        {"L_theta", r.L},
                        {"R", r.R},
                        {"phi_minus_loss", r.gap},
                        {"epsilon", r.epsilon},
                        {"lower", r.lower},
                        {"upper", r.upper},
                        {"stated_upper", r.stated_upper},
                        {"stated_lower", r.stated_lower},
                        {"stated_lower_holds", r.stated_lower_holds},
                        {"pass", r.pass}});
    }
  }
  return checks;
}

json ordering_suite(int trials, std::uint64_t seed, bool& all_pass) {
  json checks = json::array();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = instance_seed(seed, t);
    const SoftmaxInstance inst = random_softmax_instance(s);
    const SoftmaxLoss loss(inst.theta_c, inst.label);
    const double L = loss.curvature_bound();
    const SurrogateResult lo = maximize_z_exact(loss, inst.z, 2.0 * L);
    const SurrogateResult hi = maximize_z_exact(loss, inst.z, 20.0 * L);
    // maximize_z_exact enforces phi >= loss; the gamma-ordering allows for the
    // solver's certified suboptimality.
    const bool monotone = lo.phi + lo.epsilon_cert >= hi.phi;
    all_pass = all_pass && monotone;
    checks.push_back({{"seed", s},
                      {"loss", lo.loss_at_anchor},
                      {"phi_2L", lo.phi},
                      {"phi_20L", hi.phi},
                      {"pass", monotone}});
  }
  return checks;
}

json gradients_suite(int trials, std::uint64_t seed, bool& all_pass) {
  json checks = json::array();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = instance_seed(seed, t);
    const NetInstance inst = random_net_instance(s);
    const GradientCheck g = check_gradients(inst.net, inst.example);
    const bool pass = g.z_rel_error <= 1e-5 && g.x_rel_error <= 1e-5 && g.theta_rel_error <= 1e-5 &&
                      g.hessian_abs_error <= 1e-5;
    all_pass = all_pass && pass;
    checks.push_back({{"seed", s},
                      {"z_rel_error", g.z_rel_error},
                      {"x_rel_error", g.x_rel_error},
                      {"theta_rel_error", g.theta_rel_error},
                      {"hessian_abs_error", g.hessian_abs_error},
                      {"tolerance", 1e-5},
                      {"pass", pass}});
  }
  return checks;
}

json envelope_suite(int trials, std::uint64_t seed, bool& all_pass) {
  json checks = json::array();
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = instance_seed(seed, t);
    const NetInstance inst = random_net_instance(s, 2);
    const double gamma = 10.0 * softmax_curvature_bound(inst.net.theta_c());
    const EnvelopeReport r = envelope_grad_check(inst.net, inst.example, gamma);
    const bool pass = r.max_rel_error <= 1e-4;
    all_pass = all_pass && pass;
    checks.push_back({{"seed", s},
                      {"gamma", gamma},
                      {"max_rel_error", r.max_rel_error},
                      {"tolerance", 1e-4},
                      {"pass", pass}});
  }
  return checks;
}

}  // namespace

GradientCheck check_gradients(const Network& net, const LabeledExample& ex, double step) {
  GradientCheck out;
  const Matrix theta_c = net.theta_c();
  const Vector z = features(net, ex.x);
  const std::size_t y = ex.label;

  out.z_rel_error = rel_error(grad_z_loss(theta_c, z, y),
                              central_diff([&](const Vector& v) { return loss_z(theta_c, v, y); }, z, step));
  out.x_rel_error = rel_error(grad_input_loss(net, ex), central_diff([&](const Vector& v) {
                                return loss(net, LabeledExample{v, y});
                              }, ex.x, step));
  Network probe = net;
  out.theta_rel_error = rel_error(grad_params_loss(net, ex), central_diff([&](const Vector& v) {
                                    probe.set_parameters(v);
                                    return loss(probe, ex);
                                  }, net.parameters(), step));

  const Matrix hess = hessian_z_loss(theta_c, z);
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    Vector plus = z, minus = z;
    plus(k) += step;
    minus(k) -= step;
    const Vector col = (grad_z_loss(theta_c, plus, y) - grad_z_loss(theta_c, minus, y)) / (2.0 * step);
    out.hessian_abs_error = std::max(out.hessian_abs_error, (hess.col(k) - col).cwiseAbs().maxCoeff());
  }
  return out;
}

json run_verify_suite(std::string_view suite, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("verify: trials must be positive");
  bool pass = true;
  json checks;
  if (suite == "duality") checks = duality_suite(trials, seed, pass);
  else if (suite == "newton") checks = newton_or_displacement_suite(true, trials, seed, pass);
  else if (suite == "displacement") checks = newton_or_displacement_suite(false, trials, seed, pass);
  else if (suite == "sandwich") checks = sandwich_suite(trials, seed, pass);
  else if (suite == "ordering") checks = ordering_suite(trials, seed, pass);
  else if (suite == "gradients") checks = gradients_suite(trials, seed, pass);
  else if (suite == "envelope") checks = envelope_suite(trials, seed, pass);
  else throw std::invalid_argument("unknown verify suite '" + std::string(suite) + "'");
  return {{"suite", suite}, {"trials", trials}, {"seed", seed}, {"pass", pass}, {"checks", checks}};
}

}  // namespace advaug
