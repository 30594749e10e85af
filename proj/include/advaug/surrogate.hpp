#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "advaug/net.hpp"

namespace advaug {

enum class ConstantMethod { Analytic, EmpiricalSafety };
std::string_view to_string(ConstantMethod m);

// Smoothness constants of z -> loss(z):
//   L0  Lipschitz constant of the loss,
//   L1  Lipschitz constant of the gradient,
//   L2  Lipschitz constant of the Hessian (operator norm),
//   L_theta  2 max_j ||theta_{c,j}|| sum_j ||theta_{c,j}|| for softmax losses.
struct LipschitzCertificate {
  double L0 = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;
  double L_theta = 0.0;
  ConstantMethod L0_method = ConstantMethod::Analytic;
  ConstantMethod L1_method = ConstantMethod::Analytic;
  ConstantMethod L2_method = ConstantMethod::Analytic;
};

struct L2Sampling {
  std::size_t pairs = 10000;
  double safety = 2.0;
  std::uint64_t seed = 0x5eed;
};

// Analytic L0 = 2 max_j ||theta_{c,j}||, L1 = L_theta, and an empirical L2:
// the largest ||H(z) - H(z')|| / ||z - z'|| over seeded random pairs, times
// the safety factor.
LipschitzCertificate lipschitz_constants(const Eigen::Ref<const Matrix>& theta_c,
                                         const L2Sampling& sampling = {});

// L(theta) = 2 max_j ||theta_{c,j}|| sum_j ||theta_{c,j}||.
double softmax_curvature_bound(const Eigen::Ref<const Matrix>& theta_c);

// A loss in feature space for one fixed label.
class PointwiseLoss {
 public:
  virtual ~PointwiseLoss() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& z) const = 0;
  virtual Vector grad(const Vector& z) const = 0;
  virtual Matrix hessian(const Vector& z) const = 0;
  // Global Lipschitz constant of grad, i.e. L1; bounds ||hessian(z)||.
  virtual double curvature_bound() const = 0;
  virtual LipschitzCertificate certificate() const = 0;
};

class SoftmaxLoss final : public PointwiseLoss {
 public:
  // l2_override replaces the empirical Hessian-Lipschitz estimate.
  SoftmaxLoss(Matrix theta_c, std::size_t label, std::optional<double> l2_override = std::nullopt,
              L2Sampling sampling = {});

  std::size_t dim() const override { return static_cast<std::size_t>(theta_c_.rows()); }
  double value(const Vector& z) const override;
  Vector grad(const Vector& z) const override;
  Matrix hessian(const Vector& z) const override;
  double curvature_bound() const override;
  LipschitzCertificate certificate() const override;

  const Matrix& theta_c() const { return theta_c_; }
  std::size_t label() const { return label_; }

 private:
  Matrix theta_c_;
  std::size_t label_;
  std::optional<double> l2_override_;
  L2Sampling sampling_;
};

// a^T z + b.
class LinearLoss final : public PointwiseLoss {
 public:
  LinearLoss(Vector a, double b) : a_(std::move(a)), b_(b) {}
  std::size_t dim() const override { return static_cast<std::size_t>(a_.size()); }
  double value(const Vector& z) const override { return a_.dot(z) + b_; }
  Vector grad(const Vector&) const override { return a_; }
  Matrix hessian(const Vector&) const override { return Matrix::Zero(a_.size(), a_.size()); }
  double curvature_bound() const override { return 0.0; }
  LipschitzCertificate certificate() const override;

 private:
  Vector a_;
  double b_;
};

// 1/2 z^T A z + b^T z with A symmetric.
class QuadraticLoss final : public PointwiseLoss {
 public:
  QuadraticLoss(Matrix A, Vector b);
  std::size_t dim() const override { return static_cast<std::size_t>(b_.size()); }
  double value(const Vector& z) const override { return 0.5 * z.dot(A_ * z) + b_.dot(z); }
  Vector grad(const Vector& z) const override { return A_ * z + b_; }
  Matrix hessian(const Vector&) const override { return A_; }
  double curvature_bound() const override { return norm_; }
  // L0 is infinite: a quadratic is not globally Lipschitz.
  LipschitzCertificate certificate() const override;

 private:
  Matrix A_;
  Vector b_;
  double norm_;
};

struct SurrogateResult {
  Vector maximizer;
  double phi = 0.0;             // h(maximizer) = loss - gamma/2 ||z - z0||^2
  double loss_at_anchor = 0.0;  // loss(z0)
  int ascent_steps = 0;
  double grad_norm = 0.0;       // ||grad h|| at the maximizer
  double epsilon_cert = 0.0;    // tol^2 / (2 (gamma - L1))
  double gamma = 0.0;
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iterations = 200;
};

// Maximizes h(z) = loss(z) - gamma/2 ||z - z0||^2 by damped Newton ascent
// with backtracking, falling back to gradient steps. Requires gamma > L1 so h
// is (gamma - L1)-strongly concave. Enforces phi >= loss(z0).
SurrogateResult maximize_z_exact(const PointwiseLoss& loss, const Vector& z0, double gamma,
                                 const SolverOptions& options = {});

// z0 + (gamma I - H)^{-1} grad, the Tikhonov-regularized Newton step at z0.
Vector newton_proxy(const PointwiseLoss& loss, const Vector& z0, double gamma);

// Throws std::logic_error if phi falls below the unperturbed loss by more than
// rounding.
void assert_surrogate_ordering(double phi, double loss_at_anchor);

struct BoundReport {
  double gamma = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  double epsilon = 0.0;
  LipschitzCertificate constants;
};

// ||z*_eps - newton_proxy||^2 against
// 2 eps/(g - L1) + L2/(3 (g - L1)) {(5 L0/g)^3 + (L0/(g - L1))^3 + (2 eps/g)^{3/2}}.
BoundReport check_newton_bound(const PointwiseLoss& loss, const Vector& z0, double gamma,
                           double tol = 1e-10);
// Variant reusing precomputed constants (the empirical L2 is costly).
BoundReport check_newton_bound(const PointwiseLoss& loss, const LipschitzCertificate& constants,
                           const Vector& z0, double gamma, double tol = 1e-10);

// ||z*_eps - z0 - grad(z0)/g|| against 4 L0/g + sqrt(2 eps/g).
BoundReport check_displacement_bound(const PointwiseLoss& loss, const Vector& z0, double gamma,
                         double tol = 1e-10);
BoundReport check_displacement_bound(const PointwiseLoss& loss, const LipschitzCertificate& constants,
                         const Vector& z0, double gamma, double tol = 1e-10);

struct SandwichReport {
  double gamma = 0.0;
  double L = 0.0;          // L(theta)
  double R = 0.0;          // ||theta_{c,y} - sum_j p_j theta_{c,j}||^2
  double gap = 0.0;        // phi - loss
  double epsilon = 0.0;
  double lower = 0.0;      // R / (2 (g + L))
  double upper = 0.0;      // R / (2 (g - L))
  double stated_lower = 0.0;  // R / (g + L), recorded only
  double stated_upper = 0.0;  // R / (g - L)
  bool pass_lower = false;
  bool pass_upper = false;
  bool pass_stated_upper = false;
  bool stated_lower_holds = false;
  bool pass = false;
};

SandwichReport check_gap_sandwich(const Eigen::Ref<const Matrix>& theta_c, const Vector& z,
                                       std::size_t y, double gamma, double tol = 1e-12);

// A loss family indexed by a parameter vector, for envelope-theorem checks.
class ParametricLoss {
 public:
  virtual ~ParametricLoss() = default;
  virtual std::unique_ptr<PointwiseLoss> at(const Vector& params) const = 0;
  // Gradient of loss(params; z) with respect to params at fixed z.
  virtual Vector param_grad(const Vector& params, const Vector& z) const = 0;
  // Smallest gamma for which the inner problem is in contract.
  virtual double curvature_bound(const Vector& params) const = 0;
};

// Softmax loss with label y; params = theta_c flattened row-major (p x m).
class SoftmaxFamily final : public ParametricLoss {
 public:
  SoftmaxFamily(std::size_t p, std::size_t m, std::size_t label) : p_(p), m_(m), label_(label) {}
  std::unique_ptr<PointwiseLoss> at(const Vector& params) const override;
  Vector param_grad(const Vector& params, const Vector& z) const override;
  double curvature_bound(const Vector& params) const override;
  Matrix unflatten(const Vector& params) const;
  static Vector flatten(const Eigen::Ref<const Matrix>& theta_c);

 private:
  std::size_t p_, m_, label_;
};

// a^T z + b; params = [a; b].
class LinearFamily final : public ParametricLoss {
 public:
  std::unique_ptr<PointwiseLoss> at(const Vector& params) const override;
  Vector param_grad(const Vector& params, const Vector& z) const override;
  double curvature_bound(const Vector&) const override { return 0.0; }
};

struct EnvelopeReport {
  double gamma = 0.0;
  Vector analytic;  // param gradient of the loss at the inner maximizer
  Vector numeric;   // central differences of phi, inner problem re-solved
  double max_rel_error = 0.0;  // ||analytic - numeric||_inf / ||numeric||_inf
};

EnvelopeReport envelope_grad_check(const ParametricLoss& family, const Vector& params,
                                   const Vector& z0, double gamma, double fd_step = 1e-5,
                                   double tol = 1e-12);
// Network form: z0 = features(net, x), differentiating with respect to theta_c.
EnvelopeReport envelope_grad_check(const Network& net, const LabeledExample& ex, double gamma,
                                   double fd_step = 1e-5, double tol = 1e-12);

enum class CostSpace { Semantic, Input };

// loss(x, y) - gamma * c(x, anchor), with c measured on features (Semantic)
// or raw inputs (Input).
double penalized_objective(const Network& net, const Vector& x, const LabeledExample& anchor,
                           double gamma, CostSpace space = CostSpace::Semantic);

// Exactly t_max fixed-step ascent iterations on penalized_objective starting
// from `start`; returns the iterate labelled with the anchor's label.
LabeledExample ascend_x(const Network& net, const LabeledExample& start,
                        const LabeledExample& anchor, double gamma, double eta, int t_max,
                        CostSpace space = CostSpace::Semantic);

}  // namespace advaug
