#include "advaug/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "advaug/errors.hpp"
#include "advaug/rng.hpp"

namespace advaug {

std::string_view to_string(ConstantMethod m) {
  return m == ConstantMethod::Analytic ? "analytic" : "empirical_x_safety";
}

namespace {

double operator_norm(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double max_column_norm(const Eigen::Ref<const Matrix>& theta_c) {
  return theta_c.colwise().norm().maxCoeff();
}

void require_dim(const PointwiseLoss& loss, const Vector& z0) {
  if (static_cast<std::size_t>(z0.size()) != loss.dim())
    throw DimensionError("anchor has dimension " + std::to_string(z0.size()) + ", loss expects " +
                         std::to_string(loss.dim()));
}

void require_curvature(double gamma, double bound, const char* what) {
  if (!(gamma > bound))
    throw CurvatureError(std::string(what) + ": gamma = " + std::to_string(gamma) +
                         " does not exceed the curvature bound " + std::to_string(bound));
}

}  // namespace

double softmax_curvature_bound(const Eigen::Ref<const Matrix>& theta_c) {
  const Eigen::RowVectorXd norms = theta_c.colwise().norm();
  return 2.0 * norms.maxCoeff() * norms.sum();
}

LipschitzCertificate lipschitz_constants(const Eigen::Ref<const Matrix>& theta_c,
                                         const L2Sampling& sampling) {
  const double max_norm = max_column_norm(theta_c);
  if (!(max_norm > 0.0)) throw std::invalid_argument("lipschitz_constants: theta_c is zero");

  LipschitzCertificate cert;
  cert.L0 = 2.0 * max_norm;
  cert.L_theta = softmax_curvature_bound(theta_c);
  cert.L1 = cert.L_theta;

  // Pairs are drawn where logits are O(1) and the Hessian moves fastest; every
  // other pair is a near-infinitesimal displacement probing the local slope.
  const auto p = theta_c.rows();
  const double scale = 1.0 / max_norm;
  Rng rng(sampling.seed);
  double best = 0.0;
  for (std::size_t k = 0; k < sampling.pairs; ++k) {
    Vector z(p), dir(p);
    for (Eigen::Index i = 0; i < p; ++i) z(i) = 2.5 * scale * rng.normal();
    for (Eigen::Index i = 0; i < p; ++i) dir(i) = rng.normal();
    dir.normalize();
    const double radius = (k % 2 == 0) ? 1e-4 * scale : rng.uniform(0.05, 2.0) * scale;
    const Vector z2 = z + radius * dir;
    const double ratio =
        operator_norm(hessian_z_loss(theta_c, z) - hessian_z_loss(theta_c, z2)) / (z2 - z).norm();
    best = std::max(best, ratio);
  }
  cert.L2 = sampling.safety * best;
  cert.L2_method = ConstantMethod::EmpiricalSafety;
  return cert;
}

SoftmaxLoss::SoftmaxLoss(Matrix theta_c, std::size_t label, std::optional<double> l2_override,
                         L2Sampling sampling)
    : theta_c_(std::move(theta_c)), label_(label), l2_override_(l2_override), sampling_(sampling) {
  if (label_ >= static_cast<std::size_t>(theta_c_.cols()))
    throw DimensionError("SoftmaxLoss: label out of range");
}

double SoftmaxLoss::value(const Vector& z) const { return loss_z(theta_c_, z, label_); }
Vector SoftmaxLoss::grad(const Vector& z) const { return grad_z_loss(theta_c_, z, label_); }
Matrix SoftmaxLoss::hessian(const Vector& z) const { return hessian_z_loss(theta_c_, z); }
double SoftmaxLoss::curvature_bound() const { return softmax_curvature_bound(theta_c_); }

LipschitzCertificate SoftmaxLoss::certificate() const {
  if (l2_override_) {
    LipschitzCertificate cert;
    cert.L0 = 2.0 * max_column_norm(theta_c_);
    cert.L_theta = softmax_curvature_bound(theta_c_);
    cert.L1 = cert.L_theta;
    cert.L2 = *l2_override_;
    return cert;
  }
  return lipschitz_constants(theta_c_, sampling_);
}

LipschitzCertificate LinearLoss::certificate() const {
  LipschitzCertificate cert;
  cert.L0 = a_.norm();
  return cert;
}

QuadraticLoss::QuadraticLoss(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != A_.cols() || A_.rows() != b_.size())
    throw DimensionError("QuadraticLoss: shape mismatch");
  A_ = 0.5 * (A_ + A_.transpose());
  norm_ = operator_norm(A_);
}

LipschitzCertificate QuadraticLoss::certificate() const {
  LipschitzCertificate cert;
  cert.L0 = std::numeric_limits<double>::infinity();
  cert.L1 = norm_;
  cert.L_theta = norm_;
  return cert;
}

void assert_surrogate_ordering(double phi, double loss_at_anchor) {
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(loss_at_anchor));
  if (!(phi >= loss_at_anchor - slack))
    throw std::logic_error("surrogate ordering violated: phi = " + std::to_string(phi) +
                           " < loss = " + std::to_string(loss_at_anchor));
}

SurrogateResult maximize_z_exact(const PointwiseLoss& loss, const Vector& z0, double gamma,
                                 const SolverOptions& options) {
  require_dim(loss, z0);
  const double l1 = loss.curvature_bound();
  require_curvature(gamma, l1, "maximize_z_exact");
  if (!(options.tol > 0.0)) throw std::invalid_argument("maximize_z_exact: tol must be positive");

  const auto p = z0.size();
  auto objective = [&](const Vector& z) { return loss.value(z) - 0.5 * gamma * (z - z0).squaredNorm(); };
  auto ascent_grad = [&](const Vector& z) -> Vector { return loss.grad(z) - gamma * (z - z0); };

  SurrogateResult res;
  res.gamma = gamma;
  res.loss_at_anchor = loss.value(z0);
  Vector z = z0;
  double h = res.loss_at_anchor;
  Vector g = ascent_grad(z);

  for (int it = 0; it < options.max_iterations && g.norm() > options.tol; ++it) {
    // gamma I - H is positive definite because gamma > L1 >= ||H||.
    const Matrix system = gamma * Matrix::Identity(p, p) - loss.hessian(z);
    const Vector newton = system.ldlt().solve(g);

    bool moved = false;
    for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
      const bool is_newton = attempt == 0;
      const Vector dir = is_newton ? newton : Vector(g / gamma);
      const double slope = g.dot(dir);
      for (double t = 1.0; t > 1e-12; t *= 0.5) {
        const Vector trial = z + t * dir;
        const double h_trial = objective(trial);
        if (h_trial >= h + 1e-4 * t * slope) {
          z = trial;
          h = h_trial;
          moved = true;
          break;
        }
        // Inside the quadratic-convergence region the objective change drops
        // below rounding; accept a full Newton step that shrinks the gradient.
        if (t == 1.0 && is_newton && ascent_grad(trial).norm() < 0.5 * g.norm() &&
            std::abs(h_trial - h) <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(h))) {
          z = trial;
          h = h_trial;
          moved = true;
          break;
        }
      }
    }
    if (!moved) break;
    g = ascent_grad(z);
    ++res.ascent_steps;
  }

  res.grad_norm = g.norm();
  if (!(res.grad_norm <= options.tol))
    throw ConvergenceError("maximize_z_exact: gradient norm " + std::to_string(res.grad_norm) +
                               " above tolerance after " + std::to_string(res.ascent_steps) +
                               " steps",
                           z);
  res.maximizer = std::move(z);
  res.phi = h;
  res.epsilon_cert = options.tol * options.tol / (2.0 * (gamma - l1));
  assert_surrogate_ordering(res.phi, res.loss_at_anchor);
  return res;
}

Vector newton_proxy(const PointwiseLoss& loss, const Vector& z0, double gamma) {
  require_dim(loss, z0);
  const Matrix hess = loss.hessian(z0);
  require_curvature(gamma, operator_norm(hess), "newton_proxy");
  const auto p = z0.size();
  const Matrix system = gamma * Matrix::Identity(p, p) - hess;
  return z0 + system.ldlt().solve(loss.grad(z0));
}

BoundReport check_newton_bound(const PointwiseLoss& loss, const Vector& z0, double gamma, double tol) {
  require_curvature(gamma, loss.curvature_bound(), "check_newton_bound");
  return check_newton_bound(loss, loss.certificate(), z0, gamma, tol);
}

BoundReport check_newton_bound(const PointwiseLoss& loss, const LipschitzCertificate& constants,
                           const Vector& z0, double gamma, double tol) {
  const SurrogateResult sol = maximize_z_exact(loss, z0, gamma, {tol, 200});
  const Vector proxy = newton_proxy(loss, z0, gamma);
  const double l0 = constants.L0, l1 = constants.L1, l2 = constants.L2;
  const double eps = sol.epsilon_cert;

  BoundReport r;
  r.gamma = gamma;
  r.epsilon = eps;
  r.constants = constants;
  r.lhs = (sol.maximizer - proxy).squaredNorm();
  double cubic = 0.0;
  if (l2 > 0.0) {
    cubic = l2 / (3.0 * (gamma - l1)) *
            (std::pow(5.0 * l0 / gamma, 3) + std::pow(l0 / (gamma - l1), 3) +
             std::pow(2.0 * eps / gamma, 1.5));
  }
  r.rhs = 2.0 * eps / (gamma - l1) + cubic;
  r.pass = r.lhs <= r.rhs;
  return r;
}

BoundReport check_displacement_bound(const PointwiseLoss& loss, const Vector& z0, double gamma, double tol) {
  require_curvature(gamma, loss.curvature_bound(), "check_displacement_bound");
  return check_displacement_bound(loss, loss.certificate(), z0, gamma, tol);
}

BoundReport check_displacement_bound(const PointwiseLoss& loss, const LipschitzCertificate& constants,
                         const Vector& z0, double gamma, double tol) {
  const SurrogateResult sol = maximize_z_exact(loss, z0, gamma, {tol, 200});
  BoundReport r;
  r.gamma = gamma;
  r.epsilon = sol.epsilon_cert;
  r.constants = constants;
  r.lhs = (sol.maximizer - z0 - loss.grad(z0) / gamma).norm();
  r.rhs = 4.0 * constants.L0 / gamma + std::sqrt(2.0 * sol.epsilon_cert / gamma);
  r.pass = r.lhs <= r.rhs;
  return r;
}

SandwichReport check_gap_sandwich(const Eigen::Ref<const Matrix>& theta_c, const Vector& z,
                                       std::size_t y, double gamma, double tol) {
  const SoftmaxLoss loss(theta_c, y);
  SandwichReport r;
  r.gamma = gamma;
  r.L = loss.curvature_bound();
  require_curvature(gamma, r.L, "check_gap_sandwich");
  // ||grad h|| cannot drop below rounding of gamma (z - z0); widen tol to
  // that floor (epsilon grows with it, so the certificate stays honest).
  const double floor = 16.0 * std::numeric_limits<double>::epsilon() * gamma * (1.0 + z.norm());
  const SurrogateResult sol = maximize_z_exact(loss, z, gamma, {std::max(tol, floor), 200});
  r.R = loss.grad(z).squaredNorm();
  r.gap = sol.phi - sol.loss_at_anchor;
  r.epsilon = sol.epsilon_cert;
  r.lower = r.R / (2.0 * (gamma + r.L));
  r.upper = r.R / (2.0 * (gamma - r.L));
  r.stated_lower = r.R / (gamma + r.L);
  r.stated_upper = r.R / (gamma - r.L);
  // The computed phi is within epsilon below the true supremum, plus rounding.
  const double fp = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(sol.loss_at_anchor));
  r.pass_lower = r.gap + r.epsilon + fp >= r.lower;
  r.pass_upper = r.gap <= r.upper + fp;
  r.pass_stated_upper = r.gap <= r.stated_upper + fp;
  r.stated_lower_holds = r.gap + r.epsilon + fp >= r.stated_lower;
  r.pass = r.pass_lower && r.pass_upper && r.pass_stated_upper;
  return r;
}

std::unique_ptr<PointwiseLoss> SoftmaxFamily::at(const Vector& params) const {
  return std::make_unique<SoftmaxLoss>(unflatten(params), label_);
}

Matrix SoftmaxFamily::unflatten(const Vector& params) const {
  if (static_cast<std::size_t>(params.size()) != p_ * m_)
    throw DimensionError("SoftmaxFamily: parameter count mismatch");
  return ConstRowMatrixMap(params.data(), static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(m_));
}

Vector SoftmaxFamily::flatten(const Eigen::Ref<const Matrix>& theta_c) {
  Vector out(theta_c.size());
  RowMatrixMap(out.data(), theta_c.rows(), theta_c.cols()) = theta_c;
  return out;
}

Vector SoftmaxFamily::param_grad(const Vector& params, const Vector& z) const {
  const Matrix theta = unflatten(params);
  Vector residual = softmax_probs(theta, z);
  residual(static_cast<Eigen::Index>(label_)) -= 1.0;
  return flatten(z * residual.transpose());
}

double SoftmaxFamily::curvature_bound(const Vector& params) const {
  return softmax_curvature_bound(unflatten(params));
}

std::unique_ptr<PointwiseLoss> LinearFamily::at(const Vector& params) const {
  if (params.size() < 1) throw DimensionError("LinearFamily: empty parameter vector");
  return std::make_unique<LinearLoss>(params.head(params.size() - 1), params(params.size() - 1));
}

Vector LinearFamily::param_grad(const Vector& params, const Vector& z) const {
  if (z.size() + 1 != params.size()) throw DimensionError("LinearFamily: dimension mismatch");
  Vector g(params.size());
  g.head(z.size()) = z;
  g(z.size()) = 1.0;
  return g;
}

EnvelopeReport envelope_grad_check(const ParametricLoss& family, const Vector& params,
                                   const Vector& z0, double gamma, double fd_step, double tol) {
  require_curvature(gamma, family.curvature_bound(params), "envelope_grad_check");
  const SolverOptions opts{tol, 200};
  const SurrogateResult center = maximize_z_exact(*family.at(params), z0, gamma, opts);

  EnvelopeReport r;
  r.gamma = gamma;
  r.analytic = family.param_grad(params, center.maximizer);
  r.numeric.resize(params.size());
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    Vector plus = params, minus = params;
    plus(k) += fd_step;
    minus(k) -= fd_step;
    const double phi_plus = maximize_z_exact(*family.at(plus), z0, gamma, opts).phi;
    const double phi_minus = maximize_z_exact(*family.at(minus), z0, gamma, opts).phi;
    r.numeric(k) = (phi_plus - phi_minus) / (2.0 * fd_step);
  }
  const double denom = std::max(r.numeric.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  r.max_rel_error = (r.analytic - r.numeric).cwiseAbs().maxCoeff() / denom;
  return r;
}

EnvelopeReport envelope_grad_check(const Network& net, const LabeledExample& ex, double gamma,
                                   double fd_step, double tol) {
  const SoftmaxFamily family(net.feature_dim(), net.num_classes(), ex.label);
  return envelope_grad_check(family, SoftmaxFamily::flatten(net.theta_c()), features(net, ex.x),
                             gamma, fd_step, tol);
}

double penalized_objective(const Network& net, const Vector& x, const LabeledExample& anchor,
                           double gamma, CostSpace space) {
  const Vector z = features(net, x);
  const double l = loss_z(net.theta_c(), z, anchor.label);
  if (space == CostSpace::Semantic) return l - 0.5 * gamma * (z - features(net, anchor.x)).squaredNorm();
  return l - 0.5 * gamma * (x - anchor.x).squaredNorm();
}

LabeledExample ascend_x(const Network& net, const LabeledExample& start,
                        const LabeledExample& anchor, double gamma, double eta, int t_max,
                        CostSpace space) {
  if (start.label != anchor.label)
    throw std::invalid_argument("ascend_x: example and anchor labels differ");
  if (!(eta >= 0.0)) throw std::invalid_argument("ascend_x: eta must be nonnegative");
  if (t_max < 1) throw std::invalid_argument("ascend_x: t_max must be at least 1");
  if (start.x.size() != anchor.x.size()) throw DimensionError("ascend_x: dimension mismatch");

  const Vector z_anchor = features(net, anchor.x);
  LabeledExample out{start.x, anchor.label};
  for (int t = 0; t < t_max; ++t) {
    Vector step;
    if (space == CostSpace::Semantic) {
      const Vector z = features(net, out.x);
      const Vector dz = grad_z_loss(net.theta_c(), z, out.label) - gamma * (z - z_anchor);
      step = backprop_features(net, out.x, dz).input_grad;
    } else {
      step = grad_input_loss(net, out) - gamma * (out.x - anchor.x);
    }
    if (!step.allFinite())
      throw NumericalError("ascend_x: non-finite gradient at iteration " + std::to_string(t));
    out.x += eta * step;
  }
  if (!out.x.allFinite()) throw NumericalError("ascend_x: iterate diverged");
  return out;
}

}  // namespace advaug
