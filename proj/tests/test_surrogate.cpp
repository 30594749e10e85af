#include <doctest.h>

#include <cmath>

#include "advaug/errors.hpp"
#include "advaug/rng.hpp"
#include "advaug/surrogate.hpp"
#include "advaug/verify.hpp"
#include "oracles.hpp"

using namespace advaug;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

// phi - loss for the 2-class softmax by zooming grid search in long double.
double grid_gap_2d(const Matrix& theta, const Vector& z0, std::size_t y, double gamma) {
  const auto cols = oracle::columns(theta);
  auto f = [&](oracle::LD a, oracle::LD b) { return oracle::softmax_loss(cols, {a, b}, y); };
  const oracle::LD phi = oracle::grid_surrogate_2d(f, z0(0), z0(1), gamma, 2.0);
  return double(phi - f(z0(0), z0(1)));
}

}  // namespace

TEST_CASE("Lipschitz constants: closed forms and homogeneity") {
  const LipschitzCertificate c = lipschitz_constants(Matrix::Identity(2, 2));
  CHECK(c.L0 == doctest::Approx(2.0));
  CHECK(c.L1 == doctest::Approx(4.0));
  CHECK(c.L_theta == doctest::Approx(4.0));
  CHECK(c.L0_method == ConstantMethod::Analytic);
  CHECK(c.L2_method == ConstantMethod::EmpiricalSafety);
  CHECK(std::isfinite(c.L2));
  CHECK(c.L2 > 0.0);

  Rng rng(3);
  const Matrix theta = random_matrix(rng, 3, 4);
  const LipschitzCertificate base = lipschitz_constants(theta);
  CHECK(base.L1 <= base.L_theta);
  for (double s : {0.5, 3.0}) {
    const LipschitzCertificate scaled = lipschitz_constants(s * theta);
    CHECK(scaled.L0 == doctest::Approx(s * base.L0));
    CHECK(scaled.L_theta == doctest::Approx(s * s * base.L_theta));
  }
  CHECK(softmax_curvature_bound(theta) == doctest::Approx(base.L_theta));
  CHECK_THROWS_AS(lipschitz_constants(Matrix::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("empirical L2 is stable across disjoint sampling seeds") {
  Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    const Matrix theta = random_matrix(rng, 3, 4);
    const double a = lipschitz_constants(theta, {10000, 2.0, 101}).L2;
    const double b = lipschitz_constants(theta, {10000, 2.0, 202}).L2;
    CHECK(std::abs(a - b) <= 0.1 * std::max(a, b));
  }
}

TEST_CASE("maximize_z_exact: linear loss completes the square") {
  const Vector a = v2(1.5, -2.0);
  const LinearLoss loss(a, 0.3);
  const Vector z0 = v2(0.2, 0.7);
  for (double gamma : {0.5, 2.0, 40.0}) {
    const SurrogateResult r = maximize_z_exact(loss, z0, gamma);
    CHECK((r.maximizer - (z0 + a / gamma)).norm() <= 1e-12);
    CHECK(r.phi == doctest::Approx(a.dot(z0) + 0.3 + a.squaredNorm() / (2 * gamma)));
    CHECK(r.epsilon_cert >= 0.0);
    CHECK(r.gamma == gamma);
  }
}

TEST_CASE("maximize_z_exact: quadratic loss matches the first-order condition") {
  Matrix A(2, 2);
  A << 2.0, 0.5, 0.5, -1.0;
  const Vector b = v2(0.3, -0.4);
  const QuadraticLoss loss(A, b);
  const Vector z0 = v2(1.0, 2.0);
  const double gamma = 5.0;
  const SurrogateResult r = maximize_z_exact(loss, z0, gamma);
  const Vector expected = z0 + (gamma * Matrix::Identity(2, 2) - A).inverse() * (A * z0 + b);
  CHECK((r.maximizer - expected).norm() <= 1e-12);
  CHECK(loss.certificate().L2 == 0.0);
  CHECK(std::isinf(loss.certificate().L0));
  CHECK(loss.curvature_bound() == doctest::Approx(A.selfadjointView<Eigen::Lower>().eigenvalues().cwiseAbs().maxCoeff()));
}

TEST_CASE("maximize_z_exact: softmax instance agrees with grid search") {
  const Matrix I = Matrix::Identity(2, 2);
  const SoftmaxLoss loss(I, 0);
  const SurrogateResult r = maximize_z_exact(loss, v2(0, 0), 8.0);
  CHECK(std::abs((r.phi - r.loss_at_anchor) - grid_gap_2d(I, v2(0, 0), 0, 8.0)) <= 1e-6);
  CHECK(r.loss_at_anchor == doctest::Approx(std::log(2.0)));
  CHECK(r.grad_norm <= 1e-10);
  CHECK(r.epsilon_cert == doctest::Approx(1e-20 / (2 * (8.0 - 4.0))));

  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const Matrix theta = random_matrix(rng, 2, 3);
    const Vector z0 = v2(rng.normal(), rng.normal());
    const std::size_t y = rng.index(3);
    const double gamma = 2.0 * softmax_curvature_bound(theta);
    const SurrogateResult s = maximize_z_exact(SoftmaxLoss(theta, y), z0, gamma);
    CHECK(std::abs((s.phi - s.loss_at_anchor) - grid_gap_2d(theta, z0, y, gamma)) <= 1e-6);
  }
}

TEST_CASE("maximize_z_exact: contract violations") {
  const SoftmaxLoss loss(Matrix::Identity(2, 2), 0);
  CHECK_THROWS_AS(maximize_z_exact(loss, v2(0, 0), 4.0), CurvatureError);
  CHECK_THROWS_AS(maximize_z_exact(loss, v2(0, 0), 3.0), CurvatureError);
  CHECK_THROWS_AS(maximize_z_exact(loss, Vector::Zero(3), 8.0), DimensionError);
  CHECK_THROWS_AS(maximize_z_exact(loss, v2(0, 0), 8.0, {0.0, 10}), std::invalid_argument);
  try {
    maximize_z_exact(loss, v2(0, 0), 8.0, {1e-10, 1});
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_iterate.size() == 2);
    CHECK(e.last_iterate.allFinite());
    CHECK(e.last_iterate.norm() > 0.0);
  }
}

TEST_CASE("surrogate ordering: phi >= loss, monotone in gamma") {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const Matrix theta = random_matrix(rng, 3, 3);
    Vector z0(3);
    for (int i = 0; i < 3; ++i) z0(i) = rng.normal();
    const SoftmaxLoss loss(theta, rng.index(3));
    const double L = loss.curvature_bound();
    const SurrogateResult lo = maximize_z_exact(loss, z0, 2 * L);
    const SurrogateResult hi = maximize_z_exact(loss, z0, 20 * L);
    CHECK(lo.phi >= lo.loss_at_anchor);
    CHECK(hi.phi >= hi.loss_at_anchor);
    CHECK(lo.phi + lo.epsilon_cert >= hi.phi);
  }
  CHECK_THROWS_AS(assert_surrogate_ordering(1.0, 1.1), std::logic_error);
  CHECK_NOTHROW(assert_surrogate_ordering(1.0, 1.0 + 1e-17));
}

TEST_CASE("newton proxy") {
  const LinearLoss lin(v2(1, 2), 0);
  CHECK((newton_proxy(lin, v2(1, 1), 4.0) - v2(1.25, 1.5)).norm() <= 1e-15);

  Matrix A(2, 2);
  A << 1.0, 0.2, 0.2, 0.5;
  const QuadraticLoss quad(A, v2(1, -1));
  CHECK((newton_proxy(quad, v2(0.5, 0.5), 3.0) - maximize_z_exact(quad, v2(0.5, 0.5), 3.0).maximizer).norm() <=
        1e-12);

  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const Matrix theta = random_matrix(rng, 3, 3);
    Vector z0(3);
    for (int i = 0; i < 3; ++i) z0(i) = rng.normal();
    const SoftmaxLoss loss(theta, rng.index(3));
    const double gamma = 100 * loss.curvature_bound();
    const Vector exact = maximize_z_exact(loss, z0, gamma).maximizer;
    CHECK((newton_proxy(loss, z0, gamma) - exact).norm() <= 1e-3 * loss.grad(z0).norm() / gamma);
  }
  const SoftmaxLoss sym(Matrix::Identity(2, 2), 0);
  CHECK_THROWS_AS(newton_proxy(sym, v2(0, 0), 0.4), CurvatureError);
}

TEST_CASE("Newton-proxy distance bound") {
  Matrix A(2, 2);
  A << 1.0, 0.3, 0.3, -0.5;
  const QuadraticLoss quad(A, v2(0.2, 0.1));
  const BoundReport q = check_newton_bound(quad, v2(1, -1), 3.0);
  CHECK(q.pass);
  CHECK(q.lhs <= 2 * q.epsilon / (3.0 - quad.curvature_bound()) + 1e-28);

  // Symmetric identity instance at gamma = 8 = 2 L1.
  const SoftmaxLoss sym(Matrix::Identity(2, 2), 0);
  const BoundReport s = check_newton_bound(sym, v2(0, 0), 8.0, 1e-10);
  CHECK(s.pass);
  CHECK(s.constants.L0 == doctest::Approx(2.0));
  CHECK(s.constants.L1 == doctest::Approx(4.0));
  // grad = (-1/2, 1/2) is an eigenvector of H = [[1/4, -1/4], [-1/4, 1/4]]
  // with eigenvalue 1/2, so the proxy is grad / (8 - 1/2).
  const Vector proxy = newton_proxy(sym, v2(0, 0), 8.0);
  CHECK(proxy(0) == doctest::Approx(-1.0 / 15.0));
  CHECK(proxy(1) == doctest::Approx(1.0 / 15.0));
  CHECK(s.lhs > 0.0);
  CHECK(s.lhs < 1e-4);
  CHECK(s.rhs > s.lhs);

  CHECK_THROWS_AS(check_newton_bound(sym, v2(0, 0), 4.0), CurvatureError);

  for (int t = 0; t < 20; ++t) {
    const SoftmaxInstance inst = random_softmax_instance(instance_seed(31, t));
    const SoftmaxLoss loss(inst.theta_c, inst.label);
    const LipschitzCertificate cert = loss.certificate();
    double first = 0.0;
    for (double mult : {2.0, 10.0, 100.0}) {
      const BoundReport r = check_newton_bound(loss, cert, inst.z, mult * cert.L1);
      CHECK(r.pass);
      if (mult == 2.0) first = r.lhs;
      if (mult == 100.0) CHECK(r.lhs < first);
    }
  }
}

TEST_CASE("first-order displacement bound") {
  const LinearLoss lin(v2(3, -1), 2);
  const BoundReport l = check_displacement_bound(lin, v2(0.5, 0.5), 2.0);
  CHECK(l.lhs <= 1e-15);
  CHECK(l.pass);

  const SoftmaxLoss sym(Matrix::Identity(2, 2), 0);
  const BoundReport s = check_displacement_bound(sym, v2(0, 0), 8.0);
  CHECK(s.pass);
  CHECK(check_displacement_bound(sym, v2(0, 0), 800.0).lhs <= s.lhs);

  for (int t = 0; t < 20; ++t) {
    const SoftmaxInstance inst = random_softmax_instance(instance_seed(32, t));
    const SoftmaxLoss loss(inst.theta_c, inst.label, 0.0);
    const LipschitzCertificate cert = loss.certificate();
    for (double mult : {2.0, 10.0, 100.0}) CHECK(check_displacement_bound(loss, cert, inst.z, mult * cert.L1).pass);
  }
}

TEST_CASE("surrogate gap sandwich") {
  const SandwichReport s = check_gap_sandwich(Matrix::Identity(2, 2), v2(0, 0), 0, 8.0);
  CHECK(s.R == doctest::Approx(0.5));
  CHECK(s.L == doctest::Approx(4.0));
  CHECK(s.lower == doctest::Approx(0.5 / 24.0));
  CHECK(s.upper == doctest::Approx(0.0625));
  CHECK(s.gap >= 0.0208333);
  CHECK(s.gap <= 0.0625);
  CHECK(s.pass);

  // Saturated correct prediction.
  const SandwichReport sat = check_gap_sandwich(Matrix::Identity(2, 2), v2(40, 0), 0, 8.0);
  CHECK(sat.R < 1e-30);
  CHECK(sat.gap < 1e-30);
  CHECK(sat.pass);

  for (int t = 0; t < 50; ++t) {
    const SoftmaxInstance inst = random_softmax_instance(instance_seed(33, t));
    const double L = softmax_curvature_bound(inst.theta_c);
    for (double mult : {2.0, 10.0, 100.0})
      CHECK(check_gap_sandwich(inst.theta_c, inst.z, inst.label, mult * L).pass);
  }
  CHECK_THROWS_AS(check_gap_sandwich(Matrix::Identity(2, 2), v2(0, 0), 0, 4.0), CurvatureError);
}

TEST_CASE("envelope identity") {
  LinearFamily lin;
  Vector params(3);
  params << 1.0, -2.0, 0.5;
  const EnvelopeReport l = envelope_grad_check(lin, params, v2(0.3, 0.4), 2.0);
  CHECK(l.max_rel_error <= 1e-8);

  for (int t = 0; t < 10; ++t) {
    const NetInstance inst = random_net_instance(instance_seed(34, t), 2);
    const double gamma = 10 * softmax_curvature_bound(inst.net.theta_c());
    CHECK(envelope_grad_check(inst.net, inst.example, gamma).max_rel_error <= 1e-4);
  }

  const NetInstance inst = random_net_instance(5, 2);
  const double L = softmax_curvature_bound(inst.net.theta_c());
  CHECK_THROWS_AS(envelope_grad_check(inst.net, inst.example, L), CurvatureError);
  CHECK_THROWS_AS(envelope_grad_check(inst.net, inst.example, 0.5 * L), CurvatureError);
}

TEST_CASE("ascend_x: degenerate steps") {
  const NetInstance inst = random_net_instance(41);
  const LabeledExample& ex = inst.example;
  const LabeledExample same = ascend_x(inst.net, ex, ex, 1.0, 0.0, 5);
  CHECK(same.x == ex.x);
  CHECK(same.label == ex.label);

  const LabeledExample pinned = ascend_x(inst.net, ex, ex, 1e12, 1e-13, 15);
  CHECK((features(inst.net, pinned.x) - features(inst.net, ex.x)).norm() <= 1e-6);

  LabeledExample other = ex;
  other.label = ex.label + 1;
  CHECK_THROWS_AS(ascend_x(inst.net, other, ex, 1.0, 0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(ascend_x(inst.net, ex, ex, 1.0, -0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(ascend_x(inst.net, ex, ex, 1.0, 0.1, 0), std::invalid_argument);
}

TEST_CASE("ascend_x: gradient matches the penalized objective") {
  // One step with a tiny eta moves along the objective gradient, so the
  // objective change matches eta * ||grad||^2 to first order.
  for (CostSpace space : {CostSpace::Semantic, CostSpace::Input}) {
    for (int t = 0; t < 10; ++t) {
      const NetInstance inst = random_net_instance(instance_seed(42, t));
      LabeledExample start = inst.example;
      start.x.array() += 0.3;
      const double eta = 1e-7;
      const LabeledExample next = ascend_x(inst.net, start, inst.example, 2.0, eta, 1);
      const Vector step = (next.x - start.x) / eta;
      const oracle::Vec num = oracle::central_diff(
          [&](const oracle::Vec& v) {
            return oracle::LD(penalized_objective(inst.net, oracle::to_eigen(v), inst.example, 2.0, space));
          },
          oracle::to_ld(start.x), 1e-5L);
      if (space == CostSpace::Semantic) {
        CHECK((step - oracle::to_eigen(num)).cwiseAbs().maxCoeff() <= 1e-6 * (1 + step.norm()));
      } else {
        const LabeledExample in = ascend_x(inst.net, start, inst.example, 2.0, eta, 1, CostSpace::Input);
        CHECK(((in.x - start.x) / eta - oracle::to_eigen(num)).cwiseAbs().maxCoeff() <= 1e-6 * (1 + step.norm()));
      }
    }
  }
}

TEST_CASE("ascend_x: each iteration does not decrease the penalized objective") {
  for (int t = 0; t < 10; ++t) {
    const NetInstance inst = random_net_instance(instance_seed(43, t));
    double prev = penalized_objective(inst.net, inst.example.x, inst.example, 1.0);
    for (int k = 1; k <= 15; ++k) {
      const LabeledExample it = ascend_x(inst.net, inst.example, inst.example, 1.0, 1e-3, k);
      const double cur = penalized_objective(inst.net, it.x, inst.example, 1.0);
      CHECK(cur >= prev - 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("semantic-space ascent raises the loss more than pixel-space ascent") {
  const Network net = make_network(Architecture{}, 2, 3, 2024);
  const LabeledExample ex{v2(0.8, -0.4), 1};
  const double gamma = 1e4, eta = 1e-5;
  const LabeledExample sem = ascend_x(net, ex, ex, gamma, eta, 15, CostSpace::Semantic);
  const LabeledExample pix = ascend_x(net, ex, ex, gamma, eta, 15, CostSpace::Input);
  const double base = loss(net, ex);
  CHECK(loss(net, sem) - base > loss(net, pix) - base);
  CHECK(loss(net, pix) - base > 0.0);
}
