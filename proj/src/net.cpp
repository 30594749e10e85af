#include "advaug/net.hpp"

#include <cmath>
#include <string>

#include "advaug/errors.hpp"
#include "advaug/rng.hpp"

namespace advaug {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Network::Network(std::vector<std::size_t> layer_dims, std::vector<Activation> activations)
    : dims_(std::move(layer_dims)), acts_(std::move(activations)) {
  if (dims_.size() < 3)
    throw DimensionError("network needs input, at least one hidden layer and a class count");
  if (acts_.size() != dims_.size() - 2)
    throw DimensionError("network needs exactly one activation per hidden layer");
  for (std::size_t dim : dims_)
    if (dim == 0) throw DimensionError("layer dimensions must be positive");

  std::size_t offset = 0;
  for (std::size_t l = 0; l + 2 < dims_.size(); ++l) {
    offsets_.push_back(offset);
    offset += dims_[l + 1] * dims_[l];
    offsets_.push_back(offset);
    offset += dims_[l + 1];
  }
  offsets_.push_back(offset);
  offset += feature_dim() * num_classes();
  params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
}

Network Network::initialized(std::vector<std::size_t> layer_dims,
                             std::vector<Activation> activations, std::uint64_t seed) {
  Network net(std::move(layer_dims), std::move(activations));
  Rng rng(seed);
  auto fill = [&rng](auto&& block, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      for (Eigen::Index j = 0; j < block.cols(); ++j) block(i, j) = rng.uniform(-limit, limit);
  };
  for (std::size_t l = 0; l < net.num_hidden(); ++l)
    fill(net.weight(l), net.dims_[l], net.dims_[l + 1]);
  fill(net.theta_c(), net.feature_dim(), net.num_classes());
  return net;
}

RowMatrixMap Network::weight(std::size_t layer) {
  return RowMatrixMap(params_.data() + weight_offset(layer),
                      static_cast<Eigen::Index>(dims_[layer + 1]),
                      static_cast<Eigen::Index>(dims_[layer]));
}

ConstRowMatrixMap Network::weight(std::size_t layer) const {
  return ConstRowMatrixMap(params_.data() + weight_offset(layer),
                           static_cast<Eigen::Index>(dims_[layer + 1]),
                           static_cast<Eigen::Index>(dims_[layer]));
}

VectorMap Network::bias(std::size_t layer) {
  return VectorMap(params_.data() + bias_offset(layer),
                   static_cast<Eigen::Index>(dims_[layer + 1]));
}

ConstVectorMap Network::bias(std::size_t layer) const {
  return ConstVectorMap(params_.data() + bias_offset(layer),
                        static_cast<Eigen::Index>(dims_[layer + 1]));
}

RowMatrixMap Network::theta_c() {
  return RowMatrixMap(params_.data() + theta_c_offset(), static_cast<Eigen::Index>(feature_dim()),
                      static_cast<Eigen::Index>(num_classes()));
}

ConstRowMatrixMap Network::theta_c() const {
  return ConstRowMatrixMap(params_.data() + theta_c_offset(),
                           static_cast<Eigen::Index>(feature_dim()),
                           static_cast<Eigen::Index>(num_classes()));
}

void Network::set_parameters(const Vector& params) {
  if (params.size() != params_.size())
    throw DimensionError("parameter vector has " + std::to_string(params.size()) +
                         " entries, network expects " + std::to_string(params_.size()));
  params_ = params;
}

bool operator==(const Network& a, const Network& b) {
  return a.dims_ == b.dims_ && a.acts_ == b.acts_ && a.params_ == b.params_;
}

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::Identity: return v;
    case Activation::Tanh: return std::tanh(v);
    case Activation::Relu: return v > 0.0 ? v : 0.0;
  }
  return v;
}

// Derivative expressed through the pre-activation value.
double activate_deriv(Activation a, double pre, double post) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

struct ForwardCache {
  std::vector<Vector> pre;   // pre[l]: pre-activation of hidden layer l
  std::vector<Vector> post;  // post[0] = x, post[l + 1] = act(pre[l])
};

ForwardCache forward(const Network& net, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != net.input_dim())
    throw DimensionError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                         std::to_string(net.input_dim()));
  ForwardCache cache;
  cache.post.push_back(x);
  for (std::size_t l = 0; l < net.num_hidden(); ++l) {
    Vector pre = net.weight(l) * cache.post.back() + net.bias(l);
    const Activation act = net.activations()[l];
    Vector post = pre.unaryExpr([act](double v) { return activate(act, v); });
    cache.pre.push_back(std::move(pre));
    cache.post.push_back(std::move(post));
  }
  return cache;
}

void check_shapes(const Eigen::Ref<const Matrix>& theta_c, const Vector& z) {
  if (theta_c.rows() != z.size())
    throw DimensionError("feature vector has dimension " + std::to_string(z.size()) +
                         ", classification layer expects " + std::to_string(theta_c.rows()));
}

void check_label(const Eigen::Ref<const Matrix>& theta_c, std::size_t y) {
  if (y >= static_cast<std::size_t>(theta_c.cols()))
    throw DimensionError("label " + std::to_string(y) + " out of range for " +
                         std::to_string(theta_c.cols()) + " classes");
}

}  // namespace

Vector features(const Network& net, const Vector& x) { return forward(net, x).post.back(); }

Vector logits(const Eigen::Ref<const Matrix>& theta_c, const Vector& z) {
  check_shapes(theta_c, z);
  return theta_c.transpose() * z;
}

Vector softmax_probs(const Eigen::Ref<const Matrix>& theta_c, const Vector& z) {
  Vector s = logits(theta_c, z);
  const double shift = s.maxCoeff();
  Vector e = (s.array() - shift).exp().matrix();
  return e / e.sum();
}

double loss_z(const Eigen::Ref<const Matrix>& theta_c, const Vector& z, std::size_t y) {
  check_label(theta_c, y);
  const Vector s = logits(theta_c, z);
  const double shift = s.maxCoeff();
  const double lse = shift + std::log((s.array() - shift).exp().sum());
  return lse - s(static_cast<Eigen::Index>(y));
}

double loss(const Network& net, const LabeledExample& ex) {
  return loss_z(net.theta_c(), features(net, ex.x), ex.label);
}

Vector grad_z_loss(const Eigen::Ref<const Matrix>& theta_c, const Vector& z, std::size_t y) {
  check_label(theta_c, y);
  Vector residual = softmax_probs(theta_c, z);
  residual(static_cast<Eigen::Index>(y)) -= 1.0;
  return theta_c * residual;
}

Matrix hessian_z_loss(const Eigen::Ref<const Matrix>& theta_c, const Vector& z) {
  const Vector p = softmax_probs(theta_c, z);
  const Vector mean = theta_c * p;
  Matrix h = theta_c * p.asDiagonal() * theta_c.transpose() - mean * mean.transpose();
  return 0.5 * (h + h.transpose());
}

namespace {

FeatureBackprop backprop_cached(const Network& net, const ForwardCache& cache, const Vector& dz) {
  FeatureBackprop out;
  out.param_grad = Vector::Zero(static_cast<Eigen::Index>(net.num_parameters()));
  Vector upstream = dz;
  for (std::size_t l = net.num_hidden(); l-- > 0;) {
    const Activation act = net.activations()[l];
    Vector delta(upstream.size());
    for (Eigen::Index i = 0; i < upstream.size(); ++i)
      delta(i) = upstream(i) * activate_deriv(act, cache.pre[l](i), cache.post[l + 1](i));
    const Vector& input = cache.post[l];
    const auto rows = static_cast<Eigen::Index>(net.layer_dims()[l + 1]);
    const auto cols = static_cast<Eigen::Index>(net.layer_dims()[l]);
    const std::size_t w_off = static_cast<std::size_t>(net.weight(l).data() - net.parameters().data());
    RowMatrixMap(out.param_grad.data() + w_off, rows, cols) = delta * input.transpose();
    const std::size_t b_off = static_cast<std::size_t>(net.bias(l).data() - net.parameters().data());
    out.param_grad.segment(static_cast<Eigen::Index>(b_off), rows) = delta;
    upstream = net.weight(l).transpose() * delta;
  }
  out.input_grad = std::move(upstream);
  return out;
}

Vector output_residual(const Network& net, const Vector& z, std::size_t y) {
  check_label(net.theta_c(), y);
  Vector residual = softmax_probs(net.theta_c(), z);
  residual(static_cast<Eigen::Index>(y)) -= 1.0;
  return residual;
}

}  // namespace

FeatureBackprop backprop_features(const Network& net, const Vector& x, const Vector& dz) {
  const ForwardCache cache = forward(net, x);
  if (dz.size() != cache.post.back().size())
    throw DimensionError("upstream feature gradient has wrong dimension");
  return backprop_cached(net, cache, dz);
}

Vector grad_params_loss(const Network& net, const LabeledExample& ex) {
  const ForwardCache cache = forward(net, ex.x);
  const Vector& z = cache.post.back();
  const Vector residual = output_residual(net, z, ex.label);
  FeatureBackprop bp = backprop_cached(net, cache, net.theta_c() * residual);
  RowMatrixMap(bp.param_grad.data() + net.theta_c_offset(), z.size(), residual.size()) =
      z * residual.transpose();
  return std::move(bp.param_grad);
}

Vector grad_input_loss(const Network& net, const LabeledExample& ex) {
  const ForwardCache cache = forward(net, ex.x);
  const Vector residual = output_residual(net, cache.post.back(), ex.label);
  return backprop_cached(net, cache, net.theta_c() * residual).input_grad;
}

std::size_t predict(const Network& net, const Vector& x) {
  const Vector s = logits(net.theta_c(), features(net, x));
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < s.size(); ++j)
    if (s(j) > s(best)) best = j;
  return static_cast<std::size_t>(best);
}

Network make_network(const Architecture& arch, std::size_t input_dim, std::size_t num_classes,
                     std::uint64_t seed) {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(num_classes);
  return Network::initialized(std::move(dims),
                              std::vector<Activation>(arch.hidden.size(), arch.activation), seed);
}

}  // namespace advaug
