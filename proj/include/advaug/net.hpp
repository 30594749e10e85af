#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace advaug {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1, Relu = 2 };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct LabeledExample {
  Vector x;
  std::size_t label = 0;
};

// Feedforward classifier: hidden layers h_l = act(W_l h_{l-1} + b_l) map the
// input (dim d) to the feature vector z (dim p), followed by a bias-free
// linear classification layer with logits theta_c^T z (m classes).
//
// All parameters live in one flat vector, in declaration order:
//   W_1 (row-major, out x in), b_1, ..., W_H, b_H, theta_c (row-major, p x m).
// Gradients returned by grad_params_loss share this layout.
class Network {
 public:
  // layer_dims = {d, h_1, ..., h_H = p, m}; one activation per hidden layer.
  Network(std::vector<std::size_t> layer_dims, std::vector<Activation> activations);

  // Glorot-uniform weights, zero biases.
  static Network initialized(std::vector<std::size_t> layer_dims,
                             std::vector<Activation> activations, std::uint64_t seed);

  std::size_t input_dim() const { return dims_.front(); }
  std::size_t feature_dim() const { return dims_[dims_.size() - 2]; }
  std::size_t num_classes() const { return dims_.back(); }
  std::size_t num_hidden() const { return acts_.size(); }
  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  const std::vector<Activation>& activations() const { return acts_; }

  RowMatrixMap weight(std::size_t layer);
  ConstRowMatrixMap weight(std::size_t layer) const;
  VectorMap bias(std::size_t layer);
  ConstVectorMap bias(std::size_t layer) const;
  RowMatrixMap theta_c();
  ConstRowMatrixMap theta_c() const;

  std::size_t num_parameters() const { return static_cast<std::size_t>(params_.size()); }
  const Vector& parameters() const { return params_; }
  void set_parameters(const Vector& params);
  // Offset of theta_c inside the flat parameter vector.
  std::size_t theta_c_offset() const { return offsets_.back(); }

  bool all_finite() const { return params_.allFinite(); }

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[2 * layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[2 * layer + 1]; }

  std::vector<std::size_t> dims_;
  std::vector<Activation> acts_;
  std::vector<std::size_t> offsets_;
  Vector params_;
};

// z = g(theta_f; x).
Vector features(const Network& net, const Vector& x);

Vector logits(const Eigen::Ref<const Matrix>& theta_c, const Vector& z);

// Max-logit shifted softmax of theta_c^T z.
Vector softmax_probs(const Eigen::Ref<const Matrix>& theta_c, const Vector& z);

// -log p_y.
double loss_z(const Eigen::Ref<const Matrix>& theta_c, const Vector& z, std::size_t y);
double loss(const Network& net, const LabeledExample& ex);

// -theta_{c,y} + sum_j p_j theta_{c,j}.
Vector grad_z_loss(const Eigen::Ref<const Matrix>& theta_c, const Vector& z, std::size_t y);

// Theta diag(p) Theta^T - (Theta p)(Theta p)^T; independent of the label.
Matrix hessian_z_loss(const Eigen::Ref<const Matrix>& theta_c, const Vector& z);

// Gradient of the loss over the flat parameter vector.
Vector grad_params_loss(const Network& net, const LabeledExample& ex);
Vector grad_input_loss(const Network& net, const LabeledExample& ex);

struct FeatureBackprop {
  Vector param_grad;  // flat layout; the theta_c block is zero
  Vector input_grad;
};

// Pulls an upstream gradient on z back through the feature extractor.
FeatureBackprop backprop_features(const Network& net, const Vector& x, const Vector& dz);

std::size_t predict(const Network& net, const Vector& x);

// Hidden layer widths (the last one is the feature dimension p) and the shared
// hidden activation.
struct Architecture {
  std::vector<std::size_t> hidden{64, 64, 16};
  Activation activation = Activation::Tanh;
};

Network make_network(const Architecture& arch, std::size_t input_dim, std::size_t num_classes,
                     std::uint64_t seed);

}  // namespace advaug
