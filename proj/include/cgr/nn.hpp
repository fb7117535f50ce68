#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cgr/common.hpp"

namespace cgr::nn {

enum class Activation { relu, tanh, identity, softplus };

/// Lower bound on every standard deviation emitted by a Gaussian head.
inline constexpr double kSigmaFloor = 1e-3;

struct AdamaxConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One dense layer: out = act(weight * in + bias). `weight` is out x in.
struct Layer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::identity;

  int in_width() const { return static_cast<int>(weight.cols()); }
  int out_width() const { return static_cast<int>(weight.rows()); }
};

/// Parameter-shaped container used for gradients and optimizer moments.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  bool all_zero() const;
  bool all_finite() const;
  double max_abs() const;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double factor);
};

/// Activations cached by a batched forward pass; needed by backward().
/// Columns are samples.
struct Tape {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

/// Fully-connected feed-forward network plus its Adamax optimizer state.
///
/// The network is a value type: copying it copies parameters and optimizer
/// state. Every update checks that all parameters stay finite.
class Network {
 public:
  Network() = default;

  /// Builds a network with `widths.size() - 1` layers. Hidden layers use
  /// `hidden`, the last layer uses `output`. Weights and biases are drawn
  /// uniformly from +-1/sqrt(fan_in).
  Network(std::span<const int> widths, Activation hidden, Activation output, Rng& rng);

  /// Builds from explicit layers; widths must chain.
  explicit Network(std::vector<Layer> layers);

  int input_width() const;
  int output_width() const;
  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }
  std::uint64_t step_count() const { return step_; }
  std::size_t parameter_count() const;

  Vector forward(const Vector& input) const;
  /// Batched forward pass, one sample per column.
  Matrix forward(const Matrix& inputs) const;
  Matrix forward(const Matrix& inputs, Tape& tape) const;

  /// Gradient of the scalar sum(upstream .* output) w.r.t. every parameter,
  /// summed over the batch columns recorded in `tape`.
  Gradients backward(const Tape& tape, const Matrix& upstream) const;
  Gradients backward(const Vector& input, const Vector& upstream) const;

  /// Gradient of sum(upstream .* output) w.r.t. the input columns.
  Matrix input_gradient(const Tape& tape, const Matrix& upstream) const;

  /// One Adamax update. A gradient that is zero everywhere leaves the
  /// parameters and moments untouched; the step counter still advances.
  void adamax_step(const Gradients& grads, double learning_rate, const AdamaxConfig& cfg = {});

  /// this <- tau * this + (1 - tau) * source. Optimizer state is not touched.
  void blend_from(const Network& source, double tau);
  /// Exact parameter copy; optimizer state is not touched.
  void copy_parameters_from(const Network& source);

  bool same_shape(const Network& other) const;
  /// L-infinity distance between the parameters of two same-shape networks.
  double parameter_distance(const Network& other) const;
  Gradients zero_gradients() const;

  /// Flattened parameters: for each layer, weight row-major then bias.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);

  const Gradients& first_moment() const { return moment1_; }
  const Gradients& second_moment() const { return moment2_; }

 private:
  void check_chain() const;
  void ensure_optimizer_state();

  std::vector<Layer> layers_;
  Gradients moment1_;
  Gradients moment2_;
  std::uint64_t step_ = 0;
};

double activate(Activation act, double x);
double activation_derivative(Activation act, double pre, double post);

/// Numerically stable log(1 + exp(x)).
double softplus(double x);
/// Logistic sigmoid, the derivative of softplus.
double sigmoid(double x);

/// Mean and standard deviation of an independent multivariate normal.
struct GaussianHead {
  Vector mean;
  Vector stddev;
};

/// Splits a raw network output of width 2d into a Gaussian head: the first d
/// entries are the mean, the last d pass through softplus + kSigmaFloor.
GaussianHead gaussian_head_from_output(const Vector& raw);
/// Chain rule through gaussian_head_from_output: maps (dL/dmean, dL/dstddev)
/// back to dL/draw.
Vector gaussian_head_raw_gradient(const Vector& raw, const Vector& grad_mean,
                                  const Vector& grad_stddev);

struct LossResult {
  double value = 0.0;
  Vector gradient;
};

/// Mean squared error and its gradient w.r.t. `prediction`.
LossResult mse_loss(const Vector& prediction, const Vector& target);

struct GaussianNllResult {
  double value = 0.0;
  Vector grad_mean;
  Vector grad_stddev;
};

/// Sum over dimensions of 0.5 ln(2 pi sigma^2) + (target - mean)^2 / (2 sigma^2).
GaussianNllResult gaussian_nll_loss(const GaussianHead& head, const Vector& target);

/// Log-density of `x` under the head, natural log.
double gaussian_log_density(const GaussianHead& head, const Vector& x);

Vector softmax(const Vector& values);

/// Writes parameters as: u32 layer count, then (u32 in, u32 out) per layer,
/// then every parameter as little-endian f64 in flat_parameters() order.
void save_snapshot(const Network& net, const std::filesystem::path& path);
/// Reads a snapshot into `net`; the stored shape must match `net`.
void load_snapshot(Network& net, const std::filesystem::path& path);

}  // namespace cgr::nn
