#include "cgr/nn.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

namespace cgr {

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cgr

namespace cgr::nn {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string(what) + ": non-finite value");
}

}  // namespace

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation act, double x) {
  switch (act) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::identity: return x;
    case Activation::softplus: return softplus(x);
  }
  return x;
}

double activation_derivative(Activation act, double pre, double post) {
  switch (act) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - post * post;
    case Activation::identity: return 1.0;
    case Activation::softplus: return sigmoid(pre);
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Gradients

bool Gradients::all_zero() const {
  for (const auto& w : weight)
    if (!w.isZero(0.0)) return false;
  for (const auto& b : bias)
    if (!b.isZero(0.0)) return false;
  return true;
}

bool Gradients::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& w : weight)
    if (w.size() > 0) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : bias)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weight.size() != weight.size()) throw DimensionError("gradient layer count mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double factor) {
  for (auto& w : weight) w *= factor;
  for (auto& b : bias) b *= factor;
  return *this;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(std::span<const int> widths, Activation hidden, Activation output, Rng& rng) {
  if (widths.size() < 2) throw DimensionError("network needs at least an input and output width");
  for (int w : widths)
    if (w <= 0) throw DimensionError("layer widths must be positive");
  layers_.reserve(widths.size() - 1);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i];
    const int out = widths[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
    for (int r = 0; r < out; ++r) layer.bias(r) = (2.0 * uniform01(rng) - 1.0) * bound;
    layer.activation = (i + 2 == widths.size()) ? output : hidden;
    layers_.push_back(std::move(layer));
  }
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("network needs at least one layer");
  check_chain();
}

void Network::check_chain() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].bias.size() != layers_[i].weight.rows())
      throw DimensionError("bias width does not match weight rows");
    if (i + 1 < layers_.size() && layers_[i].out_width() != layers_[i + 1].in_width())
      throw DimensionError("layer widths do not chain");
  }
}

int Network::input_width() const { return layers_.empty() ? 0 : layers_.front().in_width(); }
int Network::output_width() const { return layers_.empty() ? 0 : layers_.back().out_width(); }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vector Network::forward(const Vector& input) const {
  if (input.size() != input_width())
    throw DimensionError("forward: input width " + std::to_string(input.size()) + ", expected " +
                         std::to_string(input_width()));
  Vector x = input;
  for (const auto& l : layers_) {
    Vector z = l.weight * x + l.bias;
    x = z.unaryExpr([act = l.activation](double v) { return activate(act, v); });
  }
  return x;
}

Matrix Network::forward(const Matrix& inputs) const {
  if (inputs.rows() != input_width()) throw DimensionError("forward: input width mismatch");
  Matrix x = inputs;
  for (const auto& l : layers_) {
    Matrix z = l.weight * x;
    z.colwise() += l.bias;
    x = z.unaryExpr([act = l.activation](double v) { return activate(act, v); });
  }
  return x;
}

Matrix Network::forward(const Matrix& inputs, Tape& tape) const {
  if (inputs.rows() != input_width()) throw DimensionError("forward: input width mismatch");
  tape.input = inputs;
  tape.pre.resize(layers_.size());
  tape.post.resize(layers_.size());
  const Matrix* x = &tape.input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    tape.pre[i].noalias() = l.weight * *x;
    tape.pre[i].colwise() += l.bias;
    tape.post[i] = tape.pre[i].unaryExpr([act = l.activation](double v) { return activate(act, v); });
    x = &tape.post[i];
  }
  return tape.post.back();
}

namespace {

// Propagates `upstream` (dL/d output) back through every layer, filling the
// parameter gradients when `grads` is non-null. Returns dL/d input.
Matrix backprop(const std::vector<Layer>& layers, const Tape& tape, const Matrix& upstream,
                Gradients* grads) {
  if (tape.post.size() != layers.size()) throw DimensionError("backward: tape does not match network");
  if (upstream.rows() != layers.back().out_width() || upstream.cols() != tape.input.cols())
    throw DimensionError("backward: upstream gradient shape mismatch");
  if (grads) {
    grads->weight.resize(layers.size());
    grads->bias.resize(layers.size());
  }
  Matrix delta = upstream;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& l = layers[k];
    const Matrix& pre = tape.pre[k];
    const Matrix& post = tape.post[k];
    if (l.activation != Activation::identity) {
      for (Eigen::Index c = 0; c < delta.cols(); ++c)
        for (Eigen::Index r = 0; r < delta.rows(); ++r)
          delta(r, c) *= activation_derivative(l.activation, pre(r, c), post(r, c));
    }
    const Matrix& in = (k == 0) ? tape.input : tape.post[k - 1];
    if (grads) {
      grads->weight[k].noalias() = delta * in.transpose();
      grads->bias[k] = delta.rowwise().sum();
    }
    Matrix next = l.weight.transpose() * delta;
    delta = std::move(next);
  }
  return delta;
}

}  // namespace

Gradients Network::backward(const Tape& tape, const Matrix& upstream) const {
  Gradients g;
  backprop(layers_, tape, upstream, &g);
  return g;
}

Gradients Network::backward(const Vector& input, const Vector& upstream) const {
  if (input.size() != input_width()) throw DimensionError("backward: input width mismatch");
  if (upstream.size() != output_width()) throw DimensionError("backward: upstream width mismatch");
  Tape tape;
  forward(Matrix(input), tape);
  return backward(tape, Matrix(upstream));
}

Matrix Network::input_gradient(const Tape& tape, const Matrix& upstream) const {
  return backprop(layers_, tape, upstream, nullptr);
}

Gradients Network::zero_gradients() const {
  Gradients g;
  for (const auto& l : layers_) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

void Network::ensure_optimizer_state() {
  if (moment1_.weight.size() != layers_.size()) {
    moment1_ = zero_gradients();
    moment2_ = zero_gradients();
  }
}

void Network::adamax_step(const Gradients& grads, double learning_rate, const AdamaxConfig& cfg) {
  if (grads.weight.size() != layers_.size() || grads.bias.size() != layers_.size())
    throw DimensionError("adamax: gradient layer count mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (grads.weight[i].rows() != layers_[i].weight.rows() ||
        grads.weight[i].cols() != layers_[i].weight.cols() ||
        grads.bias[i].size() != layers_[i].bias.size())
      throw DimensionError("adamax: gradient shape mismatch");
  }
  if (!grads.all_finite()) throw NumericError("adamax: non-finite gradient");
  ensure_optimizer_state();
  ++step_;
  if (grads.all_zero()) return;

  const double t = static_cast<double>(step_);
  const double rate = learning_rate / (1.0 - std::pow(cfg.beta1, t));
  auto update = [&](auto& param, auto& m, auto& u, const auto& g) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    u = (cfg.beta2 * u).cwiseMax(g.cwiseAbs());
    param.array() -= rate * m.array() / (u.array() + cfg.epsilon);
  };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    update(layers_[i].weight, moment1_.weight[i], moment2_.weight[i], grads.weight[i]);
    update(layers_[i].bias, moment1_.bias[i], moment2_.bias[i], grads.bias[i]);
    if (!layers_[i].weight.allFinite() || !layers_[i].bias.allFinite())
      throw NumericError("adamax: update produced non-finite parameters");
  }
}

bool Network::same_shape(const Network& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight.rows() != other.layers_[i].weight.rows() ||
        layers_[i].weight.cols() != other.layers_[i].weight.cols())
      return false;
  }
  return true;
}

void Network::blend_from(const Network& source, double tau) {
  if (!same_shape(source)) throw DimensionError("blend: network shapes differ");
  if (tau < 0.0 || tau > 1.0) throw ContractError("blend: tau must lie in [0, 1]");
  if (tau == 0.0) {
    copy_parameters_from(source);
    return;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight = tau * layers_[i].weight + (1.0 - tau) * source.layers_[i].weight;
    layers_[i].bias = tau * layers_[i].bias + (1.0 - tau) * source.layers_[i].bias;
  }
}

void Network::copy_parameters_from(const Network& source) {
  if (!same_shape(source)) throw DimensionError("copy: network shapes differ");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight = source.layers_[i].weight;
    layers_[i].bias = source.layers_[i].bias;
  }
}

double Network::parameter_distance(const Network& other) const {
  if (!same_shape(other)) throw DimensionError("distance: network shapes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    d = std::max(d, (layers_[i].weight - other.layers_[i].weight).cwiseAbs().maxCoeff());
    d = std::max(d, (layers_[i].bias - other.layers_[i].bias).cwiseAbs().maxCoeff());
  }
  return d;
}

std::vector<double> Network::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void Network::set_flat_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw DimensionError("flat parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = values[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = values[k++];
  }
}

// ---------------------------------------------------------------------------
// Heads and losses

GaussianHead gaussian_head_from_output(const Vector& raw) {
  if (raw.size() % 2 != 0 || raw.size() == 0)
    throw DimensionError("gaussian head: raw output width must be even and positive");
  const Eigen::Index d = raw.size() / 2;
  GaussianHead head;
  head.mean = raw.head(d);
  head.stddev = raw.tail(d).unaryExpr([](double v) { return softplus(v) + kSigmaFloor; });
  return head;
}

Vector gaussian_head_raw_gradient(const Vector& raw, const Vector& grad_mean,
                                  const Vector& grad_stddev) {
  const Eigen::Index d = raw.size() / 2;
  if (grad_mean.size() != d || grad_stddev.size() != d)
    throw DimensionError("gaussian head gradient: width mismatch");
  Vector g(raw.size());
  g.head(d) = grad_mean;
  for (Eigen::Index i = 0; i < d; ++i) g(d + i) = grad_stddev(i) * sigmoid(raw(d + i));
  return g;
}

LossResult mse_loss(const Vector& prediction, const Vector& target) {
  if (prediction.size() != target.size()) throw DimensionError("mse: length mismatch");
  if (prediction.size() == 0) throw DimensionError("mse: empty input");
  const double n = static_cast<double>(prediction.size());
  const Vector diff = prediction - target;
  return {diff.squaredNorm() / n, 2.0 * diff / n};
}

GaussianNllResult gaussian_nll_loss(const GaussianHead& head, const Vector& target) {
  if (head.mean.size() != target.size() || head.stddev.size() != target.size())
    throw DimensionError("gaussian nll: width mismatch");
  if ((head.stddev.array() < kSigmaFloor).any()) throw ContractError("gaussian nll: stddev below floor");
  GaussianNllResult out;
  out.grad_mean.resize(target.size());
  out.grad_stddev.resize(target.size());
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double s = head.stddev(i);
    const double r = target(i) - head.mean(i);
    out.value += 0.5 * std::log(2.0 * std::numbers::pi * s * s) + r * r / (2.0 * s * s);
    out.grad_mean(i) = -r / (s * s);
    out.grad_stddev(i) = 1.0 / s - r * r / (s * s * s);
  }
  return out;
}

double gaussian_log_density(const GaussianHead& head, const Vector& x) {
  if (head.mean.size() != x.size() || head.stddev.size() != x.size())
    throw DimensionError("gaussian log density: width mismatch");
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double s = head.stddev(i);
    const double z = (x(i) - head.mean(i)) / s;
    lp += -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

Vector softmax(const Vector& values) {
  if (values.size() == 0) throw DimensionError("softmax: empty input");
  require_finite(values, "softmax");
  const double m = values.maxCoeff();
  Vector e = (values.array() - m).exp();
  return e / e.sum();
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

template <typename T>
void write_le(std::ostream& os, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), bytes.size());
  } else {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

template <typename T>
T read_le(std::istream& is) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), bytes.size())) throw Error("snapshot: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

void save_snapshot(const Network& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("snapshot: cannot open " + path.string());
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& l : net.layers()) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(l.in_width()));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(l.out_width()));
  }
  for (double v : net.flat_parameters()) write_le<double>(os, v);
  if (!os) throw Error("snapshot: write failed for " + path.string());
}

void load_snapshot(Network& net, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("snapshot: cannot open " + path.string());
  const auto count = read_le<std::uint32_t>(is);
  if (count != net.layer_count()) throw DimensionError("snapshot: layer count mismatch");
  for (const auto& l : net.layers()) {
    const auto in = read_le<std::uint32_t>(is);
    const auto out = read_le<std::uint32_t>(is);
    if (in != static_cast<std::uint32_t>(l.in_width()) || out != static_cast<std::uint32_t>(l.out_width()))
      throw DimensionError("snapshot: layer shape mismatch");
  }
  std::vector<double> values(net.parameter_count());
  for (double& v : values) v = read_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) throw Error("snapshot: trailing bytes");
  for (double v : values)
    if (!std::isfinite(v)) throw NumericError("snapshot: non-finite parameter");
  net.set_flat_parameters(values);
}

}  // namespace cgr::nn
