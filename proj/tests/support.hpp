#pragma once

// Shared helpers for the unit tests and the acceptance binary.

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cgr/agents.hpp"
#include "cgr/nn.hpp"

namespace cgr::testing {

inline std::string fixture_path(const std::string& name) { return std::string(CGR_FIXTURE_DIR) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Gradients flattened in Network::flat_parameters() order.
inline std::vector<double> flatten(const nn::Gradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    for (Eigen::Index r = 0; r < g.weight[l].rows(); ++r)
      for (Eigen::Index c = 0; c < g.weight[l].cols(); ++c) out.push_back(g.weight[l](r, c));
    for (Eigen::Index i = 0; i < g.bias[l].size(); ++i) out.push_back(g.bias[l](i));
  }
  return out;
}

/// Central finite differences of `loss` over every parameter of `net`.
inline std::vector<double> finite_difference(nn::Network& net, const std::function<double()>& loss,
                                             double h = 1e-6) {
  std::vector<double> params = net.flat_parameters();
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    net.set_flat_parameters(params);
    const double up = loss();
    params[i] = saved - h;
    net.set_flat_parameters(params);
    const double down = loss();
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  net.set_flat_parameters(params);
  return grad;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline Vector random_vector(Rng& rng, int n, double scale = 1.0) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * (2.0 * uniform01(rng) - 1.0);
  return v;
}

/// Random discrete-action batch with every reward present.
inline std::vector<Transition> random_discrete_batch(Rng& rng, int state_width, int actions, int size) {
  std::vector<Transition> batch;
  for (int i = 0; i < size; ++i) {
    Transition t;
    t.state = random_vector(rng, state_width);
    t.action = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(actions)));
    t.reward = 2.0 * uniform01(rng) - 1.0;
    t.terminal = uniform01(rng) < 0.3;
    t.next_state = random_vector(rng, state_width);
    batch.push_back(t);
  }
  return batch;
}

inline std::vector<Transition> random_continuous_batch(Rng& rng, int state_width, int dims, int size) {
  std::vector<Transition> batch;
  for (int i = 0; i < size; ++i) {
    Transition t;
    t.state = random_vector(rng, state_width);
    t.action = random_vector(rng, dims);
    t.reward = 2.0 * uniform01(rng) - 1.0;
    t.terminal = uniform01(rng) < 0.3;
    t.next_state = random_vector(rng, state_width);
    batch.push_back(t);
  }
  return batch;
}

}  // namespace cgr::testing
