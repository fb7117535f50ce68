#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "support.hpp"

using namespace cgr;
using namespace cgr::nn;

namespace {

Network single_layer(Activation act, int width) {
  Layer l;
  l.weight = Matrix::Identity(width, width);
  l.bias = Vector::Zero(width);
  l.activation = act;
  return Network(std::vector<Layer>{l});
}

// Plain loops, no Eigen products.
Vector loop_forward(const Network& net, const Vector& x) {
  std::vector<double> cur(x.data(), x.data() + x.size());
  for (const auto& layer : net.layers()) {
    std::vector<double> next(static_cast<std::size_t>(layer.out_width()));
    for (int r = 0; r < layer.out_width(); ++r) {
      double acc = layer.bias(r);
      for (int c = 0; c < layer.in_width(); ++c) acc += layer.weight(r, c) * cur[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = activate(layer.activation, acc);
    }
    cur = std::move(next);
  }
  return Eigen::Map<Vector>(cur.data(), static_cast<Eigen::Index>(cur.size()));
}

}  // namespace

TEST_CASE("forward: identity and relu single layers") {
  Vector x(2);
  x << 1, 2;
  CHECK(single_layer(Activation::identity, 2).forward(x).isApprox(x));
  Vector y(2);
  y << -1, 2;
  Vector expected(2);
  expected << 0, 2;
  CHECK(single_layer(Activation::relu, 2).forward(y) == expected);
}

TEST_CASE("forward: random two-layer net matches a loop oracle") {
  Rng rng(11);
  const std::vector<int> widths = {5, 7, 3};
  Network net(widths, Activation::relu, Activation::identity, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = testing::random_vector(rng, 5, 2.0);
    const Vector got = net.forward(x);
    const Vector want = loop_forward(net, x);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward: batched columns equal single-sample passes") {
  Rng rng(3);
  const std::vector<int> widths = {4, 6, 2};
  Network net(widths, Activation::tanh, Activation::identity, rng);
  Matrix xs(4, 5);
  for (int c = 0; c < 5; ++c) xs.col(c) = testing::random_vector(rng, 4);
  const Matrix out = net.forward(xs);
  for (int c = 0; c < 5; ++c) CHECK((out.col(c) - net.forward(Vector(xs.col(c)))).norm() < 1e-14);
}

TEST_CASE("init: weights within +-1/sqrt(fan_in)") {
  Rng rng(5);
  const std::vector<int> widths = {16, 64, 4};
  Network net(widths, Activation::relu, Activation::identity, rng);
  for (const auto& l : net.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_width()));
    CHECK(l.weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(l.bias.cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("forward: width mismatch throws") {
  Rng rng(1);
  const std::vector<int> widths = {3, 2};
  Network net(widths, Activation::relu, Activation::identity, rng);
  CHECK_THROWS_AS(net.forward(Vector(Vector::Zero(4))), DimensionError);
}

TEST_CASE("backward: linear 1x1 weight gradient equals the input") {
  Layer l;
  l.weight = Matrix::Constant(1, 1, 0.7);
  l.bias = Vector::Zero(1);
  Network net(std::vector<Layer>{l});
  const Vector x = Vector::Constant(1, 2.5);
  const auto g = net.backward(x, Vector::Ones(1));
  CHECK(g.weight[0](0, 0) == doctest::Approx(2.5));
  CHECK(g.bias[0](0) == doctest::Approx(1.0));
}

TEST_CASE("backward: matches central finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, 9));
    const std::vector<int> widths = {4, 6, 5, 3};
    Network net(widths, Activation::tanh, Activation::identity, rng);
    const Vector x = testing::random_vector(rng, 4);
    const Vector w = testing::random_vector(rng, 3);
    const auto g = net.backward(x, w);
    const auto fd = testing::finite_difference(net, [&] { return w.dot(net.forward(x)); }, 1e-5);
    CHECK(testing::relative_error(testing::flatten(g), fd) < 1e-4);
  }
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  Rng rng(2);
  const std::vector<int> widths = {3, 4, 2};
  Network net(widths, Activation::relu, Activation::identity, rng);
  CHECK(net.backward(Vector::Ones(3), Vector::Zero(2)).all_zero());
}

TEST_CASE("input_gradient matches finite differences") {
  Rng rng(4);
  const std::vector<int> widths = {3, 5, 2};
  Network net(widths, Activation::tanh, Activation::identity, rng);
  Matrix x = testing::random_vector(rng, 3);
  const Vector w = testing::random_vector(rng, 2);
  Tape tape;
  net.forward(x, tape);
  const Matrix g = net.input_gradient(tape, w);
  for (int i = 0; i < 3; ++i) {
    Matrix up = x, down = x;
    up(i, 0) += 1e-6;
    down(i, 0) -= 1e-6;
    const double fd = (w.dot(net.forward(up).col(0)) - w.dot(net.forward(down).col(0))) / 2e-6;
    CHECK(g(i, 0) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("adamax: zero gradient leaves parameters and moments untouched") {
  Rng rng(8);
  const std::vector<int> widths = {3, 4, 2};
  Network net(widths, Activation::relu, Activation::identity, rng);
  // One real step first so the moments are non-trivial.
  auto g = net.backward(Vector::Ones(3), Vector::Ones(2));
  net.adamax_step(g, 0.005);
  const auto params = net.flat_parameters();
  const auto m1 = testing::flatten(net.first_moment());
  const auto m2 = testing::flatten(net.second_moment());
  net.adamax_step(net.zero_gradients(), 0.005);
  CHECK(net.flat_parameters() == params);
  CHECK(testing::flatten(net.first_moment()) == m1);
  CHECK(testing::flatten(net.second_moment()) == m2);
  CHECK(net.step_count() == 2);
}

TEST_CASE("adamax: first step on a scalar matches the closed form") {
  // m1 = (1 - b1) g, u1 = max(0, |g|) = |g|; step = lr / (1 - b1) * m1 / (u1 + eps).
  Layer l;
  l.weight = Matrix::Constant(1, 1, 0.5);
  l.bias = Vector::Zero(1);
  Network net(std::vector<Layer>{l});
  Gradients g = net.zero_gradients();
  const double grad = -0.37;
  g.weight[0](0, 0) = grad;
  const double lr = 0.005;
  net.adamax_step(g, lr);
  const double m = 0.1 * grad;
  const double expected = 0.5 - lr / (1.0 - 0.9) * m / (std::abs(grad) + 1e-8);
  CHECK(net.layers()[0].weight(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(net.layers()[0].weight(0, 0) - 0.5) == doctest::Approx(lr).epsilon(1e-6));
}

TEST_CASE("adamax: 200 steps on (w - 3)^2 move w toward 3") {
  Layer l;
  l.weight = Matrix::Zero(1, 1);
  l.bias = Vector::Zero(1);
  Network net(std::vector<Layer>{l});
  for (int i = 0; i < 200; ++i) {
    Gradients g = net.zero_gradients();
    g.weight[0](0, 0) = 2.0 * (net.layers()[0].weight(0, 0) - 3.0);
    net.adamax_step(g, 0.005);
  }
  CHECK(std::abs(net.layers()[0].weight(0, 0) - 3.0) < 3.0);
}

TEST_CASE("adamax: non-finite gradient throws") {
  Rng rng(1);
  const std::vector<int> widths = {2, 2};
  Network net(widths, Activation::relu, Activation::identity, rng);
  Gradients g = net.zero_gradients();
  g.bias[0](0) = std::nan("");
  CHECK_THROWS_AS(net.adamax_step(g, 0.005), NumericError);
}

TEST_CASE("mse_loss") {
  const Vector p = Vector::Constant(3, 1.5);
  CHECK(mse_loss(p, p).value == 0.0);
  CHECK(mse_loss(p, p).gradient.isZero());
  const auto r = mse_loss(Vector::Constant(1, 2.0), Vector::Zero(1));
  CHECK(r.value == doctest::Approx(4.0));
  CHECK(r.gradient(0) == doctest::Approx(4.0));

  Rng rng(6);
  const Vector a = testing::random_vector(rng, 7), b = testing::random_vector(rng, 7);
  const auto got = mse_loss(a, b);
  double value = 0.0;
  for (int i = 0; i < 7; ++i) value += (a(i) - b(i)) * (a(i) - b(i));
  value /= 7.0;
  CHECK(std::abs(got.value - value) < 1e-12);
  for (int i = 0; i < 7; ++i) CHECK(std::abs(got.gradient(i) - 2.0 * (a(i) - b(i)) / 7.0) < 1e-12);
  CHECK_THROWS_AS(mse_loss(a, Vector::Zero(3)), DimensionError);
}

TEST_CASE("gaussian_nll_loss") {
  GaussianHead head{Vector::Zero(1), Vector::Ones(1)};
  const auto r = gaussian_nll_loss(head, Vector::Zero(1));
  CHECK(r.value == doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
  CHECK(r.value == doctest::Approx(0.918939).epsilon(1e-6));
  CHECK(r.grad_mean(0) == 0.0);

  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianHead h{testing::random_vector(rng, 3), (testing::random_vector(rng, 3).array() + 1.5).matrix()};
    const Vector t = testing::random_vector(rng, 3);
    const auto g = gaussian_nll_loss(h, t);
    for (int i = 0; i < 3; ++i) {
      auto nll_at = [&](int which, double delta) {
        GaussianHead q = h;
        (which == 0 ? q.mean : q.stddev)(i) += delta;
        return gaussian_nll_loss(q, t).value;
      };
      const double fd_mean = (nll_at(0, 1e-6) - nll_at(0, -1e-6)) / 2e-6;
      const double fd_std = (nll_at(1, 1e-6) - nll_at(1, -1e-6)) / 2e-6;
      CHECK(g.grad_mean(i) == doctest::Approx(fd_mean).epsilon(1e-5));
      CHECK(g.grad_stddev(i) == doctest::Approx(fd_std).epsilon(1e-5));
    }
  }
  GaussianHead bad{Vector::Zero(1), Vector::Constant(1, 1e-4)};
  CHECK_THROWS_AS(gaussian_nll_loss(bad, Vector::Zero(1)), ContractError);
}

TEST_CASE("gaussian head: softplus floor and raw-gradient chain rule") {
  Vector raw(2);
  raw << 0.3, -50.0;
  const auto h = gaussian_head_from_output(raw);
  CHECK(h.mean(0) == 0.3);
  CHECK(h.stddev(0) >= kSigmaFloor);
  Rng rng(2);
  const Vector r = testing::random_vector(rng, 4, 2.0);
  const Vector gm = testing::random_vector(rng, 2), gs = testing::random_vector(rng, 2);
  const Vector g = gaussian_head_raw_gradient(r, gm, gs);
  for (int i = 0; i < 4; ++i) {
    auto f = [&](double d) {
      Vector q = r;
      q(i) += d;
      const auto hh = gaussian_head_from_output(q);
      return gm.dot(hh.mean) + gs.dot(hh.stddev);
    };
    CHECK(g(i) == doctest::Approx((f(1e-6) - f(-1e-6)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("softmax") {
  const Vector s = softmax(Vector::Zero(4));
  for (int i = 0; i < 4; ++i) CHECK(s(i) == doctest::Approx(0.25));
  Vector c(2);
  c << 3.0, 3.0;
  for (double k : {-1000.0, 0.0, 1000.0}) {
    const Vector t = softmax((c.array() + k).matrix());
    CHECK(t(0) == doctest::Approx(0.5));
    CHECK(t(1) == doctest::Approx(0.5));
  }
  Vector q(4);
  q << 10, 0, 0, 0;
  const double direct = std::exp(10.0) / (std::exp(10.0) + 3.0);
  CHECK(softmax(q)(0) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(softmax(q)(0) == doctest::Approx(0.999864).epsilon(1e-6));
  Vector bad = Vector::Zero(2);
  bad(0) = std::nan("");
  CHECK_THROWS_AS(softmax(bad), NumericError);
}

TEST_CASE("blend_from: hard copy, no-op and two-step closed form") {
  Layer a;
  a.weight = Matrix::Constant(1, 1, 1.0);
  a.bias = Vector::Constant(1, 0.0);
  Layer b = a;
  b.weight(0, 0) = 3.0;
  b.bias(0) = 2.0;
  Network target(std::vector<Layer>{a});
  const Network learned(std::vector<Layer>{b});

  Network copy = target;
  copy.blend_from(learned, 0.0);
  CHECK(copy.parameter_distance(learned) == 0.0);
  Network same = target;
  same.blend_from(learned, 1.0);
  CHECK(same.parameter_distance(target) == 0.0);

  target.blend_from(learned, 0.99);
  target.blend_from(learned, 0.99);
  // w2 = 0.99^2 w0 + (1 - 0.99^2) w*
  CHECK(target.layers()[0].weight(0, 0) == doctest::Approx(0.9801 * 1.0 + 0.0199 * 3.0).epsilon(1e-14));
  CHECK(target.layers()[0].bias(0) == doctest::Approx(0.0199 * 2.0).epsilon(1e-14));
}

TEST_CASE("snapshot round trip and shape check") {
  Rng rng(21);
  const std::vector<int> widths = {3, 4, 2};
  Network net(widths, Activation::relu, Activation::identity, rng);
  const auto path = std::filesystem::temp_directory_path() / "cgr_snapshot_test.bin";
  save_snapshot(net, path);
  Network other(widths, Activation::relu, Activation::identity, rng);
  load_snapshot(other, path);
  CHECK(other.flat_parameters() == net.flat_parameters());
  const std::vector<int> wrong = {3, 5, 2};
  Network mismatched(wrong, Activation::relu, Activation::identity, rng);
  CHECK_THROWS(load_snapshot(mismatched, path));
  {
    std::ofstream extra(path, std::ios::app | std::ios::binary);
    extra << 'x';
  }
  CHECK_THROWS(load_snapshot(other, path));
  std::filesystem::remove(path);
}
