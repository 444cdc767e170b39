#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "eegcn/autodiff.hpp"
#include "eegcn/optim.hpp"
#include "eegcn/util.hpp"

using namespace eegcn;
using ad::Tensor;

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

Tensor random_param(Rng& rng, ad::Shape shape) {
  auto n = ad::shape_size(shape);
  return Tensor::parameter(std::move(shape), random_values(rng, n));
}

// Weighted sum against a fixed random tensor so every output coordinate
// feeds the loss with a distinct coefficient.
Tensor weighted_sum(const Tensor& out, const Tensor& weights) {
  if (out.size() == 1) return ad::scale(ad::sum(out), weights[0]);
  return ad::sum(ad::mul(out, weights));
}

using Builder = std::function<Tensor(std::vector<Tensor>&)>;

// Runs the finite-difference check at 100 random points for one kernel.
double worst_kernel_error(const std::vector<ad::Shape>& shapes, const ad::Shape& out_shape, const Builder& build,
                          std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Tensor> params;
    for (const auto& s : shapes) params.push_back(random_param(rng, s));
    Tensor w = Tensor::from(out_shape, random_values(rng, ad::shape_size(out_shape)));
    auto loss_fn = [&] { return weighted_sum(build(params), w); };
    worst = std::max(worst, ad::finite_diff_check(loss_fn, params));
  }
  return worst;
}

}  // namespace

TEST_CASE("softmax examples") {
  auto a = ad::softmax(Tensor::from({1, 2}, {0.0, 0.0}));
  CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(0.5).epsilon(1e-15));

  auto b = ad::softmax(Tensor::from({1, 2}, {std::log(2.0), 0.0}));
  CHECK(std::abs(b[0] - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(b[1] - 1.0 / 3.0) < 1e-15);

  // large logits must not overflow
  auto c = ad::softmax(Tensor::from({1, 3}, {1000.0, 1000.0, -1000.0}));
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[2] == 0.0);
}

TEST_CASE("softmax rows are distributions") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t r = 1 + rng.below(5), c = 1 + rng.below(7);
    auto s = ad::softmax(Tensor::from({r, c}, random_values(rng, r * c, -30.0, 30.0)));
    for (std::size_t i = 0; i < r; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        CHECK(s.at(i, j) >= 0.0);
        total += s.at(i, j);
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("relu and identity matmul") {
  auto r = ad::relu(Tensor::from({1, 3}, {-1.0, 0.0, 2.0}));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 2.0);

  auto m = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  auto i2 = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto out = ad::matmul(i2, m);
  for (std::size_t k = 0; k < 6; ++k) CHECK(out[k] == m[k]);
}

TEST_CASE("shape errors name the kernel") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({2, 3});
  try {
    ad::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ad::ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
  CHECK_THROWS_AS(ad::add(a, Tensor::zeros({3, 2})), ad::ShapeError);
  CHECK_THROWS_AS(ad::slice_cols(a, 2, 5), ad::ShapeError);
  std::vector<Tensor> in{a};
  CHECK_THROWS_AS(ad::forward_kernel("conv3d", in), std::invalid_argument);
}

TEST_CASE("forward_kernel dispatch matches direct calls") {
  Rng rng(3);
  auto a = Tensor::from({2, 3}, random_values(rng, 6));
  auto b = Tensor::from({3, 2}, random_values(rng, 6));
  std::vector<Tensor> ab{a, b};
  auto mm = ad::forward_kernel("matmul", ab);
  auto direct = ad::matmul(a, b);
  for (std::size_t k = 0; k < mm.size(); ++k) CHECK(mm[k] == direct[k]);

  std::vector<Tensor> just_a{a};
  auto s = ad::forward_kernel("scale", just_a, {.scalar = 2.5});
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(s[k] == 2.5 * a[k]);
  auto m = ad::forward_kernel("mean", just_a, {.axis = 1});
  CHECK(m.shape() == ad::Shape{2, 1});
  std::vector<Tensor> aa{a, a};
  CHECK(ad::forward_kernel("concat", aa).shape() == ad::Shape{2, 6});
  CHECK(ad::forward_kernel("transpose", just_a).shape() == ad::Shape{3, 2});
}

TEST_CASE("backward basics") {
  SUBCASE("sum gives ones") {
    auto x = Tensor::parameter({2, 3}, std::vector<double>(6, 0.7));
    ad::GradientTape tape;
    tape.backward(ad::sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
  }
  SUBCASE("square") {
    auto x = Tensor::parameter({1, 1}, {3.0});
    ad::GradientTape tape;
    tape.backward(ad::sum(ad::mul(x, x)));
    CHECK(x.grad()[0] == doctest::Approx(6.0));
  }
  SUBCASE("unreachable parameter keeps zero grad") {
    auto x = Tensor::parameter({1, 2}, {1.0, 2.0});
    auto y = Tensor::parameter({1, 2}, {1.0, 2.0});
    ad::GradientTape tape;
    tape.backward(ad::sum(x));
    for (double g : y.grad()) CHECK(g == 0.0);
  }
  SUBCASE("detached tensors get no gradient") {
    auto x = Tensor::parameter({1, 2}, {1.0, 2.0});
    auto c = x.detach();
    ad::GradientTape tape;
    auto loss = ad::sum(ad::add(ad::mul(c, c), x));
    tape.backward(loss);
    CHECK_FALSE(c.has_grad());
    CHECK(x.grad()[0] == 1.0);
  }
  SUBCASE("no-grad scope records nothing") {
    auto x = Tensor::parameter({1, 2}, {1.0, 2.0});
    ad::GradientTape tape;
    {
      ad::NoGradGuard guard;
      auto y = ad::relu(x);
      CHECK_FALSE(y.on_tape());
    }
    CHECK(tape.size() == 0);
  }
}

TEST_CASE("backward errors") {
  auto x = Tensor::parameter({1, 2}, {1.0, 2.0});
  ad::GradientTape tape;
  auto y = ad::relu(x);
  CHECK_THROWS_AS(tape.backward(y), ad::TapeError);
  auto loss = ad::sum(y);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), ad::TapeError);
  tape.reset();
  x.zero_grad();
  auto again = ad::sum(ad::relu(x));
  CHECK_NOTHROW(tape.backward(again));
  CHECK(x.grad()[1] == 1.0);
}

TEST_CASE("gradient additivity over repeated use") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_param(rng, {2, 3});
    std::size_t k = 1 + rng.below(5);
    ad::GradientTape tape;
    auto t = ad::tanh(x);
    std::vector<Tensor> uses(k, t);
    Tensor total = uses[0];
    for (std::size_t u = 1; u < k; ++u) total = ad::add(total, uses[u]);
    tape.backward(ad::sum(total));
    std::vector<double> multi(x.grad().begin(), x.grad().end());

    x.zero_grad();
    ad::GradientTape single;
    single.backward(ad::sum(ad::tanh(x)));
    for (std::size_t i = 0; i < multi.size(); ++i)
      CHECK(multi[i] == doctest::Approx(static_cast<double>(k) * x.grad()[i]).epsilon(1e-12));
  }
}

TEST_CASE("two-layer relu composite matches finite differences") {
  Rng rng(9);
  auto w1 = random_param(rng, {3, 4});
  auto w2 = random_param(rng, {4, 2});
  auto x = Tensor::from({1, 3}, {0.3, -0.8, 0.5});
  std::vector<Tensor> params{w1, w2};
  auto f = [&] { return ad::sum(ad::relu(ad::matmul(ad::relu(ad::matmul(x, w1)), w2))); };
  CHECK(ad::finite_diff_check(f, params) < 1e-4);
}

TEST_CASE("every kernel matches finite differences at 100 random points") {
  using S = std::vector<ad::Shape>;
  struct Case {
    const char* name;
    S shapes;
    ad::Shape out;
    Builder build;
  };
  const std::vector<std::size_t> ids{2, 0, 2, 1};
  std::vector<Case> cases{
      {"matmul", {{2, 3}, {3, 4}}, {2, 4}, [](auto& p) { return ad::matmul(p[0], p[1]); }},
      {"add", {{2, 3}, {2, 3}}, {2, 3}, [](auto& p) { return ad::add(p[0], p[1]); }},
      {"add_broadcast", {{3, 4}, {1, 4}}, {3, 4}, [](auto& p) { return ad::add(p[0], p[1]); }},
      {"sub", {{2, 3}, {1, 3}}, {2, 3}, [](auto& p) { return ad::sub(p[0], p[1]); }},
      {"mul", {{2, 3}, {2, 3}}, {2, 3}, [](auto& p) { return ad::mul(p[0], p[1]); }},
      {"mul_broadcast", {{2, 3}, {1, 3}}, {2, 3}, [](auto& p) { return ad::mul(p[0], p[1]); }},
      {"scale", {{2, 3}}, {2, 3}, [](auto& p) { return ad::scale(p[0], -1.7); }},
      {"relu", {{3, 3}}, {3, 3}, [](auto& p) { return ad::relu(p[0]); }},
      {"tanh", {{2, 3}}, {2, 3}, [](auto& p) { return ad::tanh(p[0]); }},
      {"sigmoid", {{2, 3}}, {2, 3}, [](auto& p) { return ad::sigmoid(p[0]); }},
      {"softmax", {{2, 4}}, {2, 4}, [](auto& p) { return ad::softmax(p[0]); }},
      {"log_softmax", {{2, 4}}, {2, 4}, [](auto& p) { return ad::log_softmax(p[0]); }},
      {"mean_axis0", {{3, 2}}, {1, 2}, [](auto& p) { return ad::mean(p[0], 0); }},
      {"mean_axis1", {{3, 2}}, {3, 1}, [](auto& p) { return ad::mean(p[0], 1); }},
      {"sum", {{2, 3}}, {1}, [](auto& p) { return ad::sum(p[0]); }},
      {"transpose", {{2, 3}}, {3, 2}, [](auto& p) { return ad::transpose(p[0]); }},
      {"concat_cols", {{2, 1}, {2, 3}}, {2, 4}, [](auto& p) { return ad::concat_cols(p); }},
      {"concat_rows", {{1, 3}, {2, 3}}, {3, 3}, [](auto& p) { return ad::concat_rows(p); }},
      {"slice_cols", {{2, 5}}, {2, 2}, [](auto& p) { return ad::slice_cols(p[0], 1, 3); }},
      {"slice_rows", {{4, 2}}, {2, 2}, [](auto& p) { return ad::slice_rows(p[0], 2, 4); }},
      {"gather_rows", {{3, 2}}, {4, 2}, [&](auto& p) { return ad::gather_rows(p[0], ids); }},
      {"layer_norm", {{2, 4}, {1, 4}, {1, 4}}, {2, 4}, [](auto& p) { return ad::layer_norm(p[0], p[1], p[2]); }},
      {"l2_norm", {{2, 3}}, {1}, [](auto& p) { return ad::l2_norm(p[0]); }},
      {"cross_entropy", {{1, 3}}, {1}, [](auto& p) { return ad::cross_entropy(p[0], 1); }},
  };
  std::uint64_t seed = 100;
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(worst_kernel_error(c.shapes, c.out, c.build, seed++) < 1e-4);
  }
}

TEST_CASE("finite_diff_check examples") {
  auto x = Tensor::parameter({1}, {3.0});
  std::vector<Tensor> p{x};
  CHECK(ad::finite_diff_check([&] { return ad::sum(ad::mul(x, x)); }, p) < 1e-8);

  auto logits = Tensor::parameter({1, 3}, {0.2, -0.4, 1.1});
  std::vector<Tensor> q{logits};
  CHECK(ad::finite_diff_check([&] { return ad::cross_entropy(logits, 2); }, q) < 1e-6);

  auto c = Tensor::parameter({1, 2}, {1.0, 2.0});
  std::vector<Tensor> r{c};
  CHECK(ad::finite_diff_check([] { return Tensor::scalar(4.0); }, r) == 0.0);

  CHECK_THROWS_AS(ad::finite_diff_check([&] { return ad::sum(c); }, r, 0.0), std::invalid_argument);
  auto nan_fn = [&] { return ad::scale(ad::sum(c), std::numeric_limits<double>::quiet_NaN()); };
  CHECK_THROWS_AS(ad::finite_diff_check(nan_fn, r), ad::NonFiniteError);
}

TEST_CASE("adam examples") {
  SUBCASE("zero gradients leave parameters unchanged") {
    Rng rng(1);
    auto a = random_param(rng, {2, 3});
    auto before = std::vector<double>(a.data().begin(), a.data().end());
    std::vector<Tensor> p{a};
    ad::AdamState st;
    for (int i = 0; i < 5; ++i) {
      a.zero_grad();
      ad::adam_step(p, st);
    }
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(a[i] == before[i]);
    CHECK(st.step == 5);
  }
  SUBCASE("first and second step with unit gradient") {
    auto w = Tensor::parameter({1}, {0.0});
    std::vector<Tensor> p{w};
    ad::AdamState st;
    auto push_unit_grad = [&] {
      ad::GradientTape tape;
      tape.backward(ad::sum(w));
    };
    push_unit_grad();
    ad::adam_step(p, st);
    double first = w[0];
    CHECK(std::abs(first + 0.001) < 1e-6);
    CHECK_FALSE(std::any_of(w.grad().begin(), w.grad().end(), [](double g) { return g != 0.0; }));
    push_unit_grad();
    ad::adam_step(p, st);
    double second = w[0] - first;
    CHECK(std::abs(second / first - 1.0) < 0.1);
  }
  SUBCASE("shape drift is rejected") {
    auto a = Tensor::parameter({1, 2}, {0.0, 0.0});
    std::vector<Tensor> p{a};
    ad::AdamState st;
    ad::adam_step(p, st);
    std::vector<Tensor> other{Tensor::parameter({1, 3}, {0.0, 0.0, 0.0})};
    CHECK_THROWS_AS(ad::adam_step(other, st), ad::ShapeError);
    std::vector<Tensor> more{a, a};
    CHECK_THROWS_AS(ad::adam_step(more, st), ad::ShapeError);
  }
}
