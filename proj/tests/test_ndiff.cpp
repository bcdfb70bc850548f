#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "styleprior/adam.hpp"
#include "styleprior/gradcheck.hpp"
#include "styleprior/ops.hpp"
#include "styleprior/rng.hpp"
#include "styleprior/tensor.hpp"

using namespace styleprior;

namespace {

// Reference convolution, quadruple loop, independent of the library path.
std::vector<double> conv_naive(const std::vector<double>& in, int ci, int h, int w,
                               const std::vector<double>& ker, int co, int k,
                               const std::vector<double>& bias, int pad) {
  const int ho = h + 2 * pad - k + 1;
  const int wo = w + 2 * pad - k + 1;
  std::vector<double> out(static_cast<std::size_t>(co) * ho * wo, 0.0);
  for (int oc = 0; oc < co; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < ci; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy + ky - pad;
              const int ix = ox + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += in[(ic * h + iy) * w + ix] * ker[((oc * ci + ic) * k + ky) * k + kx];
            }
        out[(oc * ho + oy) * wo + ox] = acc;
      }
  return out;
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  std::vector<double> data(n);
  for (auto& v : data) v = scale * rng.normal();
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  Tensor t({2}, {1.0, 2.0}, true);
  CHECK(t.grad().size() == 2);
  Tensor u({2}, {1.0, 2.0});
  CHECK_THROWS_AS(u.grad(), ValidationError);
  Tensor bad({2}, {1.0, std::nan("")});
  CHECK_THROWS_AS(bad.validate_finite("input"), ValidationError);
}

TEST_CASE("conv2d: 1x1 kernel is a scalar multiply") {
  Tensor in({1, 1, 1}, {2.0});
  Tensor ker({1, 1, 1, 1}, {3.0});
  Tensor b({1}, {0.0});
  Tensor out = conv2d(in, ker, b, 0);
  CHECK(out.value() == doctest::Approx(6.0));
}

TEST_CASE("conv2d: delta kernel reproduces the input") {
  Rng rng(11);
  Tensor in = random_tensor({2, 5, 5}, rng);
  std::vector<double> kd(2 * 2 * 9, 0.0);
  kd[(0 * 2 + 0) * 9 + 4] = 1.0;  // center tap, channel 0 -> 0
  kd[(1 * 2 + 1) * 9 + 4] = 1.0;  // channel 1 -> 1
  Tensor ker({2, 2, 3, 3}, kd);
  Tensor b({2}, {0.0, 0.0});
  Tensor out = conv2d(in, ker, b, 1);
  REQUIRE(out.shape() == in.shape());
  for (int i = 0; i < in.numel(); ++i) CHECK(out.data()[i] == doctest::Approx(in.data()[i]));
}

TEST_CASE("conv2d: matches the naive oracle") {
  SUBCASE("scaled ones 1x1 kernel with bias") {
    Tensor in({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    Tensor ker({1, 1, 1, 1}, {2.0});
    Tensor b({1}, {1.0});
    Tensor out = conv2d(in, ker, b, 0);
    std::vector<double> expect = conv_naive(in.data_vec(), 1, 2, 2, ker.data_vec(), 1, 1, b.data_vec(), 0);
    CHECK(expect == std::vector<double>{3.0, 5.0, 7.0, 9.0});
    for (int i = 0; i < 4; ++i) CHECK(out.data()[i] == doctest::Approx(expect[i]));
  }
  SUBCASE("random shapes against the oracle") {
    Rng rng(21);
    Tensor in = random_tensor({3, 6, 5}, rng);
    Tensor ker = random_tensor({4, 3, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    Tensor out = conv2d(in, ker, b, 1);
    std::vector<double> expect =
        conv_naive(in.data_vec(), 3, 6, 5, ker.data_vec(), 4, 3, b.data_vec(), 1);
    REQUIRE(out.numel() == static_cast<std::int64_t>(expect.size()));
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(out.data()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d: shape errors") {
  Tensor in({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
  Tensor ker({1, 2, 1, 1}, {1.0, 1.0});
  Tensor b({1}, {0.0});
  CHECK_THROWS_AS(conv2d(in, ker, b, 0), DimensionError);
  Tensor even({1, 1, 2, 2}, {1.0, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(conv2d(in, even, b, 0), DimensionError);
}

TEST_CASE("conv2d: gradients for every input slot") {
  Rng rng(31);
  Tensor in = random_tensor({2, 4, 4}, rng);
  Tensor ker = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  Tensor target = random_tensor({3, 4, 4}, rng);

  auto wrt_input = [&](const Tensor& x) { return l1_norm(conv2d(x, ker, b, 1), target); };
  auto wrt_kernel = [&](const Tensor& x) { return l1_norm(conv2d(in, x, b, 1), target); };
  auto wrt_bias = [&](const Tensor& x) { return l1_norm(conv2d(in, ker, x, 1), target); };
  CHECK(check_gradients(wrt_input, in) < 1e-5);
  CHECK(check_gradients(wrt_kernel, ker) < 1e-5);
  CHECK(check_gradients(wrt_bias, b) < 1e-5);

  // strided path
  Tensor ks = random_tensor({2, 2, 3, 3}, rng);
  Tensor bs = random_tensor({2}, rng);
  Tensor target2 = random_tensor({2, 2, 2}, rng);
  auto strided = [&](const Tensor& x) { return l1_norm(conv2d(x, ks, bs, 1, 2), target2); };
  CHECK(check_gradients(strided, in) < 1e-5);
}

TEST_CASE("adain: pure instance normalization") {
  Rng rng(41);
  Tensor x = random_tensor({3, 4, 4}, rng, 2.0);
  Tensor s({3}, {1.0, 1.0, 1.0});
  Tensor b({3}, {0.0, 0.0, 0.0});
  const double eps = 1e-5;
  Tensor y = adain(x, s, b, eps);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    const double* p = y.data() + c * 16;
    for (int i = 0; i < 16; ++i) mean += p[i];
    mean /= 16.0;
    for (int i = 0; i < 16; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= 16.0;
    CHECK(std::fabs(mean) < 1e-8);
    CHECK(std::fabs(var - 1.0) < 10.0 * eps);
  }
}

TEST_CASE("adain: constant channel collapses to bias") {
  Tensor x = Tensor::full({1, 2, 2}, 5.0);
  Tensor s({1}, {3.0});
  Tensor b({1}, {0.7});
  Tensor y = adain(x, s, b, 1e-5);
  for (int i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("adain: two-point channel closed form") {
  Tensor x({1, 1, 2}, {-1.0, 1.0});
  Tensor s({1}, {2.0});
  Tensor b({1}, {1.0});
  Tensor y = adain(x, s, b, 1e-12);
  CHECK(y.data()[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(y.data()[1] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("adain: gradients for every input slot") {
  Rng rng(51);
  Tensor x = random_tensor({2, 3, 3}, rng);
  Tensor s({2}, {1.5, 0.8});
  Tensor b({2}, {0.2, -0.4});
  Tensor target = random_tensor({2, 3, 3}, rng);
  auto wrt_x = [&](const Tensor& t) { return l1_norm(adain(t, s, b, 1e-5), target); };
  auto wrt_s = [&](const Tensor& t) { return l1_norm(adain(x, t, b, 1e-5), target); };
  auto wrt_b = [&](const Tensor& t) { return l1_norm(adain(x, s, t, 1e-5), target); };
  CHECK(check_gradients(wrt_x, x) < 1e-5);
  CHECK(check_gradients(wrt_s, s) < 1e-5);
  CHECK(check_gradients(wrt_b, b) < 1e-5);
}

TEST_CASE("linear: examples and gradients") {
  SUBCASE("identity weight, zero bias") {
    Tensor x({2}, {3.0, -4.0});
    Tensor w({2, 2}, {1.0, 0.0, 0.0, 1.0});
    Tensor b({2}, {0.0, 0.0});
    Tensor y = linear(x, w, b);
    CHECK(y.data()[0] == doctest::Approx(3.0));
    CHECK(y.data()[1] == doctest::Approx(-4.0));
  }
  SUBCASE("zero weight returns bias") {
    Tensor x({2}, {3.0, -4.0});
    Tensor w = Tensor::zeros({2, 2});
    Tensor b({2}, {0.5, -0.5});
    Tensor y = linear(x, w, b);
    CHECK(y.data()[0] == doctest::Approx(0.5));
    CHECK(y.data()[1] == doctest::Approx(-0.5));
  }
  SUBCASE("hand matrix-vector oracle") {
    Tensor x({2}, {1.0, 1.0});
    Tensor w({2, 2}, {1.0, 2.0, 3.0, 4.0});
    Tensor b({2}, {0.0, 0.0});
    Tensor y = linear(x, w, b);
    CHECK(y.data()[0] == doctest::Approx(3.0));
    CHECK(y.data()[1] == doctest::Approx(7.0));
  }
  SUBCASE("dimension mismatch") {
    Tensor x({3}, {1.0, 1.0, 1.0});
    Tensor w({2, 2}, {1.0, 2.0, 3.0, 4.0});
    Tensor b({2}, {0.0, 0.0});
    CHECK_THROWS_AS(linear(x, w, b), DimensionError);
  }
  SUBCASE("gradients") {
    Rng rng(61);
    Tensor x = random_tensor({4}, rng);
    Tensor w = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({3}, rng);
    Tensor target = random_tensor({3}, rng);
    CHECK(check_gradients([&](const Tensor& t) { return l1_norm(linear(t, w, b), target); }, x) < 1e-5);
    CHECK(check_gradients([&](const Tensor& t) { return l1_norm(linear(x, t, b), target); }, w) < 1e-5);
    CHECK(check_gradients([&](const Tensor& t) { return l1_norm(linear(x, w, t), target); }, b) < 1e-5);
  }
}

TEST_CASE("leaky_relu: examples") {
  Tensor x({3}, {5.0, -10.0, 0.0});
  Tensor y = leaky_relu(x, 0.2);
  CHECK(y.data()[0] == doctest::Approx(5.0));
  CHECK(y.data()[1] == doctest::Approx(-2.0));
  CHECK(y.data()[2] == doctest::Approx(0.0));

  // slope at the origin is alpha by convention
  Tensor x0({1}, {0.0}, true);
  Tensor loss = l1_norm(leaky_relu(x0, 0.2), Tensor({1}, {-1.0}));
  backward(loss);
  CHECK(x0.grad()[0] == doctest::Approx(0.2));
}

TEST_CASE("leaky_relu: exact gradient away from zero") {
  Tensor x({4}, {1.5, -2.0, 0.3, -0.7});
  Tensor target = Tensor::zeros({4});
  auto f = [&](const Tensor& t) { return l1_norm(leaky_relu(t, 0.2), target); };
  CHECK(check_gradients(f, x, 1e-6) < 1e-8);
}

TEST_CASE("upsample2x: examples and gradient") {
  Tensor one({1, 1, 1}, {1.0});
  Tensor up = upsample2x(one);
  REQUIRE(up.shape() == std::vector<int>{1, 2, 2});
  for (int i = 0; i < 4; ++i) CHECK(up.data()[i] == doctest::Approx(1.0));

  Tensor constant = Tensor::full({2, 3, 3}, 0.25);
  Tensor upc = upsample2x(constant);
  for (int i = 0; i < upc.numel(); ++i) CHECK(upc.data()[i] == doctest::Approx(0.25));

  // gradient of the output sum w.r.t. each input pixel is 4
  Tensor x = Tensor::full({1, 2, 2}, 0.5, true);
  Tensor loss = l1_norm(upsample2x(x), Tensor::zeros({1, 4, 4}));
  backward(loss);
  for (int i = 0; i < 4; ++i) CHECK(x.grad()[i] == doctest::Approx(4.0));

  Rng rng(71);
  Tensor r = random_tensor({2, 3, 3}, rng);
  Tensor target = random_tensor({2, 6, 6}, rng);
  CHECK(check_gradients([&](const Tensor& t) { return l1_norm(upsample2x(t), target); }, r) < 1e-5);
}

TEST_CASE("downsample_avg: examples, mean preservation, gradient") {
  Rng rng(81);
  Tensor x = random_tensor({2, 4, 4}, rng);
  SUBCASE("k=1 is the identity") {
    Tensor y = downsample_avg(x, 1);
    for (int i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
  }
  SUBCASE("block mean") {
    Tensor t({1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    CHECK(downsample_avg(t, 2).value() == doctest::Approx(2.5));
  }
  SUBCASE("constant stays constant") {
    Tensor c = Tensor::full({1, 4, 4}, 0.3);
    Tensor y = downsample_avg(c, 2);
    for (int i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == doctest::Approx(0.3));
  }
  SUBCASE("global mean preserved") {
    Tensor y = downsample_avg(x, 2);
    double ma = 0.0, mb = 0.0;
    for (int i = 0; i < x.numel(); ++i) ma += x.data()[i];
    for (int i = 0; i < y.numel(); ++i) mb += y.data()[i];
    CHECK(ma / x.numel() == doctest::Approx(mb / y.numel()).epsilon(1e-13));
  }
  SUBCASE("factor must divide the extent") {
    CHECK_THROWS_AS(downsample_avg(x, 3), DimensionError);
  }
  SUBCASE("gradient") {
    Tensor target = random_tensor({2, 2, 2}, rng);
    CHECK(check_gradients([&](const Tensor& t) { return l1_norm(downsample_avg(t, 2), target); }, x) < 1e-5);
  }
}

TEST_CASE("l1_loss: examples and gradient") {
  Tensor a({2}, {2.0, -2.0});
  Tensor b = Tensor::zeros({2});
  CHECK(l1_loss(a, a).value() == doctest::Approx(0.0));
  CHECK(l1_loss(Tensor({1}, {1.0}), Tensor({1}, {0.0})).value() == doctest::Approx(1.0));
  CHECK(l1_loss(a, b).value() == doctest::Approx(2.0));
  CHECK_THROWS_AS(l1_loss(a, Tensor::zeros({3})), DimensionError);

  Rng rng(91);
  Tensor x = random_tensor({6}, rng);
  Tensor t = random_tensor({6}, rng);
  CHECK(check_gradients([&](const Tensor& v) { return l1_loss(v, t); }, x) < 1e-5);
  CHECK(check_gradients([&](const Tensor& v) { return l1_loss(x, v); }, t) < 1e-5);
}

TEST_CASE("elementwise mul, scale, slice, concat, reshape gradients") {
  Rng rng(101);
  Tensor a = random_tensor({5}, rng);
  Tensor b = random_tensor({5}, rng);
  Tensor t5 = random_tensor({5}, rng);
  CHECK(check_gradients([&](const Tensor& v) { return l1_norm(mul(v, b), t5); }, a) < 1e-5);
  CHECK(check_gradients([&](const Tensor& v) { return l1_norm(mul(a, v), t5); }, b) < 1e-5);
  CHECK(check_gradients([&](const Tensor& v) { return l1_norm(scale(v, -2.5), t5); }, a) < 1e-5);

  Tensor t3 = random_tensor({3}, rng);
  CHECK(check_gradients([&](const Tensor& v) { return l1_norm(slice(v, 1, 3), t3); }, a) < 1e-5);

  Tensor t10 = random_tensor({10}, rng);
  CHECK(check_gradients(
            [&](const Tensor& v) { return l1_norm(concat({v, b}), t10); }, a) < 1e-5);

  Tensor img = random_tensor({2, 2, 2}, rng);
  Tensor t8 = random_tensor({8}, rng);
  CHECK(check_gradients([&](const Tensor& v) { return l1_norm(flatten(v), t8); }, img) < 1e-5);
}

TEST_CASE("check_gradients: linear function is exact to machine precision") {
  Tensor w({4}, {1.0, -2.0, 3.0, 0.5});
  Tensor zero = Tensor::zeros({4});
  auto f = [&](const Tensor& x) { return l1_norm(mul(x, w), zero); };
  Tensor x({4}, {1.0, 1.0, 1.0, 1.0});  // all products positive or fixed sign
  CHECK(check_gradients(f, x, 1e-6) < 1e-9);
}

TEST_CASE("check_gradients: smooth composite") {
  Rng rng(111);
  Tensor x = random_tensor({4}, rng);
  Tensor w = random_tensor({4, 4}, rng);
  Tensor b = random_tensor({4}, rng);
  Tensor t = random_tensor({4}, rng);
  auto f = [&](const Tensor& v) { return l1_norm(tanh_op(linear(v, w, b)), t); };
  CHECK(check_gradients(f, x) < 1e-5);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor p({3}, {1.0, 2.0, 3.0}, true);
  AdamState opt({{"p", p}}, {});
  opt.step();
  CHECK(p.data()[0] == doctest::Approx(1.0));
  CHECK(p.data()[1] == doctest::Approx(2.0));
  CHECK(p.data()[2] == doctest::Approx(3.0));
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam: first step closed form") {
  const double lr = 1e-3, eps = 1e-8, g = 0.37;
  Tensor p({1}, {2.0}, true);
  AdamConfig cfg;
  cfg.lr = lr;
  cfg.eps = eps;
  AdamState opt({{"p", p}}, cfg);
  p.impl()->grad[0] = g;
  opt.step();
  const double expect = 2.0 - lr * g / (std::fabs(g) + eps);
  CHECK(p.data()[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("adam: deterministic trajectories") {
  auto run = [] {
    Rng rng(7);
    Tensor p({4}, rng.normal_vec(4), true);
    Tensor t({4}, rng.normal_vec(4));
    AdamConfig cfg;
    cfg.lr = 0.05;
    AdamState opt({{"p", p}}, cfg);
    for (int i = 0; i < 50; ++i) {
      Tensor loss = l1_norm(p, t);
      backward(loss);
      opt.step();
    }
    return p.data_vec();
  };
  std::vector<double> a = run();
  std::vector<double> b = run();
  CHECK(a == b);  // bit-identical
}

TEST_CASE("adam: non-finite gradient names the parameter") {
  Tensor p({1}, {1.0}, true);
  AdamState opt({{"style.3.w", p}}, {});
  p.impl()->grad[0] = std::nan("");
  try {
    opt.step();
    FAIL("expected OptimError");
  } catch (const OptimError& e) {
    CHECK(std::string(e.what()).find("style.3.w") != std::string::npos);
  }
}

TEST_CASE("randomized gradient sweep over all ops") {
  Rng rng(131);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor x = random_tensor({2, 4, 4}, rng);
    Tensor ker = random_tensor({2, 2, 3, 3}, rng, 0.5);
    Tensor bias = random_tensor({2}, rng, 0.1);
    Tensor sc({2}, {1.2, 0.9});
    Tensor bi({2}, {0.1, -0.2});
    Tensor target = random_tensor({2, 8, 8}, rng);
    auto f = [&](const Tensor& v) {
      Tensor h1 = conv2d(v, ker, bias, 1);
      Tensor h2 = adain(h1, sc, bi, 1e-5);
      Tensor h3 = leaky_relu(h2, 0.2);
      Tensor h4 = upsample2x(h3);
      return l1_norm(tanh_op(h4), target);
    };
    CHECK(check_gradients(f, x) < 1e-5);
  }
}
