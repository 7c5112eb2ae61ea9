#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "gnet/ops.hpp"
#include "gnet/tensor.hpp"
#include "support/nn_oracles.hpp"
#include "support/test_util.hpp"

using gnet::ConvKernel;
using gnet::Error;
using gnet::Padding;
using gnet::Tensor;

namespace {

float max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  float worst = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("tensor layout is channel-major then row-major") {
  Tensor t(2, 3, 4);
  REQUIRE(t.size() == 24);
  t.at(1, 2, 3) = 42.0f;
  CHECK(t.values()[1 * 12 + 2 * 4 + 3] == 42.0f);
  CHECK(t.index(1, 2, 3) == 23);

  SECTION("adopting a mismatched buffer fails") {
    CHECK_THROWS_AS(Tensor(2, 3, 4, std::vector<float>(23)), Error);
  }
  SECTION("non-positive dimensions fail") {
    CHECK_THROWS_AS(Tensor(0, 3, 4), Error);
    CHECK_THROWS_AS(Tensor(2, -1, 4), Error);
  }
}

TEST_CASE("conv3x3 on all-zero input stays zero") {
  std::mt19937 rng(7);
  Tensor zero(1, 7, 7);
  ConvKernel k = testutil::random_kernel(rng, 4, 1);
  std::fill(k.bias.begin(), k.bias.end(), 0.0f);
  Tensor out = gnet::conv3x3(zero, k, Padding::Same);
  REQUIRE(out.channels() == 4);
  REQUIRE(out.height() == 7);
  REQUIRE(out.width() == 7);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0f);
}

TEST_CASE("valid padding shrinks 7x7 to 1x1 in three steps") {
  std::mt19937 rng(11);
  Tensor t = testutil::random_tensor(rng, 2, 7, 7);
  std::vector<int> sizes;
  for (int step = 0; step < 3; ++step) {
    ConvKernel k = testutil::random_kernel(rng, 2, t.channels());
    t = gnet::conv3x3(t, k, Padding::Valid);
    sizes.push_back(t.height());
    REQUIRE(t.height() == t.width());
  }
  CHECK(sizes == std::vector<int>{5, 3, 1});
}

TEST_CASE("conv3x3 matches the direct-loop oracle") {
  std::mt19937 rng(23);

  SECTION("fixed case: 2x5x5 input, 3 output channels, same padding") {
    Tensor in = testutil::random_tensor(rng, 2, 5, 5);
    ConvKernel k = testutil::random_kernel(rng, 3, 2);
    Tensor got = gnet::conv3x3(in, k, Padding::Same);
    Tensor want = oracle::conv3x3_direct(in, k, Padding::Same);
    CHECK(max_abs_diff(got, want) <= 1e-5f);
  }

  SECTION("randomized shapes up to 8x16x16, both paddings") {
    for (int trial = 0; trial < 60; ++trial) {
      const int ic = 1 + static_cast<int>(rng() % 8);
      const int oc = 1 + static_cast<int>(rng() % 8);
      const int h = 3 + static_cast<int>(rng() % 14);
      const int w = 3 + static_cast<int>(rng() % 14);
      const Padding pad = trial % 2 == 0 ? Padding::Same : Padding::Valid;
      Tensor in = testutil::random_tensor(rng, ic, h, w);
      ConvKernel k = testutil::random_kernel(rng, oc, ic);
      Tensor got = gnet::conv3x3(in, k, pad);
      Tensor want = oracle::conv3x3_direct(in, k, pad);
      REQUIRE(max_abs_diff(got, want) <= 1e-5f);
    }
  }
}

TEST_CASE("conv3x3 is linear in the input when bias is zero") {
  std::mt19937 rng(31);
  Tensor x = testutil::random_tensor(rng, 3, 9, 9);
  Tensor y = testutil::random_tensor(rng, 3, 9, 9);
  ConvKernel k = testutil::random_kernel(rng, 2, 3);
  std::fill(k.bias.begin(), k.bias.end(), 0.0f);
  const float a = 1.7f, b = -0.6f;

  Tensor mix(3, 9, 9);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    mix.data()[i] = a * x.data()[i] + b * y.data()[i];
  }
  Tensor lhs = gnet::conv3x3(mix, k, Padding::Same);
  Tensor cx = gnet::conv3x3(x, k, Padding::Same);
  Tensor cy = gnet::conv3x3(y, k, Padding::Same);
  float worst = 0.0f;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    worst = std::max(worst,
                     std::abs(lhs.data()[i] - (a * cx.data()[i] + b * cy.data()[i])));
  }
  CHECK(worst <= 1e-4f);
}

TEST_CASE("valid-padding spatial recurrence") {
  std::mt19937 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const int k_steps = 1 + static_cast<int>(rng() % 5);
    const int n = 2 * k_steps + 1 + static_cast<int>(rng() % 6);
    Tensor t = testutil::random_tensor(rng, 1, n, n);
    for (int s = 0; s < k_steps; ++s) {
      ConvKernel k = testutil::random_kernel(rng, 1, 1);
      t = gnet::conv3x3(t, k, Padding::Valid);
    }
    REQUIRE(t.height() == n - 2 * k_steps);
    REQUIRE(t.width() == n - 2 * k_steps);
  }
}

TEST_CASE("conv3x3 error paths") {
  std::mt19937 rng(41);
  Tensor in = testutil::random_tensor(rng, 2, 4, 4);
  SECTION("channel mismatch") {
    ConvKernel k = testutil::random_kernel(rng, 3, 5);
    CHECK_THROWS_AS(gnet::conv3x3(in, k, Padding::Same), Error);
  }
  SECTION("valid padding on spatial size below 3") {
    Tensor small = testutil::random_tensor(rng, 2, 2, 5);
    ConvKernel k = testutil::random_kernel(rng, 1, 2);
    CHECK_THROWS_AS(gnet::conv3x3(small, k, Padding::Valid), Error);
    CHECK(gnet::conv3x3(in, k, Padding::Valid).height() == 2);
  }
}

TEST_CASE("conv3x3 threaded path is bitwise identical") {
  std::mt19937 rng(43);
  Tensor in = testutil::random_tensor(rng, 5, 12, 10);
  ConvKernel k = testutil::random_kernel(rng, 7, 5);
  Tensor serial = gnet::conv3x3(in, k, Padding::Same, 1);
  Tensor parallel = gnet::conv3x3(in, k, Padding::Same, 3);
  REQUIRE(serial.same_shape(parallel));
  for (std::size_t i = 0; i < serial.size(); ++i) {
    REQUIRE(serial.data()[i] == parallel.data()[i]);
  }
}

TEST_CASE("relu") {
  SECTION("sign cases") {
    Tensor t(1, 1, 3, {-1.0f, 0.0f, 2.0f});
    Tensor r = gnet::relu(t);
    CHECK(r.values() == std::vector<float>{0.0f, 0.0f, 2.0f});
  }
  SECTION("idempotence and elementwise bounds on random input") {
    std::mt19937 rng(47);
    Tensor t = testutil::random_tensor(rng, 3, 6, 5, -2.0f, 2.0f);
    Tensor once = gnet::relu(t);
    Tensor twice = gnet::relu(once);
    for (std::size_t i = 0; i < t.size(); ++i) {
      REQUIRE(once.data()[i] >= 0.0f);
      REQUIRE(once.data()[i] == twice.data()[i]);
      if (t.data()[i] > 0.0f) REQUIRE(once.data()[i] <= t.data()[i]);
    }
  }
}

TEST_CASE("maxpool2x2") {
  SECTION("single block") {
    Tensor t(1, 2, 2, {1.0f, 2.0f, 3.0f, 4.0f});
    Tensor p = gnet::maxpool2x2(t);
    REQUIRE(p.size() == 1);
    CHECK(p.at(0, 0, 0) == 4.0f);
  }
  SECTION("224 feature map halves to 112") {
    Tensor t(64, 224, 224);
    Tensor p = gnet::maxpool2x2(t);
    CHECK(p.channels() == 64);
    CHECK(p.height() == 112);
    CHECK(p.width() == 112);
  }
  SECTION("matches the nested-loop oracle and dominates its block") {
    std::mt19937 rng(53);
    Tensor t = testutil::random_tensor(rng, 3, 8, 8);
    Tensor got = gnet::maxpool2x2(t);
    Tensor want = oracle::maxpool2x2_direct(t);
    CHECK(max_abs_diff(got, want) == 0.0f);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
          const float m = got.at(c, y, x);
          bool hit = false;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const float v = t.at(c, 2 * y + dy, 2 * x + dx);
              REQUIRE(m >= v);
              hit = hit || m == v;
            }
          }
          REQUIRE(hit);
        }
      }
    }
  }
  SECTION("odd spatial dimension is rejected") {
    Tensor t(1, 3, 4);
    CHECK_THROWS_AS(gnet::maxpool2x2(t), Error);
  }
}

TEST_CASE("softmax") {
  SECTION("symmetry") {
    std::vector<double> v{0.0, 0.0};
    auto p = gnet::softmax(std::span<const double>(v));
    CHECK(p[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(p[1] == Catch::Approx(0.5).margin(1e-12));
  }
  SECTION("normalization and positivity on random input") {
    std::mt19937 rng(59);
    std::uniform_real_distribution<double> dist(-30.0, 30.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> v(1 + rng() % 40);
      for (auto& x : v) x = dist(rng);
      auto p = gnet::softmax(std::span<const double>(v));
      double sum = 0.0;
      for (double x : p) {
        REQUIRE(x > 0.0);
        sum += x;
      }
      REQUIRE(std::abs(sum - 1.0) <= 1e-9);
    }
  }
  SECTION("matches extended-precision evaluation") {
    std::vector<double> v{1.0, 2.0, 3.0};
    auto got = gnet::softmax(std::span<const double>(v));
    auto want = oracle::softmax_extended(v);
    for (std::size_t i = 0; i < v.size(); ++i) {
      REQUIRE(std::abs(got[i] - want[i]) <= 1e-12);
    }
  }
  SECTION("empty input is rejected") {
    std::vector<double> v;
    CHECK_THROWS_AS(gnet::softmax(std::span<const double>(v)), Error);
  }
}
