/* Copyright 2026 The harvestnet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hnet/error.hpp"
#include "hnet/quantizer.hpp"

namespace hnet {
namespace {

QuantParams qp(double scale, double zero, BitWidth bw) { return {scale, zero, bw}; }

Tensor vec(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({n}, std::move(v));
}

TEST(BitWidth, CodeRanges) {
  EXPECT_EQ(code_range(BitWidth::Q8).min, -128);
  EXPECT_EQ(code_range(BitWidth::Q8).max, 127);
  EXPECT_EQ(code_range(BitWidth::Q4).min, -8);
  EXPECT_EQ(code_range(BitWidth::Q4).max, 7);
  EXPECT_THROW(code_range(BitWidth::FP32), ValidationError);
  EXPECT_LT(BitWidth::Q4, BitWidth::Q8);
  EXPECT_LT(BitWidth::Q8, BitWidth::FP32);
  EXPECT_EQ(parse_bitwidth("q4"), BitWidth::Q4);
  EXPECT_THROW(parse_bitwidth("q2"), Error);
}

TEST(AffineQuantize, OnGridValue) {
  EXPECT_EQ(affine_quantize(vec({0.5}), qp(0.1, 0, BitWidth::Q8)).codes[0], 5);
}

TEST(AffineQuantize, ClipsAtQ8Max) {
  EXPECT_EQ(affine_quantize(vec({20.0}), qp(0.1, 0, BitWidth::Q8)).codes[0], 127);
}

TEST(AffineQuantize, ClipsAtQ4Min) {
  EXPECT_EQ(affine_quantize(vec({-1.0}), qp(0.1, 0, BitWidth::Q4)).codes[0], -8);
}

TEST(AffineQuantize, RoundsHalfAwayFromZero) {
  const auto q = affine_quantize(vec({0.25, -0.25, 0.75, -0.75}), qp(0.5, 0, BitWidth::Q8));
  EXPECT_EQ(q.codes[0], 1);
  EXPECT_EQ(q.codes[1], -1);
  EXPECT_EQ(q.codes[2], 2);
  EXPECT_EQ(q.codes[3], -2);
}

TEST(AffineQuantize, RejectsNonFiniteWithIndex) {
  try {
    affine_quantize(vec({0.0, 1.0, std::numeric_limits<double>::quiet_NaN()}),
                    qp(0.1, 0, BitWidth::Q8));
    FAIL() << "expected rejection";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(AffineQuantize, RejectsBadScale) {
  EXPECT_THROW(affine_quantize(vec({1.0}), qp(0.0, 0, BitWidth::Q8)), ValidationError);
  EXPECT_THROW(affine_quantize(vec({1.0}), qp(-1.0, 0, BitWidth::Q8)), ValidationError);
  EXPECT_THROW(affine_quantize(vec({1.0}), qp(0.1, 0, BitWidth::FP32)), ValidationError);
}

TEST(Dequantize, Examples) {
  QuantTensor q{{3}, {5, 0, -8}, qp(0.1, 0, BitWidth::Q8)};
  EXPECT_DOUBLE_EQ(dequantize(q)[0], 0.5);
  q.params = qp(0.7, 0.3, BitWidth::Q8);
  EXPECT_DOUBLE_EQ(dequantize(q)[1], 0.3);
  q.params = qp(0.25, 0, BitWidth::Q4);
  EXPECT_DOUBLE_EQ(dequantize(q)[2], -2.0);
}

TEST(Dequantize, RejectsOutOfRangeCode) {
  QuantTensor q{{1}, {9}, qp(0.1, 0, BitWidth::Q4)};
  EXPECT_THROW(dequantize(q), ValidationError);
}

TEST(FakeQuantize, Examples) {
  EXPECT_DOUBLE_EQ(fake_quantize(vec({0.5}), qp(0.1, 0, BitWidth::Q8))[0], 0.5);
  EXPECT_DOUBLE_EQ(fake_quantize(vec({0.44}), qp(0.1, 0, BitWidth::Q8))[0], 4 * 0.1);
}

TEST(FakeQuantize, PropertiesOnRandomValues) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (BitWidth bw : kQuantizedBitWidths) {
    const CodeRange r = code_range(bw);
    for (int trial = 0; trial < 200; ++trial) {
      const QuantParams p = qp(std::exp(u(rng) / 2), u(rng), bw);
      double prev_x = -1e9;
      double prev_y = fake_quantize_value(prev_x, p, r);
      for (int i = 0; i < 50; ++i) {
        const double x = p.zero_point + p.scale * (r.min + (r.max - r.min) * (u(rng) + 5) / 10);
        const double y = fake_quantize_value(x, p, r);
        EXPECT_LE(std::abs(y - x), p.scale / 2 * (1 + 1e-9));
        EXPECT_EQ(fake_quantize_value(y, p, r), y);
        const double z = prev_x + std::abs(u(rng));
        const double fz = fake_quantize_value(z, p, r);
        EXPECT_GE(fz, prev_y);
        prev_x = z;
        prev_y = fz;
      }
      EXPECT_EQ(fake_quantize_value(1e12, p, r), dequantize_value(r.max, p));
      EXPECT_EQ(fake_quantize_value(-1e12, p, r), dequantize_value(r.min, p));
    }
  }
}

TEST(SteGradient, PassesInsideAndAtBoundary) {
  const QuantParams p = qp(0.1, 0, BitWidth::Q8);
  const Tensor up = vec({2.0, 2.0, 2.0, 2.0});
  const Tensor x = vec({0.3, 100.0, 127 * 0.1, -128 * 0.1});
  const Tensor g = ste_gradient(up, x, p);
  EXPECT_EQ(g[0], 2.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 2.0);
  EXPECT_EQ(g[3], 2.0);
  EXPECT_THROW(ste_gradient(vec({1.0}), vec({1.0, 2.0}), p), ValidationError);
}

TEST(Observer, Examples) {
  RangeObserver o;
  o = observe(o, std::vector<double>{-1, 2});
  EXPECT_EQ(o.running_min, -1);
  EXPECT_EQ(o.running_max, 2);
  o = observe(o, std::vector<double>{0.5});
  EXPECT_EQ(o.running_min, -1);
  EXPECT_EQ(o.running_max, 2);
  EXPECT_EQ(o.sample_count, 2u);

  RangeObserver b;
  b = observe(observe(b, std::vector<double>{-3}), std::vector<double>{4});
  EXPECT_EQ(b.running_min, -3);
  EXPECT_EQ(b.running_max, 4);
  EXPECT_THROW(observe(b, std::vector<double>{INFINITY}), ValidationError);
}

TEST(ComputeQParams, MinMaxQ4) {
  RangeObserver o;
  o = observe(o, std::vector<double>{-1, 1});
  const QuantParams p = compute_qparams(o, BitWidth::Q4);
  EXPECT_DOUBLE_EQ(p.scale, 2.0 / 15.0);
  EXPECT_DOUBLE_EQ(p.zero_point, -1.0 + 8 * (2.0 / 15.0));
}

TEST(ComputeQParams, DegenerateRange) {
  RangeObserver o;
  o = observe(o, std::vector<double>{0, 0});
  const QuantParams p = compute_qparams(o, BitWidth::Q8);
  EXPECT_EQ(p.scale, 1e-8);
  EXPECT_EQ(p.zero_point, 0.0);
}

TEST(ComputeQParams, Errors) {
  EXPECT_THROW(compute_qparams(RangeObserver{}, BitWidth::Q8), ValidationError);
  RangeObserver o{ObserverMode::MseSearch};
  o = observe(o, std::vector<double>{-1, 1});
  EXPECT_THROW(compute_qparams(o, BitWidth::Q4, {}), ValidationError);
  EXPECT_THROW(compute_qparams(o, BitWidth::FP32, std::vector<double>{1}), ValidationError);
}

// Independent sweep: same candidate set, argmin by direct MSE evaluation.
QuantParams sweep_oracle(const std::vector<double>& x, BitWidth bw) {
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  const CodeRange r = code_range(bw);
  const double mm = (hi - lo) / (r.max - r.min);
  auto mse = [&](double scale, double zero) {
    double acc = 0.0;
    for (double v : x) {
      double q = std::round((v - zero) / scale);
      q = std::min<double>(std::max<double>(q, r.min), r.max);
      acc += (q * scale + zero - v) * (q * scale + zero - v);
    }
    return acc / x.size();
  };
  QuantParams best{mm, lo - r.min * mm, bw};
  double best_err = mse(best.scale, best.zero_point);
  for (int i = 0; i < 100; ++i) {
    const double s = mm * 0.1 * std::pow(20.0, i / 99.0);
    const double z = (lo + hi) / 2 - s * (r.min + r.max) / 2.0;
    const double e = mse(s, z);
    if (e < best_err) {
      best_err = e;
      best = {s, z, bw};
    }
  }
  return best;
}

TEST(ComputeQParams, MseSearchMatchesSweepOracle) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> sets = {{-1.0, 1.0}};
  for (int k = 0; k < 20; ++k) {
    std::vector<double> x(64);
    for (double& v : x) v = g(rng) * (k % 3 + 1) + (k % 2);
    sets.push_back(x);
  }
  for (const auto& x : sets) {
    RangeObserver o{ObserverMode::MseSearch};
    o = observe(o, x);
    const QuantParams got = compute_qparams(o, BitWidth::Q4, x);
    const QuantParams want = sweep_oracle(x, BitWidth::Q4);
    EXPECT_NEAR(got.scale, want.scale, 1e-12 * want.scale);
    EXPECT_NEAR(got.zero_point, want.zero_point, 1e-12);
  }
}

TEST(ComputeQParams, MseNeverWorseThanMinMax) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(50);
    for (double& v : x) v = g(rng) * (1 + k % 5);
    RangeObserver mm;
    mm = observe(mm, x);
    RangeObserver ms{ObserverMode::MseSearch};
    ms = observe(ms, x);
    for (BitWidth bw : kQuantizedBitWidths) {
      EXPECT_LE(reconstruction_mse(x, compute_qparams(ms, bw, x)),
                reconstruction_mse(x, compute_qparams(mm, bw, x)));
    }
  }
}

}  // namespace
}  // namespace hnet
