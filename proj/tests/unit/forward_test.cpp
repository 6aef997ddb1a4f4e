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
#include <random>

#include "hnet/error.hpp"
#include "hnet/forward.hpp"
#include "hnet/weights.hpp"
#include "reference.hpp"

namespace hnet {
namespace {

WeightSet random_weights(const MultiExitNetwork& net, std::mt19937_64& rng) {
  WeightSet ws = init_weights(net, rng());
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& [name, p] : ws.real) {
    for (double& b : p.bias) b = u(rng);
  }
  return ws;
}

std::vector<Tensor> calibration_inputs(const MultiExitNetwork& net,
                                       std::mt19937_64& rng, int n) {
  std::vector<Tensor> out;
  for (int i = 0; i < n; ++i) out.push_back(oracle::random_input(rng, net.input_shape()));
  return out;
}

MultiExitNetwork fc_chain() {
  return MultiExitNetwork::build("chain", {4, 1, 1}, 2,
                                 {std::vector<LayerSpec>{LayerSpec::fc(3)},
                                  {LayerSpec::fc(3)},
                                  {LayerSpec::fc(3)}});
}

TEST(Softmax, EqualLogits) {
  const auto p = softmax(std::vector<double>(10, 3.0));
  for (double v : p) EXPECT_NEAR(v, 0.1, 1e-12);
}

TEST(Softmax, HandComputed) {
  const auto p = softmax(std::vector<double>{2, 1, 0});
  EXPECT_NEAR(p[0], 0.6652, 1e-4);
  EXPECT_NEAR(p[1], 0.2447, 1e-4);
  EXPECT_NEAR(p[2], 0.0900, 1e-4);
}

TEST(Softmax, LargeLogitNoOverflow) {
  const auto p = softmax(std::vector<double>{1000, 0, 0});
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  for (double v : p) EXPECT_TRUE(std::isfinite(v));
}

TEST(Softmax, SumsToOneOnRandomLogits) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 20);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> l(7);
    for (double& v : l) v = n(rng);
    double s = 0;
    for (double v : softmax(l)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax(std::vector<double>{0, NAN}), ValidationError);
  EXPECT_THROW(softmax(std::vector<double>{}), ValidationError);
}

TEST(Argmax, FirstMaximumWins) {
  EXPECT_EQ(argmax(std::vector<double>{1, 3, 3, 2}), 1u);
}

TEST(Forward, ZeroWeightsGiveZeroLogits) {
  const MultiExitNetwork net = build_preset("resnet_mini", 4, {3, 8, 8});
  const WeightSet ws = zero_weights(net);
  for (int e = 1; e <= kNumExits; ++e) {
    for (double v : forward_to_exit(net, ws, Tensor::from_shape3({3, 8, 8}), e,
                                    BitWidth::FP32)) {
      EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Forward, IdentityConvPassesPooledInput) {
  const MultiExitNetwork net = MultiExitNetwork::build(
      "id", {2, 3, 3}, 2,
      {std::vector<LayerSpec>{LayerSpec::conv(2, 1, 1, 0, false)},
       {LayerSpec::conv(2, 1, 1, 0, false)},
       {LayerSpec::conv(2, 1, 1, 0, false)}});
  WeightSet ws = zero_weights(net);
  for (const ParamSlot& s : net.param_slots()) {
    // Conv [out][in][1][1] and head [out][in] share the 2x2 layout.
    Tensor& w = ws.real[s.name].weight;
    w[0] = 1.0;
    w[3] = 1.0;
  }
  Tensor x = Tensor::from_shape3({2, 3, 3});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const auto logits = forward_to_exit(net, ws, x, 3, BitWidth::FP32);
  EXPECT_NEAR(logits[0], 4.0, 1e-12);   // mean of 0..8
  EXPECT_NEAR(logits[1], 13.0, 1e-12);  // mean of 9..17
}

TEST(Forward, Fp32MatchesOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 60; ++i) {
    const MultiExitNetwork net = oracle::random_network(rng);
    const WeightSet ws = random_weights(net, rng);
    const Tensor x = oracle::random_input(rng, net.input_shape());
    for (int e = 1; e <= kNumExits; ++e) {
      const auto got = forward_to_exit(net, ws, x, e, BitWidth::FP32);
      const auto want = oracle::reference_forward(net, ws, x, e, BitWidth::FP32);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-6);
    }
  }
}

TEST(Forward, QuantizedMatchesOracleBitExactly) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 60; ++i) {
    const MultiExitNetwork net = oracle::random_network(rng);
    WeightSet ws = random_weights(net, rng);
    const auto calib = calibration_inputs(net, rng, 4);
    for (BitWidth bw : kQuantizedBitWidths) {
      quantize_weights(net, ws, bw, calib);
      const Tensor x = oracle::random_input(rng, net.input_shape());
      for (int e = 1; e <= kNumExits; ++e) {
        const auto got = forward_to_exit(net, ws, x, e, bw);
        const auto want = oracle::reference_forward(net, ws, x, e, bw);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k], want[k]);
      }
    }
  }
}

TEST(Forward, OnGridQ8EqualsFp32) {
  const MultiExitNetwork net = fc_chain();
  WeightSet ws = zero_weights(net);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> code(-1, 1);
  const QuantParams unit{1.0, 0.0, BitWidth::Q8};
  auto& q8 = ws.quantized[BitWidth::Q8];
  for (const ParamSlot& s : net.param_slots()) {
    LayerParams& p = ws.real[s.name];
    QuantizedLayer ql;
    ql.weight.shape = s.weight_shape;
    ql.weight.params = unit;
    ql.input = unit;
    for (double& w : p.weight.data) {
      w = code(rng);
      ql.weight.codes.push_back(static_cast<std::int8_t>(w));
    }
    for (double& b : p.bias) b = code(rng);
    ql.bias = p.bias;
    q8[s.name] = ql;
  }
  std::uniform_int_distribution<int> in(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = Tensor::from_shape3(net.input_shape());
    for (double& v : x.data) v = in(rng);
    for (int e = 1; e <= kNumExits; ++e) {
      EXPECT_EQ(forward_to_exit(net, ws, x, e, BitWidth::Q8),
                forward_to_exit(net, ws, x, e, BitWidth::FP32));
    }
  }
}

TEST(ExitRunner, SteppingMatchesForwardToExit) {
  std::mt19937_64 rng(13);
  const MultiExitNetwork net = build_preset("densenet_mini", 5, {1, 12, 12});
  WeightSet ws = random_weights(net, rng);
  quantize_weights(net, ws, BitWidth::Q8, calibration_inputs(net, rng, 3));
  const Tensor x = oracle::random_input(rng, net.input_shape());
  for (BitWidth bw : {BitWidth::FP32, BitWidth::Q8}) {
    ExitRunner runner(net, ws, bw);
    runner.start(x);
    const auto all = forward_all_exits(net, ws, x, bw);
    for (int e = 1; e <= kNumExits; ++e) {
      EXPECT_EQ(runner.next_exit(), e);
      const auto logits = runner.advance();
      EXPECT_EQ(logits, forward_to_exit(net, ws, x, e, bw));
      EXPECT_EQ(logits, all[e - 1]);
    }
    EXPECT_EQ(runner.next_exit(), 4);
    EXPECT_THROW(runner.advance(), ExecutionError);
  }
}

TEST(Forward, RejectsBadInputs) {
  const MultiExitNetwork net = fc_chain();
  const WeightSet ws = zero_weights(net);
  EXPECT_THROW(forward_to_exit(net, ws, Tensor({3}), 1, BitWidth::FP32), ValidationError);
  EXPECT_THROW(forward_to_exit(net, ws, Tensor({4}), 0, BitWidth::FP32), ValidationError);
  EXPECT_THROW(forward_to_exit(net, ws, Tensor({4}), 1, BitWidth::Q4), ValidationError);
  EXPECT_THROW(forward_to_exit(net, WeightSet{}, Tensor({4}), 1, BitWidth::FP32),
               ValidationError);
}

TEST(Forward, RepeatedPassesAgree) {
  const MultiExitNetwork net = build_preset("resnet_mini", 3, {3, 8, 8});
  std::mt19937_64 rng(14);
  const WeightSet ws = random_weights(net, rng);
  const Tensor x = oracle::random_input(rng, net.input_shape());
  const auto a = forward_to_exit(net, ws, x, 3, BitWidth::FP32);
  const auto b = forward_to_exit(net, ws, x, 3, BitWidth::FP32);
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace hnet
