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

#include <random>

#include "hnet/error.hpp"
#include "hnet/netgraph.hpp"
#include "reference.hpp"

namespace hnet {
namespace {

MultiExitNetwork tiny() {
  return MultiExitNetwork::build(
      "tiny", {1, 4, 4}, 3,
      {std::vector<LayerSpec>{LayerSpec::conv(2, 3, 1, 1), LayerSpec::relu()},
       {LayerSpec::conv(4, 3, 2, 1)},
       {LayerSpec::flatten(), LayerSpec::fc(5)}});
}

TEST(MacCount, HandComputedTinyNetwork) {
  const MultiExitNetwork net = tiny();
  // conv 3x3, 1->2, 4x4 out: 9*1*2*16 = 288; head 2*3 = 6.
  EXPECT_EQ(count_macs(net, 1), 288u + 6u);
  // conv 3x3 s2, 2->4, 2x2 out: 9*2*4*4 = 288; head 4*3 = 12.
  EXPECT_EQ(count_macs(net, 2), 288u + 288u + 12u);
  // fc 16->5 = 80; head 5*3 = 15.
  EXPECT_EQ(count_macs(net, 3), 288u + 288u + 80u + 15u);
  EXPECT_EQ(segment_work_macs(net, 2), 288u + 12u);
  EXPECT_EQ(segment_macs(net, 3), 80u);
}

TEST(ParamCount, HandComputedTinyNetwork) {
  const MultiExitNetwork net = tiny();
  // conv1 18+2, head1 6+3
  EXPECT_EQ(count_params_to_exit(net, 1), 20u + 9u);
  EXPECT_EQ(param_bytes(29, BitWidth::FP32), 116u);
  EXPECT_EQ(param_bytes(29, BitWidth::Q8), 29u);
  EXPECT_EQ(param_bytes(29, BitWidth::Q4), 15u);
}

TEST(MacCount, MatchesLoopCountingOracle) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const MultiExitNetwork net = oracle::random_network(rng);
    for (int e = 1; e <= kNumExits; ++e) {
      EXPECT_EQ(count_macs(net, e), oracle::loop_count_macs(net, e));
    }
  }
}

TEST(Presets, MonotoneMacsAndTaps) {
  for (const char* name : {"resnet_mini", "densenet_mini"}) {
    const MultiExitNetwork net =
        build_preset(name, 10, std::string(name) == "resnet_mini" ? Shape3{3, 32, 32}
                                                                  : Shape3{1, 28, 28});
    EXPECT_LT(count_macs(net, 1), count_macs(net, 2));
    EXPECT_LT(count_macs(net, 2), count_macs(net, 3));
    for (int e = 1; e <= kNumExits; ++e) {
      EXPECT_EQ(net.exit(e).in_shape, net.layers()[net.segment_end(e) - 1].out_shape);
      EXPECT_EQ(net.exit(e).num_classes, 10);
    }
  }
}

TEST(Presets, ResnetGroupsEndWithResidual) {
  const MultiExitNetwork net = build_preset("resnet_mini", 10, {3, 32, 32});
  for (int s = 1; s <= kNumExits; ++s) {
    const auto seg = net.segment(s);
    ASSERT_GE(seg.size(), 2u);
    EXPECT_EQ(seg[seg.size() - 2].kind, LayerKind::ResidualAdd);
  }
}

TEST(Presets, DensenetUsesConcat) {
  const MultiExitNetwork net = build_preset("densenet_mini", 10, {1, 28, 28});
  int concats = 0;
  for (const LayerSpec& l : net.layers()) concats += l.kind == LayerKind::DenseConcat;
  EXPECT_GT(concats, 0);
}

TEST(Build, RejectsUnresolvableShapes) {
  EXPECT_THROW(MultiExitNetwork::build("bad", {1, 2, 2}, 2,
                                       {std::vector<LayerSpec>{LayerSpec::conv(2, 5)},
                                        {LayerSpec::fc(2)},
                                        {LayerSpec::fc(2)}}),
               ValidationError);
  EXPECT_THROW(MultiExitNetwork::build("bad", {1, 4, 4}, 2,
                                       {std::vector<LayerSpec>{LayerSpec::conv(2, 3)},
                                        {LayerSpec::residual_add(kNetworkInput)},
                                        {LayerSpec::fc(2)}}),
               ValidationError);
  EXPECT_THROW(MultiExitNetwork::build("bad", {1, 4, 4}, 1,
                                       {std::vector<LayerSpec>{LayerSpec::fc(2)},
                                        {LayerSpec::fc(2)},
                                        {LayerSpec::fc(2)}}),
               ValidationError);
  EXPECT_THROW(MultiExitNetwork::build("bad", {1, 4, 4}, 2,
                                       {std::vector<LayerSpec>{LayerSpec::fc(2)},
                                        {},
                                        {LayerSpec::fc(2)}}),
               ValidationError);
}

TEST(Build, RejectsNonIncreasingExitCost) {
  // Segment 2 adds no MACs and the head cost is unchanged.
  EXPECT_THROW(MultiExitNetwork::build("flat", {2, 4, 4}, 2,
                                       {std::vector<LayerSpec>{LayerSpec::conv(2, 1)},
                                        {LayerSpec::relu()},
                                        {LayerSpec::fc(4)}}),
               ValidationError);
}

}  // namespace
}  // namespace hnet
