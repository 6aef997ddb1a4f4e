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

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/tensor.hpp"

namespace hnet {

enum class LayerKind {
  Conv2D,
  FullyConnected,
  ReLU,
  MaxPool,
  AdaptiveAvgPool,
  ResidualAdd,
  DenseConcat,
  Flatten,
  Softmax,
};

std::string_view to_string(LayerKind kind);

// Marks the network input as the source of a skip connection.
inline constexpr int kNetworkInput = -1;

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  int out_channels = 0;  // Conv2D
  int out_features = 0;  // FullyConnected
  int kernel = 1;        // Conv2D, MaxPool
  int stride = 1;        // Conv2D, MaxPool
  int padding = 0;       // Conv2D
  int out_h = 1;         // AdaptiveAvgPool
  int out_w = 1;         // AdaptiveAvgPool
  int source = kNetworkInput;  // ResidualAdd, DenseConcat: earlier layer id
  bool bias = true;            // Conv2D, FullyConnected

  // Filled in by MultiExitNetwork::build.
  int id = -1;
  Shape3 in_shape;
  Shape3 out_shape;

  bool parametric() const {
    return kind == LayerKind::Conv2D || kind == LayerKind::FullyConnected;
  }

  static LayerSpec conv(int out_channels, int kernel, int stride = 1,
                        int padding = 0, bool bias = true);
  static LayerSpec fc(int out_features, bool bias = true);
  static LayerSpec relu();
  static LayerSpec max_pool(int kernel, int stride);
  static LayerSpec adaptive_avg_pool(int out_h, int out_w);
  static LayerSpec residual_add(int source);
  static LayerSpec dense_concat(int source);
  static LayerSpec flatten();
  static LayerSpec softmax();
};

// Exit head: adaptive average pool to 1x1 followed by a fully connected
// classifier with bias.
struct ExitHead {
  Shape3 in_shape;
  int num_classes = 0;
};

// Where a trainable tensor pair lives in the graph.
struct ParamSlot {
  std::string name;        // "L<id>" for backbone layers, "E<exit>" for heads
  int layer_id = -1;       // backbone layer id, or -1 for exit heads
  int exit_index = 0;      // 1..3 for exit heads
  std::vector<int> weight_shape;
  int bias_size = 0;       // 0 when the layer has no bias
  int fan_in = 0;

  std::string weight_name() const { return name + ".weight"; }
  std::string bias_name() const { return name + ".bias"; }
};

inline constexpr int kNumExits = 3;

// A backbone split into three segments, each followed by an exit head:
// EE1 after segment 1, EE2 after segment 2, ME after segment 3.
class MultiExitNetwork {
 public:
  // Assigns layer ids in order, propagates shapes and rejects any graph
  // whose shapes do not resolve. Cumulative MAC counts must strictly
  // increase from EE1 to ME.
  static MultiExitNetwork build(
      std::string name, Shape3 input_shape, int num_classes,
      std::array<std::vector<LayerSpec>, kNumExits> segments);

  const std::string& name() const { return name_; }
  Shape3 input_shape() const { return input_shape_; }
  int num_classes() const { return num_classes_; }

  std::span<const LayerSpec> layers() const { return layers_; }
  // Segments and exits are numbered 1..3.
  std::span<const LayerSpec> segment(int s) const;
  int segment_begin(int s) const;
  int segment_end(int s) const;
  const ExitHead& exit(int e) const;
  std::span<const ParamSlot> param_slots() const { return slots_; }
  const ParamSlot* slot_for_layer(int layer_id) const;
  const ParamSlot& slot_for_exit(int e) const;

 private:
  MultiExitNetwork() = default;

  std::string name_;
  Shape3 input_shape_;
  int num_classes_ = 0;
  std::vector<LayerSpec> layers_;
  std::array<int, kNumExits + 1> bounds_{};
  std::array<ExitHead, kNumExits> exits_{};
  std::vector<ParamSlot> slots_;
};

enum class Preset { ResNetMini, DenseNetMini };

Preset parse_preset(std::string_view name);
MultiExitNetwork build_preset(std::string_view name, int num_classes,
                              Shape3 input_shape);
MultiExitNetwork build_preset(Preset preset, int num_classes,
                              Shape3 input_shape);

// MACs of a single layer: k*k*Cin*Cout*Hout*Wout for Conv2D, in*out for
// FullyConnected, zero otherwise.
std::uint64_t layer_macs(const LayerSpec& layer);
std::uint64_t head_macs(const ExitHead& head);
// Backbone MACs of segment s alone, without its exit head.
std::uint64_t segment_macs(const MultiExitNetwork& net, int s);
// Work between the decision at exit s-1 and the decision at exit s:
// segment s plus exit head s.
std::uint64_t segment_work_macs(const MultiExitNetwork& net, int s);
// Segments 1..e plus exit head e.
std::uint64_t count_macs(const MultiExitNetwork& net, int up_to_exit);

std::uint64_t layer_params(const LayerSpec& layer);
std::uint64_t head_params(const ExitHead& head);
// Every backbone layer and every exit head.
std::uint64_t count_params(const MultiExitNetwork& net);
// Parameters needed to produce exit e: segments 1..e plus head e.
std::uint64_t count_params_to_exit(const MultiExitNetwork& net, int e);
// Storage bytes: 4 per value at FP32, 1 at Q8, two codes per byte at Q4.
std::uint64_t param_bytes(std::uint64_t params, BitWidth bw);
std::uint64_t param_bytes(const MultiExitNetwork& net, BitWidth bw);

}  // namespace hnet
