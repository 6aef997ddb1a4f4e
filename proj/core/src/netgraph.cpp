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

#include "hnet/netgraph.hpp"

#include "hnet/error.hpp"

namespace hnet {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "conv";
    case LayerKind::FullyConnected: return "fc";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AdaptiveAvgPool: return "avgpool";
    case LayerKind::ResidualAdd: return "add";
    case LayerKind::DenseConcat: return "concat";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

LayerSpec LayerSpec::conv(int out_channels, int kernel, int stride,
                          int padding, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::Conv2D;
  l.out_channels = out_channels;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.bias = bias;
  return l;
}

LayerSpec LayerSpec::fc(int out_features, bool bias) {
  LayerSpec l;
  l.kind = LayerKind::FullyConnected;
  l.out_features = out_features;
  l.bias = bias;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::max_pool(int kernel, int stride) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::adaptive_avg_pool(int out_h, int out_w) {
  LayerSpec l;
  l.kind = LayerKind::AdaptiveAvgPool;
  l.out_h = out_h;
  l.out_w = out_w;
  return l;
}

LayerSpec LayerSpec::residual_add(int source) {
  LayerSpec l;
  l.kind = LayerKind::ResidualAdd;
  l.source = source;
  return l;
}

LayerSpec LayerSpec::dense_concat(int source) {
  LayerSpec l;
  l.kind = LayerKind::DenseConcat;
  l.source = source;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::Flatten;
  return l;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec l;
  l.kind = LayerKind::Softmax;
  return l;
}

namespace {

[[noreturn]] void reject(const LayerSpec& l, const std::string& why) {
  throw ValidationError("layer " + std::to_string(l.id) + " (" +
                        std::string(to_string(l.kind)) + "): " + why);
}

Shape3 propagate(const LayerSpec& l, Shape3 in,
                 const std::vector<LayerSpec>& earlier, Shape3 net_input) {
  auto source_shape = [&]() -> Shape3 {
    if (l.source == kNetworkInput) return net_input;
    if (l.source < 0 || l.source >= l.id) {
      reject(l, "source " + std::to_string(l.source) +
                    " must name an earlier layer or the input");
    }
    return earlier[l.source].out_shape;
  };

  switch (l.kind) {
    case LayerKind::Conv2D: {
      if (l.out_channels <= 0) reject(l, "out_channels must be positive");
      if (l.kernel <= 0 || l.stride <= 0 || l.padding < 0) {
        reject(l, "invalid kernel/stride/padding");
      }
      const int h = (in.h + 2 * l.padding - l.kernel) / l.stride + 1;
      const int w = (in.w + 2 * l.padding - l.kernel) / l.stride + 1;
      if (in.h + 2 * l.padding < l.kernel || in.w + 2 * l.padding < l.kernel) {
        reject(l, "kernel larger than padded input " + to_string(in));
      }
      return {l.out_channels, h, w};
    }
    case LayerKind::FullyConnected:
      if (l.out_features <= 0) reject(l, "out_features must be positive");
      return {l.out_features, 1, 1};
    case LayerKind::ReLU:
    case LayerKind::Softmax:
      return in;
    case LayerKind::MaxPool: {
      if (l.kernel <= 0 || l.stride <= 0) reject(l, "invalid kernel/stride");
      if (in.h < l.kernel || in.w < l.kernel) {
        reject(l, "pool window larger than input " + to_string(in));
      }
      return {in.c, (in.h - l.kernel) / l.stride + 1,
              (in.w - l.kernel) / l.stride + 1};
    }
    case LayerKind::AdaptiveAvgPool:
      if (l.out_h <= 0 || l.out_w <= 0 || l.out_h > in.h || l.out_w > in.w) {
        reject(l, "output size must be within input " + to_string(in));
      }
      return {in.c, l.out_h, l.out_w};
    case LayerKind::ResidualAdd: {
      const Shape3 s = source_shape();
      if (s != in) {
        reject(l, "residual shapes differ: " + to_string(s) + " vs " +
                      to_string(in));
      }
      return in;
    }
    case LayerKind::DenseConcat: {
      const Shape3 s = source_shape();
      if (s.h != in.h || s.w != in.w) {
        reject(l, "concat spatial sizes differ: " + to_string(s) + " vs " +
                      to_string(in));
      }
      return {s.c + in.c, in.h, in.w};
    }
    case LayerKind::Flatten:
      return {static_cast<int>(in.numel()), 1, 1};
  }
  reject(l, "unknown layer kind");
}

}  // namespace

MultiExitNetwork MultiExitNetwork::build(
    std::string name, Shape3 input_shape, int num_classes,
    std::array<std::vector<LayerSpec>, kNumExits> segments) {
  if (!input_shape.valid()) {
    throw ValidationError("input shape must be positive, got " +
                          to_string(input_shape));
  }
  if (num_classes < 2) {
    throw ValidationError("num_classes must be at least 2");
  }
  MultiExitNetwork net;
  net.name_ = std::move(name);
  net.input_shape_ = input_shape;
  net.num_classes_ = num_classes;

  Shape3 cur = input_shape;
  for (int s = 0; s < kNumExits; ++s) {
    if (segments[s].empty()) {
      throw ValidationError("segment " + std::to_string(s + 1) + " is empty");
    }
    net.bounds_[s] = static_cast<int>(net.layers_.size());
    for (LayerSpec l : segments[s]) {
      l.id = static_cast<int>(net.layers_.size());
      l.in_shape = cur;
      l.out_shape = propagate(l, cur, net.layers_, input_shape);
      cur = l.out_shape;
      net.layers_.push_back(l);
    }
    net.exits_[s] = ExitHead{cur, num_classes};
  }
  net.bounds_[kNumExits] = static_cast<int>(net.layers_.size());

  for (const LayerSpec& l : net.layers_) {
    if (!l.parametric()) continue;
    ParamSlot slot;
    slot.name = "L" + std::to_string(l.id);
    slot.layer_id = l.id;
    if (l.kind == LayerKind::Conv2D) {
      slot.weight_shape = {l.out_channels, l.in_shape.c, l.kernel, l.kernel};
      slot.fan_in = l.in_shape.c * l.kernel * l.kernel;
      slot.bias_size = l.bias ? l.out_channels : 0;
    } else {
      slot.fan_in = static_cast<int>(l.in_shape.numel());
      slot.weight_shape = {l.out_features, slot.fan_in};
      slot.bias_size = l.bias ? l.out_features : 0;
    }
    net.slots_.push_back(std::move(slot));
  }
  for (int e = 1; e <= kNumExits; ++e) {
    ParamSlot slot;
    slot.name = "E" + std::to_string(e);
    slot.exit_index = e;
    slot.fan_in = net.exits_[e - 1].in_shape.c;
    slot.weight_shape = {num_classes, slot.fan_in};
    slot.bias_size = num_classes;
    net.slots_.push_back(std::move(slot));
  }

  for (int e = 2; e <= kNumExits; ++e) {
    if (count_macs(net, e) <= count_macs(net, e - 1)) {
      throw ValidationError("cumulative MACs must strictly increase: exit " +
                            std::to_string(e) + " does not exceed exit " +
                            std::to_string(e - 1));
    }
  }
  return net;
}

std::span<const LayerSpec> MultiExitNetwork::segment(int s) const {
  return std::span<const LayerSpec>(layers_).subspan(
      segment_begin(s), segment_end(s) - segment_begin(s));
}

int MultiExitNetwork::segment_begin(int s) const {
  if (s < 1 || s > kNumExits) throw ValidationError("segment index out of range");
  return bounds_[s - 1];
}

int MultiExitNetwork::segment_end(int s) const {
  if (s < 1 || s > kNumExits) throw ValidationError("segment index out of range");
  return bounds_[s];
}

const ExitHead& MultiExitNetwork::exit(int e) const {
  if (e < 1 || e > kNumExits) throw ValidationError("exit index out of range");
  return exits_[e - 1];
}

const ParamSlot* MultiExitNetwork::slot_for_layer(int layer_id) const {
  for (const ParamSlot& s : slots_) {
    if (s.layer_id == layer_id) return &s;
  }
  return nullptr;
}

const ParamSlot& MultiExitNetwork::slot_for_exit(int e) const {
  for (const ParamSlot& s : slots_) {
    if (s.exit_index == e) return s;
  }
  throw ValidationError("exit index out of range");
}

Preset parse_preset(std::string_view name) {
  if (name == "resnet_mini") return Preset::ResNetMini;
  if (name == "densenet_mini") return Preset::DenseNetMini;
  throw ValidationError("unknown preset '" + std::string(name) +
                        "' (expected resnet_mini or densenet_mini)");
}

MultiExitNetwork build_preset(std::string_view name, int num_classes,
                              Shape3 input_shape) {
  return build_preset(parse_preset(name), num_classes, input_shape);
}

namespace {

// Appends conv-relu-conv-relu-conv-add-relu; the skip taps the first ReLU.
void residual_group(std::vector<LayerSpec>& seg, int& next_id, int width,
                    int stride) {
  seg.push_back(LayerSpec::conv(width, 3, stride, 1));
  seg.push_back(LayerSpec::relu());
  const int tap = next_id + 1;
  seg.push_back(LayerSpec::conv(width, 3, 1, 1));
  seg.push_back(LayerSpec::relu());
  seg.push_back(LayerSpec::conv(width, 3, 1, 1));
  seg.push_back(LayerSpec::residual_add(tap));
  seg.push_back(LayerSpec::relu());
  next_id += 7;
}

// Each dense layer is conv3x3(growth)-relu-concat(block input so far).
void dense_block(std::vector<LayerSpec>& seg, int& next_id, int layers,
                 int growth) {
  int tap = next_id - 1;
  for (int i = 0; i < layers; ++i) {
    seg.push_back(LayerSpec::conv(growth, 3, 1, 1));
    seg.push_back(LayerSpec::relu());
    seg.push_back(LayerSpec::dense_concat(tap));
    next_id += 3;
    tap = next_id - 1;
  }
}

}  // namespace

MultiExitNetwork build_preset(Preset preset, int num_classes,
                              Shape3 input_shape) {
  std::array<std::vector<LayerSpec>, kNumExits> segs;
  int next_id = 0;
  if (preset == Preset::ResNetMini) {
    residual_group(segs[0], next_id, 16, 1);
    residual_group(segs[1], next_id, 32, 2);
    residual_group(segs[2], next_id, 64, 2);
    return MultiExitNetwork::build("resnet_mini", input_shape, num_classes,
                                   std::move(segs));
  }

  constexpr int kGrowth = 12;
  constexpr int kLayersPerBlock = 4;
  int channels = 2 * kGrowth;
  segs[0].push_back(LayerSpec::conv(channels, 3, 1, 1));
  segs[0].push_back(LayerSpec::relu());
  next_id = 2;
  dense_block(segs[0], next_id, kLayersPerBlock, kGrowth);
  channels += kLayersPerBlock * kGrowth;
  for (int s = 1; s < kNumExits; ++s) {
    // Transition: halve channels, halve resolution.
    channels /= 2;
    segs[s].push_back(LayerSpec::conv(channels, 1));
    segs[s].push_back(LayerSpec::relu());
    segs[s].push_back(LayerSpec::max_pool(2, 2));
    next_id += 3;
    dense_block(segs[s], next_id, kLayersPerBlock, kGrowth);
    channels += kLayersPerBlock * kGrowth;
  }
  return MultiExitNetwork::build("densenet_mini", input_shape, num_classes,
                                 std::move(segs));
}

std::uint64_t layer_macs(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Conv2D:
      return static_cast<std::uint64_t>(l.kernel) * l.kernel * l.in_shape.c *
             l.out_channels * l.out_shape.h * l.out_shape.w;
    case LayerKind::FullyConnected:
      return static_cast<std::uint64_t>(l.in_shape.numel()) * l.out_features;
    default:
      return 0;
  }
}

std::uint64_t head_macs(const ExitHead& head) {
  return static_cast<std::uint64_t>(head.in_shape.c) * head.num_classes;
}

std::uint64_t segment_macs(const MultiExitNetwork& net, int s) {
  std::uint64_t total = 0;
  for (const LayerSpec& l : net.segment(s)) total += layer_macs(l);
  return total;
}

std::uint64_t segment_work_macs(const MultiExitNetwork& net, int s) {
  return segment_macs(net, s) + head_macs(net.exit(s));
}

std::uint64_t count_macs(const MultiExitNetwork& net, int up_to_exit) {
  std::uint64_t total = head_macs(net.exit(up_to_exit));
  for (int s = 1; s <= up_to_exit; ++s) total += segment_macs(net, s);
  return total;
}

std::uint64_t layer_params(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Conv2D:
      return static_cast<std::uint64_t>(l.kernel) * l.kernel * l.in_shape.c *
                 l.out_channels +
             (l.bias ? l.out_channels : 0);
    case LayerKind::FullyConnected:
      return static_cast<std::uint64_t>(l.in_shape.numel()) * l.out_features +
             (l.bias ? l.out_features : 0);
    default:
      return 0;
  }
}

std::uint64_t head_params(const ExitHead& head) {
  return static_cast<std::uint64_t>(head.in_shape.c + 1) * head.num_classes;
}

std::uint64_t count_params(const MultiExitNetwork& net) {
  std::uint64_t total = 0;
  for (const LayerSpec& l : net.layers()) total += layer_params(l);
  for (int e = 1; e <= kNumExits; ++e) total += head_params(net.exit(e));
  return total;
}

std::uint64_t count_params_to_exit(const MultiExitNetwork& net, int e) {
  std::uint64_t total = head_params(net.exit(e));
  for (int s = 1; s <= e; ++s) {
    for (const LayerSpec& l : net.segment(s)) total += layer_params(l);
  }
  return total;
}

std::uint64_t param_bytes(std::uint64_t params, BitWidth bw) {
  switch (bw) {
    case BitWidth::FP32: return params * 4;
    case BitWidth::Q8: return params;
    case BitWidth::Q4: return (params + 1) / 2;
  }
  return 0;
}

std::uint64_t param_bytes(const MultiExitNetwork& net, BitWidth bw) {
  return param_bytes(count_params(net), bw);
}

}  // namespace hnet
