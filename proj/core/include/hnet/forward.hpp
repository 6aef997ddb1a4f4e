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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/quantizer.hpp"
#include "hnet/tensor.hpp"
#include "hnet/weights.hpp"

namespace hnet {

// Numerically stable softmax (max subtraction). Rejects non-finite logits.
std::vector<double> softmax(std::span<const double> logits);

std::size_t argmax(std::span<const double> values);

// Reconstructs sum_k (qa_k*sa + za) * (qw_k*sw + zw) from integer sums:
//   sa*sw*acc + sw*za*sum_w + sa*zw*sum_a + n*za*zw
// evaluated left to right, where acc = sum qa*qw, sum_a = sum qa,
// sum_w = sum qw and n is the number of products.
inline double affine_dot(std::int64_t acc, std::int64_t sum_a,
                         std::int64_t sum_w, std::int64_t n,
                         const QuantParams& a, const QuantParams& w) {
  return a.scale * w.scale * static_cast<double>(acc) +
         w.scale * a.zero_point * static_cast<double>(sum_w) +
         a.scale * w.zero_point * static_cast<double>(sum_a) +
         static_cast<double>(n) * a.zero_point * w.zero_point;
}

// Called with the real-valued input of each parametric slot before it is
// consumed (for exit heads, the pooled feature vector).
using SlotInputHook =
    std::function<void(const ParamSlot& slot, std::span<const double> input)>;

// Runs a network one segment at a time so callers can stop at any exit.
// Keeps every layer output of the current input alive for skip connections.
class ExitRunner {
 public:
  ExitRunner(const MultiExitNetwork& net, const WeightSet& weights,
             BitWidth precision);

  void set_hook(SlotInputHook hook) { hook_ = std::move(hook); }

  // Resets state for a new input of the network's input shape.
  void start(const Tensor& input);
  // Runs the next segment and its exit head; returns raw logits.
  std::vector<double> advance();
  // Exit that the next advance() will produce (1..3), or 4 when done.
  int next_exit() const { return next_exit_; }
  BitWidth precision() const { return precision_; }

 private:
  const std::vector<double>& activation(int layer_id) const;
  std::vector<double> run_layer(const LayerSpec& l,
                                const std::vector<double>& in);
  std::vector<double> run_head(int e, const std::vector<double>& in);

  const MultiExitNetwork& net_;
  const WeightSet& weights_;
  BitWidth precision_;
  const std::map<std::string, QuantizedLayer>* qlayers_ = nullptr;
  SlotInputHook hook_;
  std::vector<double> input_;
  std::vector<std::vector<double>> outputs_;
  int next_exit_ = 4;
};

// Runs segments 1..exit_index and then exit head exit_index.
std::vector<double> forward_to_exit(const MultiExitNetwork& net,
                                    const WeightSet& weights,
                                    const Tensor& input, int exit_index,
                                    BitWidth precision);

// Logits of all three exits from one pass.
std::array<std::vector<double>, kNumExits> forward_all_exits(
    const MultiExitNetwork& net, const WeightSet& weights, const Tensor& input,
    BitWidth precision);

}  // namespace hnet
