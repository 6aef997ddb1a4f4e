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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/quantizer.hpp"
#include "hnet/tensor.hpp"

namespace hnet {

struct LayerParams {
  Tensor weight;
  std::vector<double> bias;  // empty when the layer has no bias
};

// Weights and activation-input parameters of one parametric layer at a
// quantized precision. Biases stay real; they are added after the integer
// accumulation.
struct QuantizedLayer {
  QuantTensor weight;
  std::vector<double> bias;
  QuantParams input;
};

// Master real weights plus optional quantized snapshots, keyed by
// ParamSlot::name ("L<id>" or "E<exit>").
struct WeightSet {
  std::map<std::string, LayerParams> real;
  std::map<BitWidth, std::map<std::string, QuantizedLayer>> quantized;

  bool has_precision(BitWidth bw) const {
    return bw == BitWidth::FP32 || quantized.contains(bw);
  }
  // Every parametric slot present with matching shapes; throws otherwise.
  void validate(const MultiExitNetwork& net) const;
  void validate(const MultiExitNetwork& net, BitWidth bw) const;
};

WeightSet zero_weights(const MultiExitNetwork& net);
// Uniform(-b, b) with b = sqrt(6 / fan_in); biases start at zero.
WeightSet init_weights(const MultiExitNetwork& net, std::uint64_t seed);

// Values gathered from calibration passes for one parametric slot.
struct ActivationStats {
  RangeObserver observer;
  std::vector<double> sample;  // strided subsample used by the MSE observer
};

inline constexpr std::size_t kCalibrationSampleCap = 8192;

// Runs FP32 forward passes over `calibration` through every exit and
// records the input range of each parametric slot.
std::map<std::string, ActivationStats> collect_activation_stats(
    const MultiExitNetwork& net, const WeightSet& weights,
    std::span<const Tensor> calibration, ObserverMode mode);

// Weight params come from a per-tensor observer (MinMax at Q8, MSE search
// at Q4). Activation params come from `stats`.
QuantizedLayer quantize_layer(const LayerParams& params, BitWidth bw,
                              const QuantParams& input);
QuantParams weight_qparams(const Tensor& weight, BitWidth bw);
ObserverMode default_observer_mode(BitWidth bw);

// Fills weights.quantized[bw] from the real weights and calibration inputs.
void quantize_weights(const MultiExitNetwork& net, WeightSet& weights,
                      BitWidth bw, std::span<const Tensor> calibration);

// Manifest + blob container. `manifest` is the JSON path; the blob is
// written next to it with extension ".bin".
void save_weights(const WeightSet& weights, const std::filesystem::path& manifest,
                  const std::string& graph_name);
WeightSet load_weights(const std::filesystem::path& manifest);

}  // namespace hnet
