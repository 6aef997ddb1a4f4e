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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/dataset.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/quantizer.hpp"
#include "hnet/tensor.hpp"
#include "hnet/weights.hpp"

namespace hnet {

using ExitWeights = std::array<double, kNumExits>;

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 0.05;
  int batch_size = 16;
  BitWidth bit_width = BitWidth::FP32;
  ExitWeights exit_loss_weights{1.0, 1.0, 1.0};
  std::uint64_t seed = 1;

  void validate() const;
};

// JSON object with any subset of: epochs, learning_rate, batch_size,
// bit_width ("fp32"/"q8"/"q4"), exit_loss_weights [w1, w2, w3], seed.
TrainConfig parse_train_config(const std::string& text,
                               const std::string& source = "<config>");
TrainConfig load_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& config);

// Frozen input quantization params per parametric slot.
using ActivationParams = std::map<std::string, QuantParams>;

// logsumexp(logits) - logits[label].
double cross_entropy(std::span<const double> logits, int label);

// Sum over exits of w_e times the mean cross-entropy at exit e. At Q8/Q4 the
// weights are fake-quantized per tensor; inputs of parametric slots are
// fake-quantized too when `act` is given.
double qat_loss(const MultiExitNetwork& net, const WeightSet& weights,
                std::span<const Tensor> inputs, std::span<const int> labels,
                BitWidth bw, const ExitWeights& exit_weights,
                const ActivationParams* act = nullptr);

// Same loss, plus gradients with respect to the real master weights.
struct Gradients {
  std::map<std::string, LayerParams> slots;
};
double loss_and_gradients(const MultiExitNetwork& net, const WeightSet& weights,
                          std::span<const Tensor> inputs,
                          std::span<const int> labels, BitWidth bw,
                          const ExitWeights& exit_weights,
                          const ActivationParams* act, Gradients& grads);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  int checked = 0;
};

// Central differences on the FP32 loss over up to `per_tensor` sampled
// entries of every weight and bias tensor. Relative error is
// |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const MultiExitNetwork& net, const WeightSet& weights,
                           std::span<const Tensor> inputs,
                           std::span<const int> labels,
                           const ExitWeights& exit_weights,
                           double epsilon = 1e-5, int per_tensor = 16,
                           std::uint64_t seed = 1);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;                       // mean batch loss
  std::array<double, kNumExits> accuracy{};  // train accuracy after the epoch
  bool observing = false;                  // activation observers active
};

struct TrainResult {
  WeightSet weights;  // real master weights plus a snapshot at the trained precision
  std::vector<EpochLog> log;
  ActivationParams activation_params;  // empty for FP32 training
};

// Minibatch SGD on the weighted multi-exit loss. Quantized runs observe
// activation ranges during epoch 1 and train against frozen params from
// epoch 2 on. Throws ExecutionError if the loss becomes non-finite.
TrainResult train(const MultiExitNetwork& net, const LabeledDataset& data,
                  const TrainConfig& config);

// Accuracy of each exit through the inference engine at `bw`.
std::array<double, kNumExits> exit_accuracy(const MultiExitNetwork& net,
                                            const WeightSet& weights,
                                            const DataSplit& split, BitWidth bw);

// Adds Q8 and Q4 snapshots that are not already present.
void complete_precisions(const MultiExitNetwork& net, WeightSet& weights,
                         std::span<const Tensor> calibration);

}  // namespace hnet
