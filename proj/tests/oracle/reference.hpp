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
#include <random>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/exitpolicy.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/tensor.hpp"
#include "hnet/weights.hpp"

namespace hnet::oracle {

// Plain nested-loop evaluation of one exit. Quantized layers rebuild their
// integer sums from codes and apply the same affine reconstruction order as
// the engine, so results compare bit for bit.
std::vector<double> reference_forward(const MultiExitNetwork& net,
                                      const WeightSet& weights, const Tensor& input,
                                      int exit_index, BitWidth bw);

// Counts one MAC per multiply performed by literal loops over every output
// element, padded taps included.
std::uint64_t loop_count_macs(const MultiExitNetwork& net, int exit_index);

// Random graph with one to max_layers_per_segment layers in each segment,
// drawn from every layer kind. Retries until the graph builds.
MultiExitNetwork random_network(std::mt19937_64& rng, int max_layers_per_segment = 4);

Tensor random_input(std::mt19937_64& rng, Shape3 shape);

// Accuracy of every (T1, T2) pair on the 21-point grid, computed by direct
// loops: table[i][j] is the accuracy at T1 = i/20, T2 = j/20.
using AccuracyTable = std::array<std::array<double, 21>, 21>;
AccuracyTable grid_accuracy(const std::vector<SampleExits>& samples);

// Reads the greedy answer off the full table: the smallest T1 whose row meets
// the floor at T2 = 1, then the smallest T2 in that row.
ExitThresholds grid_calibration(const std::vector<SampleExits>& samples,
                                double max_accuracy_drop);

// Computes all three confidences first, then applies the first-crossing rule.
int full_evaluation_exit(const MultiExitNetwork& net, const WeightSet& weights,
                         const Tensor& input, const ExitThresholds& t, BitWidth bw);

}  // namespace hnet::oracle
