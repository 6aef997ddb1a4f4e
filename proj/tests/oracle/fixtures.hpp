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

#include <random>
#include <vector>

#include "hnet/dataset.hpp"
#include "hnet/eats.hpp"
#include "hnet/harvestsim.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/weights.hpp"
#include "reference.hpp"

namespace hnet::fixtures {

// Small three-exit MLP with weights at every precision.
struct SimRig {
  MultiExitNetwork net;
  WeightSet weights;
  HardwareProfile hw;
  SchedulerThresholds thr;
};

inline SimRig make_sim_rig(std::uint64_t seed = 1) {
  MultiExitNetwork net = MultiExitNetwork::build(
      "rig", {8, 1, 1}, 4,
      {std::vector<LayerSpec>{LayerSpec::fc(12), LayerSpec::relu()},
       {LayerSpec::fc(12), LayerSpec::relu()},
       {LayerSpec::fc(12), LayerSpec::relu()}});
  WeightSet ws = init_weights(net, seed);
  std::mt19937_64 rng(seed);
  std::vector<Tensor> calib;
  for (int i = 0; i < 8; ++i) calib.push_back(oracle::random_input(rng, net.input_shape()));
  quantize_weights(net, ws, BitWidth::Q8, calib);
  quantize_weights(net, ws, BitWidth::Q4, calib);

  HardwareProfile hw;
  hw.e_mac[BitWidth::FP32] = 1e-5;
  hw.e_mac[BitWidth::Q8] = 1.25e-6;
  hw.e_mac[BitWidth::Q4] = 6e-7;
  hw.delay_mac[BitWidth::FP32] = 1e-4;
  hw.delay_mac[BitWidth::Q8] = 1.7e-5;
  hw.delay_mac[BitWidth::Q4] = 8.5e-6;
  hw.f_max = 1.0;
  const SchedulerThresholds thr = derive_thresholds(hw, net);
  return {std::move(net), std::move(ws), hw, thr};
}

inline SimConfig make_sim_config(const SimRig& rig, double e_cap, double e_init,
                                 ExitThresholds exits = {{1.0, 1.0, 0.0}}) {
  SimConfig c;
  c.dt = 1e-3;
  c.e_cap = e_cap;
  c.e_init = e_init;
  c.hardware = rig.hw;
  c.thresholds = rig.thr;
  c.exit_thresholds[BitWidth::FP32] = exits;
  c.input_seed = 7;
  return c;
}

// Plateaus below r_th1, between the thresholds, and above r_th2.
inline HarvestTrace step_trace(const SchedulerThresholds& thr, double plateau = 2.0) {
  SynthParams p;
  p.levels = {0.5 * thr.r_th1, 0.5 * (thr.r_th1 + thr.r_th2), 2.0 * thr.r_th2};
  return synth_trace(TraceKind::Step, p, 3 * plateau, 1e-2);
}

// Strong charging for one second, then nothing.
inline HarvestTrace crash_trace(const SchedulerThresholds& thr, double duration = 3.0) {
  return HarvestTrace{{{0.0, 2.0 * thr.r_th2}, {1.0, 2.0 * thr.r_th2},
                       {1.001, 0.0}, {duration, 0.0}}};
}

// Untrained MLP with weights scaled up so confidences spread over (1/K, 1),
// plus a labeled blob set to run it on.
struct ExitToy {
  MultiExitNetwork net;
  WeightSet weights;
  DataSplit data;
};

inline ExitToy make_exit_toy(std::uint64_t seed, int samples) {
  MultiExitNetwork net = MultiExitNetwork::build(
      "toy", {6, 1, 1}, 4,
      {std::vector<LayerSpec>{LayerSpec::fc(8), LayerSpec::relu()},
       {LayerSpec::fc(8), LayerSpec::relu()},
       {LayerSpec::fc(8), LayerSpec::relu()}});
  WeightSet ws = init_weights(net, seed);
  for (auto& [name, p] : ws.real) {
    for (double& w : p.weight.data) w *= 2.5;
  }
  const LabeledDataset d = make_blobs(seed, {6, 1, 1}, 4, {samples, 0, 0}, 0.8);
  return {std::move(net), std::move(ws), d.train};
}

}  // namespace hnet::fixtures
