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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hnet/eats.hpp"
#include "hnet/forward.hpp"
#include "hnet/harvestsim.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/quantizer.hpp"
#include "hnet/weights.hpp"

namespace {

using namespace hnet;

Tensor random_input(std::mt19937_64& rng, std::vector<int> shape) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t(std::move(shape));
  for (double& v : t.data) v = n(rng);
  return t;
}

struct Bench {
  MultiExitNetwork net;
  WeightSet weights;
  Tensor input;
};

const Bench& resnet() {
  static const Bench b = [] {
    MultiExitNetwork net = build_preset("resnet_mini", 10, {3, 16, 16});
    WeightSet ws = init_weights(net, 1);
    std::mt19937_64 rng(1);
    std::vector<Tensor> calib;
    for (int i = 0; i < 4; ++i) calib.push_back(random_input(rng, Tensor::from_shape3(net.input_shape()).shape));
    quantize_weights(net, ws, BitWidth::Q8, calib);
    quantize_weights(net, ws, BitWidth::Q4, calib);
    Tensor x = random_input(rng, Tensor::from_shape3(net.input_shape()).shape);
    return Bench{std::move(net), std::move(ws), std::move(x)};
  }();
  return b;
}

void BM_ForwardMainExit(benchmark::State& state) {
  const Bench& b = resnet();
  const auto bw = static_cast<BitWidth>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_to_exit(b.net, b.weights, b.input, 3, bw));
  }
  state.SetLabel(std::string(to_string(bw)));
}
BENCHMARK(BM_ForwardMainExit)
    ->Arg(static_cast<int>(BitWidth::FP32))
    ->Arg(static_cast<int>(BitWidth::Q8))
    ->Arg(static_cast<int>(BitWidth::Q4))
    ->Unit(benchmark::kMicrosecond);

void BM_FakeQuantize(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Tensor x = random_input(rng, {1, 1, static_cast<int>(state.range(0))});
  const QuantParams p = minmax_params(-3.0, 3.0, BitWidth::Q8);
  for (auto _ : state) benchmark::DoNotOptimize(fake_quantize(x, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FakeQuantize)->Arg(1 << 10)->Arg(1 << 16);

void BM_MseSearch(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Tensor x = random_input(rng, {1, 1, 4096});
  RangeObserver obs = observe({ObserverMode::MseSearch}, x.data);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_qparams(obs, BitWidth::Q4, x.data));
  }
}
BENCHMARK(BM_MseSearch);

void BM_Simulation(benchmark::State& state) {
  const Bench& b = resnet();
  HardwareProfile hw;
  hw.e_mac[BitWidth::FP32] = 1e-9;
  hw.e_mac[BitWidth::Q8] = 1.25e-10;
  hw.e_mac[BitWidth::Q4] = 6e-11;
  hw.delay_mac[BitWidth::FP32] = 1e-8;
  hw.delay_mac[BitWidth::Q8] = 1.7e-9;
  hw.delay_mac[BitWidth::Q4] = 8.5e-10;
  hw.f_max = 1.0;
  SimConfig c;
  c.dt = 1e-3;
  c.hardware = hw;
  c.thresholds = derive_thresholds(hw, b.net);
  c.e_cap = 4 * c.thresholds.e_th[BitWidth::FP32];
  c.e_init = 0.0;
  c.exit_thresholds[BitWidth::FP32] = {{0.5, 0.5, 0.0}};
  SynthParams sp;
  sp.offset = c.thresholds.r_th2;
  sp.amplitude = c.thresholds.r_th2;
  sp.period = 1.0;
  const HarvestTrace trace = synth_trace(TraceKind::Sinusoid, sp, 2.0, 1e-2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_simulation(c, b.net, b.weights, trace));
  }
}
BENCHMARK(BM_Simulation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
