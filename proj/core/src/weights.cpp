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

#include "hnet/weights.hpp"

#include <cmath>
#include <random>

#include "hnet/container.hpp"
#include "hnet/error.hpp"
#include "hnet/forward.hpp"

namespace hnet {

namespace {

void check_slot(const ParamSlot& slot, const Tensor& weight,
                std::size_t bias_size) {
  if (weight.shape != slot.weight_shape) {
    throw ValidationError("weight '" + slot.weight_name() + "' has shape " +
                          shape_string(weight.shape) + ", graph expects " +
                          shape_string(slot.weight_shape));
  }
  if (bias_size != static_cast<std::size_t>(slot.bias_size)) {
    throw ValidationError("bias '" + slot.bias_name() + "' has " +
                          std::to_string(bias_size) + " values, graph expects " +
                          std::to_string(slot.bias_size));
  }
}

}  // namespace

void WeightSet::validate(const MultiExitNetwork& net) const {
  for (const ParamSlot& slot : net.param_slots()) {
    auto it = real.find(slot.name);
    if (it == real.end()) {
      throw ValidationError("missing weights for '" + slot.name + "'");
    }
    check_slot(slot, it->second.weight, it->second.bias.size());
  }
}

void WeightSet::validate(const MultiExitNetwork& net, BitWidth bw) const {
  if (!is_quantized(bw)) {
    validate(net);
    return;
  }
  auto q = quantized.find(bw);
  if (q == quantized.end()) {
    throw ValidationError("weights carry no " + std::string(to_string(bw)) +
                          " quantization");
  }
  for (const ParamSlot& slot : net.param_slots()) {
    auto it = q->second.find(slot.name);
    if (it == q->second.end()) {
      throw ValidationError("missing " + std::string(to_string(bw)) +
                            " weights for '" + slot.name + "'");
    }
    const QuantizedLayer& ql = it->second;
    if (ql.weight.shape != slot.weight_shape) {
      throw ValidationError("quantized weight '" + slot.weight_name() +
                            "' has wrong shape");
    }
    if (ql.bias.size() != static_cast<std::size_t>(slot.bias_size)) {
      throw ValidationError("quantized bias '" + slot.bias_name() +
                            "' has wrong size");
    }
    if (ql.weight.params.bit_width != bw || ql.input.bit_width != bw) {
      throw ValidationError("quantized layer '" + slot.name +
                            "' has mismatched bit width");
    }
  }
}

WeightSet zero_weights(const MultiExitNetwork& net) {
  WeightSet ws;
  for (const ParamSlot& slot : net.param_slots()) {
    ws.real[slot.name] =
        LayerParams{Tensor(slot.weight_shape),
                    std::vector<double>(slot.bias_size, 0.0)};
  }
  return ws;
}

WeightSet init_weights(const MultiExitNetwork& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightSet ws = zero_weights(net);
  for (const ParamSlot& slot : net.param_slots()) {
    const double bound = std::sqrt(6.0 / std::max(slot.fan_in, 1));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : ws.real[slot.name].weight.data) v = dist(rng);
  }
  return ws;
}

ObserverMode default_observer_mode(BitWidth bw) {
  return bw == BitWidth::Q4 ? ObserverMode::MseSearch : ObserverMode::MinMax;
}

QuantParams weight_qparams(const Tensor& weight, BitWidth bw) {
  RangeObserver obs{default_observer_mode(bw)};
  obs = observe(obs, weight.values());
  return compute_qparams(obs, bw, weight.values());
}

QuantizedLayer quantize_layer(const LayerParams& params, BitWidth bw,
                              const QuantParams& input) {
  QuantizedLayer ql;
  ql.weight = affine_quantize(params.weight, weight_qparams(params.weight, bw));
  ql.bias = params.bias;
  ql.input = input;
  return ql;
}

std::map<std::string, ActivationStats> collect_activation_stats(
    const MultiExitNetwork& net, const WeightSet& weights,
    std::span<const Tensor> calibration, ObserverMode mode) {
  if (calibration.empty()) {
    throw ValidationError("activation calibration needs at least one input");
  }
  std::map<std::string, ActivationStats> stats;
  for (const ParamSlot& slot : net.param_slots()) {
    stats[slot.name].observer.mode = mode;
  }
  // Per-input stride keeps each slot's sample near kCalibrationSampleCap.
  const std::size_t per_input = std::max<std::size_t>(
      1, kCalibrationSampleCap / calibration.size());
  ExitRunner runner(net, weights, BitWidth::FP32);
  runner.set_hook([&](const ParamSlot& slot, std::span<const double> in) {
    ActivationStats& st = stats[slot.name];
    st.observer = observe(st.observer, in);
    const std::size_t stride = std::max<std::size_t>(1, in.size() / per_input);
    for (std::size_t i = 0; i < in.size(); i += stride) st.sample.push_back(in[i]);
  });
  for (const Tensor& x : calibration) {
    runner.start(x);
    while (runner.next_exit() <= kNumExits) runner.advance();
  }
  return stats;
}

void quantize_weights(const MultiExitNetwork& net, WeightSet& weights,
                      BitWidth bw, std::span<const Tensor> calibration) {
  if (!is_quantized(bw)) return;
  weights.validate(net);
  const auto stats = collect_activation_stats(net, weights, calibration,
                                              default_observer_mode(bw));
  std::map<std::string, QuantizedLayer> layers;
  for (const ParamSlot& slot : net.param_slots()) {
    const ActivationStats& st = stats.at(slot.name);
    const QuantParams input = compute_qparams(st.observer, bw, st.sample);
    layers[slot.name] = quantize_layer(weights.real.at(slot.name), bw, input);
  }
  weights.quantized[bw] = std::move(layers);
}

namespace {
std::string qprefix(BitWidth bw) { return std::string(to_string(bw)) + "/"; }
}  // namespace

void save_weights(const WeightSet& weights, const std::filesystem::path& manifest,
                  const std::string& graph_name) {
  TensorContainer c;
  c.metadata()["content"] = "weights";
  c.metadata()["graph"] = graph_name;
  std::string precisions = "fp32";
  for (const auto& [name, p] : weights.real) {
    c.add(name + ".weight", p.weight);
    if (!p.bias.empty()) {
      c.add(name + ".bias", Tensor({static_cast<int>(p.bias.size())}, p.bias));
    }
  }
  for (const auto& [bw, layers] : weights.quantized) {
    precisions += "," + std::string(to_string(bw));
    for (const auto& [name, ql] : layers) {
      c.add(qprefix(bw) + name + ".weight", ql.weight);
      c.add_params(qprefix(bw) + name + ".input", ql.input);
    }
  }
  c.metadata()["precisions"] = precisions;
  write_container(c, manifest);
}

WeightSet load_weights(const std::filesystem::path& manifest) {
  const TensorContainer c = read_container(manifest);
  auto content = c.metadata().find("content");
  if (content == c.metadata().end() || content->second != "weights") {
    throw ValidationError(manifest.string() + " is not a weight container");
  }
  WeightSet ws;
  auto strip = [](const std::string& s, std::string_view suffix) {
    return s.substr(0, s.size() - suffix.size());
  };
  for (const ContainerItem& it : c.items()) {
    if (it.name.find('/') != std::string::npos) continue;
    if (it.name.ends_with(".weight")) {
      ws.real[strip(it.name, ".weight")].weight = Tensor(it.shape, it.reals);
    } else if (it.name.ends_with(".bias")) {
      ws.real[strip(it.name, ".bias")].bias = it.reals;
    }
  }
  for (BitWidth bw : kQuantizedBitWidths) {
    const std::string prefix = qprefix(bw);
    for (const ContainerItem& it : c.items()) {
      if (!it.name.starts_with(prefix) || !it.name.ends_with(".weight")) continue;
      const std::string name = strip(it.name.substr(prefix.size()), ".weight");
      QuantizedLayer ql;
      ql.weight = c.quant(it.name);
      ql.input = c.at(prefix + name + ".input").params;
      auto real = ws.real.find(name);
      if (real != ws.real.end()) ql.bias = real->second.bias;
      ws.quantized[bw][name] = std::move(ql);
    }
  }
  return ws;
}

}  // namespace hnet
