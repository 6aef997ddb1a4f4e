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

#include "hnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hnet/error.hpp"
#include "hnet/forward.hpp"

namespace hnet {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ValidationError("learning_rate must be finite and nonnegative");
  }
  double total = 0.0;
  for (double w : exit_loss_weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("exit_loss_weights must be finite and nonnegative");
    }
    total += w;
  }
  if (total <= 0.0) throw ValidationError("exit_loss_weights are all zero");
}

TrainConfig parse_train_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(source + ": train config must be an object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "format" || key == "version") continue;
      if (key == "epochs") {
        c.epochs = value.get<int>();
      } else if (key == "learning_rate") {
        c.learning_rate = value.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<int>();
      } else if (key == "bit_width") {
        c.bit_width = parse_bitwidth(value.get<std::string>());
      } else if (key == "exit_loss_weights") {
        const auto w = value.get<std::vector<double>>();
        if (w.size() != kNumExits) {
          throw ValidationError("exit_loss_weights needs three values");
        }
        std::copy(w.begin(), w.end(), c.exit_loss_weights.begin());
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else {
        throw ValidationError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExecutionError("cannot open train config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str(), path.string());
}

std::string format_train_config(const TrainConfig& c) {
  json j;
  j["format"] = "hnet-train-config";
  j["version"] = 1;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["bit_width"] = std::string(to_string(c.bit_width));
  j["exit_loss_weights"] = c.exit_loss_weights;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

double cross_entropy(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw ValidationError("label " + std::to_string(label) + " out of range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - peak);
  return peak + std::log(total) - logits[label];
}

namespace {

// Weights as seen by one batch: fake-quantized copies plus STE masks at
// Q8/Q4, the master tensors at FP32.
struct SlotView {
  const std::vector<double>* weight = nullptr;
  const std::vector<double>* bias = nullptr;
  std::vector<double> weight_hat;
  std::vector<std::uint8_t> mask;
};

using WeightView = std::map<std::string, SlotView>;

WeightView make_view(const MultiExitNetwork& net, const WeightSet& ws, BitWidth bw) {
  WeightView view;
  for (const ParamSlot& slot : net.param_slots()) {
    const LayerParams& p = ws.real.at(slot.name);
    SlotView& v = view[slot.name];
    v.bias = &p.bias;
    if (!is_quantized(bw)) {
      v.weight = &p.weight.data;
      continue;
    }
    const QuantParams qp = weight_qparams(p.weight, bw);
    const CodeRange r = code_range(bw);
    v.weight_hat.resize(p.weight.size());
    v.mask.resize(p.weight.size());
    for (std::size_t i = 0; i < p.weight.size(); ++i) {
      v.weight_hat[i] = fake_quantize_value(p.weight[i], qp, r);
      v.mask[i] = ste_passes(p.weight[i], qp, r) ? 1 : 0;
    }
    v.weight = &v.weight_hat;
  }
  return view;
}

// Input of a parametric slot after optional activation fake-quantization.
struct QuantInput {
  std::vector<double> values;
  std::vector<std::uint8_t> mask;  // empty when not quantized
};

QuantInput quantize_input(const std::vector<double>& x, const std::string& slot,
                          const ActivationParams* act) {
  QuantInput q;
  if (!act) {
    q.values = x;
    return q;
  }
  const QuantParams& p = act->at(slot);
  const CodeRange r = code_range(p.bit_width);
  q.values.resize(x.size());
  q.mask.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    q.values[i] = fake_quantize_value(x[i], p, r);
    q.mask[i] = ste_passes(x[i], p, r) ? 1 : 0;
  }
  return q;
}

using Observer = std::function<void(const std::string& slot, const std::vector<double>&)>;

struct Tape {
  std::vector<double> input;
  std::vector<std::vector<double>> outs;
  std::vector<QuantInput> qin;  // per layer, parametric layers only
  std::array<QuantInput, kNumExits> pooled;
  std::array<std::vector<double>, kNumExits> logits;
};

struct Context {
  const MultiExitNetwork& net;
  const WeightView& view;
  const ActivationParams* act;
  const Observer* observer;
};

std::vector<double> conv_forward(const LayerSpec& l, const std::vector<double>& in,
                                 const SlotView& v) {
  const Shape3 is = l.in_shape;
  const Shape3 os = l.out_shape;
  const int k = l.kernel;
  const std::vector<double>& w = *v.weight;
  std::vector<double> out(os.numel());
  for (int o = 0; o < os.c; ++o) {
    const double b = v.bias->empty() ? 0.0 : (*v.bias)[o];
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        double acc = 0.0;
        for (int c = 0; c < is.c; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * l.stride - l.padding + ky;
            if (iy < 0 || iy >= is.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * l.stride - l.padding + kx;
              if (ix < 0 || ix >= is.w) continue;
              acc += in[(c * is.h + iy) * is.w + ix] * w[((o * is.c + c) * k + ky) * k + kx];
            }
          }
        }
        out[(o * os.h + oy) * os.w + ox] = acc + b;
      }
    }
  }
  return out;
}

void conv_backward(const LayerSpec& l, const std::vector<double>& in,
                   const SlotView& v, const std::vector<double>& gout,
                   std::vector<double>& gin, LayerParams& grad) {
  const Shape3 is = l.in_shape;
  const Shape3 os = l.out_shape;
  const int k = l.kernel;
  const std::vector<double>& w = *v.weight;
  gin.assign(is.numel(), 0.0);
  for (int o = 0; o < os.c; ++o) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        const double g = gout[(o * os.h + oy) * os.w + ox];
        if (!grad.bias.empty()) grad.bias[o] += g;
        if (g == 0.0) continue;
        for (int c = 0; c < is.c; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * l.stride - l.padding + ky;
            if (iy < 0 || iy >= is.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * l.stride - l.padding + kx;
              if (ix < 0 || ix >= is.w) continue;
              const std::size_t wi = ((o * is.c + c) * k + ky) * k + kx;
              const std::size_t xi = (c * is.h + iy) * is.w + ix;
              grad.weight[wi] += g * in[xi];
              gin[xi] += g * w[wi];
            }
          }
        }
      }
    }
  }
}

std::vector<double> fc_forward(const std::vector<double>& in, int out_features,
                               const SlotView& v) {
  const std::size_t n = in.size();
  const std::vector<double>& w = *v.weight;
  std::vector<double> out(out_features);
  for (int o = 0; o < out_features; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += in[i] * w[o * n + i];
    out[o] = acc + (v.bias->empty() ? 0.0 : (*v.bias)[o]);
  }
  return out;
}

void fc_backward(const std::vector<double>& in, const SlotView& v,
                 const std::vector<double>& gout, std::vector<double>& gin,
                 LayerParams& grad) {
  const std::size_t n = in.size();
  const std::vector<double>& w = *v.weight;
  gin.assign(n, 0.0);
  for (std::size_t o = 0; o < gout.size(); ++o) {
    const double g = gout[o];
    if (!grad.bias.empty()) grad.bias[o] += g;
    for (std::size_t i = 0; i < n; ++i) {
      grad.weight[o * n + i] += g * in[i];
      gin[i] += g * w[o * n + i];
    }
  }
}

// Bin edges match the inference engine: floor start, ceil end.
template <typename F>
void for_each_pool_bin(Shape3 is, int out_h, int out_w, F&& f) {
  for (int c = 0; c < is.c; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = oy * is.h / out_h;
      const int y1 = ((oy + 1) * is.h + out_h - 1) / out_h;
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = ox * is.w / out_w;
        const int x1 = ((ox + 1) * is.w + out_w - 1) / out_w;
        f(c, (c * out_h + oy) * out_w + ox, y0, y1, x0, x1);
      }
    }
  }
}

std::vector<double> avg_pool_forward(Shape3 is, int out_h, int out_w,
                                     const std::vector<double>& in) {
  std::vector<double> out(static_cast<std::size_t>(is.c) * out_h * out_w);
  for_each_pool_bin(is, out_h, out_w, [&](int c, int o, int y0, int y1, int x0, int x1) {
    double acc = 0.0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) acc += in[(c * is.h + y) * is.w + x];
    }
    out[o] = acc / ((y1 - y0) * (x1 - x0));
  });
  return out;
}

void avg_pool_backward(Shape3 is, int out_h, int out_w,
                       const std::vector<double>& gout, std::vector<double>& gin) {
  gin.assign(is.numel(), 0.0);
  for_each_pool_bin(is, out_h, out_w, [&](int c, int o, int y0, int y1, int x0, int x1) {
    const double g = gout[o] / ((y1 - y0) * (x1 - x0));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) gin[(c * is.h + y) * is.w + x] += g;
    }
  });
}

// Index of the first maximum in scan order, as the engine picks it.
std::size_t max_pool_source(const LayerSpec& l, const std::vector<double>& in,
                            int c, int oy, int ox) {
  const Shape3 is = l.in_shape;
  std::size_t best = (c * is.h + oy * l.stride) * is.w + ox * l.stride;
  for (int ky = 0; ky < l.kernel; ++ky) {
    for (int kx = 0; kx < l.kernel; ++kx) {
      const std::size_t i = (c * is.h + oy * l.stride + ky) * is.w + ox * l.stride + kx;
      if (in[i] > in[best]) best = i;
    }
  }
  return best;
}

const std::vector<double>& layer_input(const Tape& t, int id) {
  return id == 0 ? t.input : t.outs[id - 1];
}

const std::vector<double>& source_output(const Tape& t, int source) {
  return source == kNetworkInput ? t.input : t.outs[source];
}

void forward(const Context& ctx, const Tensor& x, Tape& t) {
  const MultiExitNetwork& net = ctx.net;
  t.input = x.data;
  t.outs.assign(net.layers().size(), {});
  t.qin.assign(net.layers().size(), {});
  for (int e = 1; e <= kNumExits; ++e) {
    for (int id = net.segment_begin(e); id < net.segment_end(e); ++id) {
      const LayerSpec& l = net.layers()[id];
      const std::vector<double>& in = layer_input(t, id);
      std::vector<double> out;
      if (l.parametric()) {
        const ParamSlot& slot = *net.slot_for_layer(id);
        if (ctx.observer) (*ctx.observer)(slot.name, in);
        t.qin[id] = quantize_input(in, slot.name, ctx.act);
        const SlotView& v = ctx.view.at(slot.name);
        out = l.kind == LayerKind::Conv2D ? conv_forward(l, t.qin[id].values, v)
                                          : fc_forward(t.qin[id].values, l.out_features, v);
      } else {
        switch (l.kind) {
          case LayerKind::ReLU:
            out = in;
            for (double& val : out) val = std::max(val, 0.0);
            break;
          case LayerKind::MaxPool: {
            const Shape3 os = l.out_shape;
            out.resize(os.numel());
            for (int c = 0; c < os.c; ++c) {
              for (int oy = 0; oy < os.h; ++oy) {
                for (int ox = 0; ox < os.w; ++ox) {
                  out[(c * os.h + oy) * os.w + ox] = in[max_pool_source(l, in, c, oy, ox)];
                }
              }
            }
            break;
          }
          case LayerKind::AdaptiveAvgPool:
            out = avg_pool_forward(l.in_shape, l.out_h, l.out_w, in);
            break;
          case LayerKind::ResidualAdd: {
            out = in;
            const std::vector<double>& skip = source_output(t, l.source);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
            break;
          }
          case LayerKind::DenseConcat: {
            const std::vector<double>& skip = source_output(t, l.source);
            out = skip;
            out.insert(out.end(), in.begin(), in.end());
            break;
          }
          case LayerKind::Flatten:
            out = in;
            break;
          case LayerKind::Softmax:
            out = softmax(in);
            break;
          default:
            throw ExecutionError("unsupported layer kind in training");
        }
      }
      t.outs[id] = std::move(out);
    }
    const ExitHead& head = net.exit(e);
    const ParamSlot& slot = net.slot_for_exit(e);
    const std::vector<double> pooled =
        avg_pool_forward(head.in_shape, 1, 1, t.outs[net.segment_end(e) - 1]);
    if (ctx.observer) (*ctx.observer)(slot.name, pooled);
    t.pooled[e - 1] = quantize_input(pooled, slot.name, ctx.act);
    t.logits[e - 1] =
        fc_forward(t.pooled[e - 1].values, head.num_classes, ctx.view.at(slot.name));
  }
}

void apply_mask(std::vector<double>& g, const std::vector<std::uint8_t>& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask[i]) g[i] = 0.0;
  }
}

void add_into(std::vector<double>& dst, const double* src, std::size_t n) {
  if (dst.empty()) dst.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

// Accumulates gradients of sum_e dlogits[e] . logits_e into `grads`.
void backward(const Context& ctx, const Tape& t,
              const std::array<std::vector<double>, kNumExits>& dlogits,
              Gradients& grads) {
  const MultiExitNetwork& net = ctx.net;
  std::vector<std::vector<double>> g(net.layers().size());
  std::vector<double> gin;

  for (int e = 1; e <= kNumExits; ++e) {
    if (dlogits[e - 1].empty()) continue;
    const ParamSlot& slot = net.slot_for_exit(e);
    fc_backward(t.pooled[e - 1].values, ctx.view.at(slot.name), dlogits[e - 1], gin,
                grads.slots.at(slot.name));
    apply_mask(gin, t.pooled[e - 1].mask);
    std::vector<double> gmap;
    avg_pool_backward(net.exit(e).in_shape, 1, 1, gin, gmap);
    add_into(g[net.segment_end(e) - 1], gmap.data(), gmap.size());
  }

  for (int id = static_cast<int>(net.layers().size()) - 1; id >= 0; --id) {
    if (g[id].empty()) continue;
    const LayerSpec& l = net.layers()[id];
    const std::vector<double>& in = layer_input(t, id);
    const std::vector<double>& gout = g[id];
    gin.assign(in.size(), 0.0);
    switch (l.kind) {
      case LayerKind::Conv2D:
      case LayerKind::FullyConnected: {
        const ParamSlot& slot = *net.slot_for_layer(id);
        const SlotView& v = ctx.view.at(slot.name);
        LayerParams& grad = grads.slots.at(slot.name);
        if (l.kind == LayerKind::Conv2D) {
          conv_backward(l, t.qin[id].values, v, gout, gin, grad);
        } else {
          fc_backward(t.qin[id].values, v, gout, gin, grad);
        }
        apply_mask(gin, t.qin[id].mask);
        break;
      }
      case LayerKind::ReLU:
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = in[i] > 0.0 ? gout[i] : 0.0;
        break;
      case LayerKind::MaxPool: {
        const Shape3 os = l.out_shape;
        for (int c = 0; c < os.c; ++c) {
          for (int oy = 0; oy < os.h; ++oy) {
            for (int ox = 0; ox < os.w; ++ox) {
              gin[max_pool_source(l, in, c, oy, ox)] += gout[(c * os.h + oy) * os.w + ox];
            }
          }
        }
        break;
      }
      case LayerKind::AdaptiveAvgPool:
        avg_pool_backward(l.in_shape, l.out_h, l.out_w, gout, gin);
        break;
      case LayerKind::ResidualAdd:
        gin = gout;
        if (l.source != kNetworkInput) add_into(g[l.source], gout.data(), gout.size());
        break;
      case LayerKind::DenseConcat: {
        const std::size_t skip = source_output(t, l.source).size();
        if (l.source != kNetworkInput) add_into(g[l.source], gout.data(), skip);
        std::copy(gout.begin() + static_cast<std::ptrdiff_t>(skip), gout.end(), gin.begin());
        break;
      }
      case LayerKind::Flatten:
        gin = gout;
        break;
      case LayerKind::Softmax: {
        const std::vector<double>& s = t.outs[id];
        double dot = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) dot += gout[i] * s[i];
        for (std::size_t i = 0; i < s.size(); ++i) gin[i] = s[i] * (gout[i] - dot);
        break;
      }
      default:
        throw ExecutionError("unsupported layer kind in training");
    }
    if (id > 0) add_into(g[id - 1], gin.data(), gin.size());
  }
}

Gradients zero_gradients(const MultiExitNetwork& net) {
  Gradients grads;
  for (const ParamSlot& slot : net.param_slots()) {
    LayerParams& p = grads.slots[slot.name];
    p.weight = Tensor(slot.weight_shape);
    p.bias.assign(slot.bias_size, 0.0);
  }
  return grads;
}

void check_batch(std::span<const Tensor> inputs, std::span<const int> labels,
                 int num_classes) {
  if (inputs.empty()) throw ValidationError("batch is empty");
  if (inputs.size() != labels.size()) {
    throw ValidationError("batch has mismatched input and label counts");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw ValidationError("label " + std::to_string(labels[i]) + " at index " +
                            std::to_string(i) + " out of range");
    }
  }
}

double batch_pass(const MultiExitNetwork& net, const WeightView& view,
                  std::span<const Tensor> inputs, std::span<const int> labels,
                  const ExitWeights& exit_weights, const ActivationParams* act,
                  const Observer* observer, Gradients* grads) {
  check_batch(inputs, labels, net.num_classes());
  const Context ctx{net, view, act, observer};
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  Tape tape;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    forward(ctx, inputs[i], tape);
    std::array<std::vector<double>, kNumExits> dlogits;
    for (int e = 0; e < kNumExits; ++e) {
      const std::vector<double>& z = tape.logits[e];
      for (double v : z) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
      }
      loss += exit_weights[e] * cross_entropy(z, labels[i]) * inv_n;
      if (grads && exit_weights[e] != 0.0) {
        dlogits[e] = softmax(z);
        dlogits[e][labels[i]] -= 1.0;
        for (double& d : dlogits[e]) d *= exit_weights[e] * inv_n;
      }
    }
    if (grads) backward(ctx, tape, dlogits, *grads);
  }
  return loss;
}

}  // namespace

double qat_loss(const MultiExitNetwork& net, const WeightSet& weights,
                std::span<const Tensor> inputs, std::span<const int> labels,
                BitWidth bw, const ExitWeights& exit_weights,
                const ActivationParams* act) {
  weights.validate(net);
  const WeightView view = make_view(net, weights, bw);
  return batch_pass(net, view, inputs, labels, exit_weights, act, nullptr, nullptr);
}

double loss_and_gradients(const MultiExitNetwork& net, const WeightSet& weights,
                          std::span<const Tensor> inputs,
                          std::span<const int> labels, BitWidth bw,
                          const ExitWeights& exit_weights,
                          const ActivationParams* act, Gradients& grads) {
  weights.validate(net);
  const WeightView view = make_view(net, weights, bw);
  grads = zero_gradients(net);
  const double loss =
      batch_pass(net, view, inputs, labels, exit_weights, act, nullptr, &grads);
  // Weight STE: entries clipped by the weight quantizer get no gradient.
  for (auto& [name, g] : grads.slots) apply_mask(g.weight.data, view.at(name).mask);
  return loss;
}

GradCheckResult grad_check(const MultiExitNetwork& net, const WeightSet& weights,
                           std::span<const Tensor> inputs,
                           std::span<const int> labels,
                           const ExitWeights& exit_weights, double epsilon,
                           int per_tensor, std::uint64_t seed) {
  Gradients grads;
  loss_and_gradients(net, weights, inputs, labels, BitWidth::FP32, exit_weights,
                     nullptr, grads);
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  WeightSet probe = weights;
  probe.quantized.clear();

  auto check = [&](const std::string& label, double& param, double analytic) {
    const double saved = param;
    param = saved + epsilon;
    const double up = qat_loss(net, probe, inputs, labels, BitWidth::FP32, exit_weights);
    param = saved - epsilon;
    const double down = qat_loss(net, probe, inputs, labels, BitWidth::FP32, exit_weights);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    if (result.checked++ == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = label;
    }
  };

  auto pick = [&](std::size_t size) {
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(size, static_cast<std::size_t>(per_tensor)));
    return idx;
  };

  for (const ParamSlot& slot : net.param_slots()) {
    LayerParams& p = probe.real.at(slot.name);
    const LayerParams& g = grads.slots.at(slot.name);
    for (std::size_t i : pick(p.weight.size())) {
      check(slot.weight_name() + "[" + std::to_string(i) + "]", p.weight[i], g.weight[i]);
    }
    for (std::size_t i : pick(p.bias.size())) {
      check(slot.bias_name() + "[" + std::to_string(i) + "]", p.bias[i], g.bias[i]);
    }
  }
  return result;
}

namespace {

// Running range plus a decimated value sample per slot.
struct SlotObservation {
  RangeObserver observer;
  std::vector<double> sample;
  std::size_t stride = 1;
  std::size_t seen = 0;

  void add(const std::vector<double>& x) {
    observer = observe(observer, x);
    for (double v : x) {
      if (seen++ % stride == 0) sample.push_back(v);
      if (sample.size() >= kCalibrationSampleCap) {
        std::vector<double> kept;
        for (std::size_t i = 0; i < sample.size(); i += 2) kept.push_back(sample[i]);
        sample = std::move(kept);
        stride *= 2;
      }
    }
  }
};

std::array<double, kNumExits> view_accuracy(const MultiExitNetwork& net,
                                            const WeightView& view,
                                            const DataSplit& split,
                                            const ActivationParams* act) {
  std::array<double, kNumExits> acc{};
  if (split.empty()) return acc;
  const Context ctx{net, view, act, nullptr};
  Tape tape;
  for (std::size_t i = 0; i < split.size(); ++i) {
    forward(ctx, split.inputs[i], tape);
    for (int e = 0; e < kNumExits; ++e) {
      if (static_cast<int>(argmax(tape.logits[e])) == split.labels[i]) acc[e] += 1.0;
    }
  }
  for (double& a : acc) a /= static_cast<double>(split.size());
  return acc;
}

}  // namespace

TrainResult train(const MultiExitNetwork& net, const LabeledDataset& data,
                  const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.train.empty()) throw ValidationError("dataset has no train split");
  if (data.input_shape != net.input_shape()) {
    throw ValidationError("dataset input shape " + to_string(data.input_shape) +
                          " does not match network input " + to_string(net.input_shape()));
  }
  if (data.num_classes != net.num_classes()) {
    throw ValidationError("dataset has " + std::to_string(data.num_classes) +
                          " classes, network has " + std::to_string(net.num_classes()));
  }

  const BitWidth bw = config.bit_width;
  const bool quantized = is_quantized(bw);
  TrainResult result;
  result.weights = init_weights(net, config.seed);
  WeightSet& ws = result.weights;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  std::map<std::string, SlotObservation> observations;
  const Observer observer = [&](const std::string& slot, const std::vector<double>& x) {
    SlotObservation& o = observations[slot];
    o.observer.mode = default_observer_mode(bw);
    o.add(x);
  };
  bool frozen = false;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool observing = quantized && !frozen;
    const ActivationParams* act = frozen ? &result.activation_params : nullptr;
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Tensor> inputs;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        inputs.push_back(data.train.inputs[order[i]]);
        labels.push_back(data.train.labels[order[i]]);
      }
      const WeightView view = make_view(net, ws, bw);
      Gradients grads = zero_gradients(net);
      const double loss = batch_pass(net, view, inputs, labels, config.exit_loss_weights,
                                     act, observing ? &observer : nullptr, &grads);
      ++batches;
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " batch " << batches
            << " (loss " << loss << ")";
        if (!result.log.empty()) msg << "; last epoch loss " << result.log.back().loss;
        throw ExecutionError(msg.str());
      }
      loss_sum += loss;
      for (auto& [name, g] : grads.slots) {
        apply_mask(g.weight.data, view.at(name).mask);
        LayerParams& p = ws.real.at(name);
        for (std::size_t i = 0; i < p.weight.size(); ++i) {
          p.weight[i] -= config.learning_rate * g.weight[i];
        }
        for (std::size_t i = 0; i < p.bias.size(); ++i) {
          p.bias[i] -= config.learning_rate * g.bias[i];
        }
      }
    }
    if (observing) {
      for (const ParamSlot& slot : net.param_slots()) {
        const SlotObservation& o = observations.at(slot.name);
        result.activation_params[slot.name] = compute_qparams(o.observer, bw, o.sample);
      }
      frozen = true;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / batches;
    entry.observing = observing;
    entry.accuracy = view_accuracy(net, make_view(net, ws, bw), data.train,
                                   frozen ? &result.activation_params : nullptr);
    result.log.push_back(entry);
  }

  if (quantized) {
    std::map<std::string, QuantizedLayer> layers;
    for (const ParamSlot& slot : net.param_slots()) {
      layers[slot.name] = quantize_layer(ws.real.at(slot.name), bw,
                                         result.activation_params.at(slot.name));
    }
    ws.quantized[bw] = std::move(layers);
  }
  return result;
}

std::array<double, kNumExits> exit_accuracy(const MultiExitNetwork& net,
                                            const WeightSet& weights,
                                            const DataSplit& split, BitWidth bw) {
  std::array<double, kNumExits> acc{};
  if (split.empty()) return acc;
  ExitRunner runner(net, weights, bw);
  for (std::size_t i = 0; i < split.size(); ++i) {
    runner.start(split.inputs[i]);
    for (int e = 0; e < kNumExits; ++e) {
      if (static_cast<int>(argmax(runner.advance())) == split.labels[i]) acc[e] += 1.0;
    }
  }
  for (double& a : acc) a /= static_cast<double>(split.size());
  return acc;
}

void complete_precisions(const MultiExitNetwork& net, WeightSet& weights,
                         std::span<const Tensor> calibration) {
  for (BitWidth bw : kQuantizedBitWidths) {
    if (!weights.has_precision(bw)) quantize_weights(net, weights, bw, calibration);
  }
}

}  // namespace hnet
