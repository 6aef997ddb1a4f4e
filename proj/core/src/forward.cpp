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

#include "hnet/forward.hpp"

#include <algorithm>
#include <cmath>

#include "hnet/error.hpp"

namespace hnet {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("softmax of empty logits");
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw ValidationError("non-finite logit at index " + std::to_string(i));
    }
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

namespace {

std::vector<double> conv_real(const LayerSpec& l, const std::vector<double>& in,
                              const LayerParams& p) {
  const Shape3 is = l.in_shape;
  const Shape3 os = l.out_shape;
  const int k = l.kernel;
  std::vector<double> out(os.numel(), 0.0);
  for (int o = 0; o < os.c; ++o) {
    const double b = p.bias.empty() ? 0.0 : p.bias[o];
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
              acc += in[(c * is.h + iy) * is.w + ix] *
                     p.weight[((o * is.c + c) * k + ky) * k + kx];
            }
          }
        }
        out[(o * os.h + oy) * os.w + ox] = acc + b;
      }
    }
  }
  return out;
}

std::vector<std::int32_t> quantize_codes(std::span<const double> x,
                                         const QuantParams& p) {
  const CodeRange r = code_range(p.bit_width);
  std::vector<std::int32_t> q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) q[i] = quantize_value(x[i], p, r);
  return q;
}

std::vector<double> conv_quant(const LayerSpec& l, const std::vector<double>& in,
                               const QuantizedLayer& ql) {
  const Shape3 is = l.in_shape;
  const Shape3 os = l.out_shape;
  const int k = l.kernel;
  const QuantParams& pa = ql.input;
  const QuantParams& pw = ql.weight.params;
  const std::vector<std::int32_t> qa = quantize_codes(in, pa);
  // Zero padding is real zero, which quantizes like any other value.
  const std::int32_t pad_code = quantize_value(0.0, pa, code_range(pa.bit_width));
  const std::int64_t n = static_cast<std::int64_t>(is.c) * k * k;

  std::vector<double> out(os.numel(), 0.0);
  for (int o = 0; o < os.c; ++o) {
    const std::int8_t* wo = ql.weight.codes.data() +
                            static_cast<std::size_t>(o) * is.c * k * k;
    std::int64_t sum_w = 0;
    for (std::int64_t i = 0; i < n; ++i) sum_w += wo[i];
    const double b = ql.bias.empty() ? 0.0 : ql.bias[o];
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        std::int64_t acc = 0;
        std::int64_t sum_a = 0;
        for (int c = 0; c < is.c; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * l.stride - l.padding + ky;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * l.stride - l.padding + kx;
              const bool inside = iy >= 0 && iy < is.h && ix >= 0 && ix < is.w;
              const std::int32_t a =
                  inside ? qa[(c * is.h + iy) * is.w + ix] : pad_code;
              acc += static_cast<std::int64_t>(a) * wo[(c * k + ky) * k + kx];
              sum_a += a;
            }
          }
        }
        out[(o * os.h + oy) * os.w + ox] =
            affine_dot(acc, sum_a, sum_w, n, pa, pw) + b;
      }
    }
  }
  return out;
}

std::vector<double> fc_real(std::span<const double> in, int out_features,
                            const LayerParams& p) {
  const std::size_t n = in.size();
  std::vector<double> out(out_features, 0.0);
  for (int o = 0; o < out_features; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += in[i] * p.weight[o * n + i];
    out[o] = acc + (p.bias.empty() ? 0.0 : p.bias[o]);
  }
  return out;
}

std::vector<double> fc_quant(std::span<const double> in, int out_features,
                             const QuantizedLayer& ql) {
  const std::size_t n = in.size();
  const std::vector<std::int32_t> qa = quantize_codes(in, ql.input);
  std::int64_t sum_a = 0;
  for (std::int32_t a : qa) sum_a += a;
  std::vector<double> out(out_features, 0.0);
  for (int o = 0; o < out_features; ++o) {
    const std::int8_t* wo = ql.weight.codes.data() + o * n;
    std::int64_t acc = 0;
    std::int64_t sum_w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += static_cast<std::int64_t>(qa[i]) * wo[i];
      sum_w += wo[i];
    }
    out[o] = affine_dot(acc, sum_a, sum_w, static_cast<std::int64_t>(n),
                        ql.input, ql.weight.params) +
             (ql.bias.empty() ? 0.0 : ql.bias[o]);
  }
  return out;
}

std::vector<double> max_pool(const LayerSpec& l, const std::vector<double>& in) {
  const Shape3 is = l.in_shape;
  const Shape3 os = l.out_shape;
  std::vector<double> out(os.numel());
  for (int c = 0; c < os.c; ++c) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        double m = in[(c * is.h + oy * l.stride) * is.w + ox * l.stride];
        for (int ky = 0; ky < l.kernel; ++ky) {
          for (int kx = 0; kx < l.kernel; ++kx) {
            m = std::max(m, in[(c * is.h + oy * l.stride + ky) * is.w +
                               ox * l.stride + kx]);
          }
        }
        out[(c * os.h + oy) * os.w + ox] = m;
      }
    }
  }
  return out;
}

std::vector<double> adaptive_avg_pool(Shape3 is, int out_h, int out_w,
                                      const std::vector<double>& in) {
  std::vector<double> out(static_cast<std::size_t>(is.c) * out_h * out_w);
  for (int c = 0; c < is.c; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      const int y0 = oy * is.h / out_h;
      const int y1 = ((oy + 1) * is.h + out_h - 1) / out_h;
      for (int ox = 0; ox < out_w; ++ox) {
        const int x0 = ox * is.w / out_w;
        const int x1 = ((ox + 1) * is.w + out_w - 1) / out_w;
        double acc = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) acc += in[(c * is.h + y) * is.w + x];
        }
        out[(c * out_h + oy) * out_w + ox] = acc / ((y1 - y0) * (x1 - x0));
      }
    }
  }
  return out;
}

}  // namespace

ExitRunner::ExitRunner(const MultiExitNetwork& net, const WeightSet& weights,
                       BitWidth precision)
    : net_(net), weights_(weights), precision_(precision) {
  weights.validate(net, precision);
  if (is_quantized(precision)) qlayers_ = &weights.quantized.at(precision);
}

void ExitRunner::start(const Tensor& input) {
  if (input.size() != net_.input_shape().numel()) {
    throw ValidationError("input has " + std::to_string(input.size()) +
                          " elements, network expects " +
                          to_string(net_.input_shape()));
  }
  input_ = input.data;
  outputs_.assign(net_.layers().size(), {});
  next_exit_ = 1;
}

const std::vector<double>& ExitRunner::activation(int layer_id) const {
  return layer_id == kNetworkInput ? input_ : outputs_[layer_id];
}

std::vector<double> ExitRunner::run_layer(const LayerSpec& l,
                                          const std::vector<double>& in) {
  if (l.parametric()) {
    const ParamSlot& slot = *net_.slot_for_layer(l.id);
    if (hook_) hook_(slot, in);
    if (qlayers_) {
      const QuantizedLayer& ql = qlayers_->at(slot.name);
      return l.kind == LayerKind::Conv2D ? conv_quant(l, in, ql)
                                         : fc_quant(in, l.out_features, ql);
    }
    const LayerParams& p = weights_.real.at(slot.name);
    return l.kind == LayerKind::Conv2D ? conv_real(l, in, p)
                                       : fc_real(in, l.out_features, p);
  }
  switch (l.kind) {
    case LayerKind::ReLU: {
      std::vector<double> out = in;
      for (double& v : out) v = std::max(v, 0.0);
      return out;
    }
    case LayerKind::MaxPool:
      return max_pool(l, in);
    case LayerKind::AdaptiveAvgPool:
      return adaptive_avg_pool(l.in_shape, l.out_h, l.out_w, in);
    case LayerKind::ResidualAdd: {
      std::vector<double> out = in;
      const std::vector<double>& skip = activation(l.source);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
      return out;
    }
    case LayerKind::DenseConcat: {
      const std::vector<double>& skip = activation(l.source);
      std::vector<double> out;
      out.reserve(skip.size() + in.size());
      out.insert(out.end(), skip.begin(), skip.end());
      out.insert(out.end(), in.begin(), in.end());
      return out;
    }
    case LayerKind::Flatten:
      return in;
    case LayerKind::Softmax:
      return softmax(in);
    default:
      break;
  }
  throw ExecutionError("unsupported layer kind");
}

std::vector<double> ExitRunner::run_head(int e, const std::vector<double>& in) {
  const ExitHead& head = net_.exit(e);
  const std::vector<double> pooled = adaptive_avg_pool(head.in_shape, 1, 1, in);
  const ParamSlot& slot = net_.slot_for_exit(e);
  if (hook_) hook_(slot, pooled);
  if (qlayers_) return fc_quant(pooled, head.num_classes, qlayers_->at(slot.name));
  return fc_real(pooled, head.num_classes, weights_.real.at(slot.name));
}

std::vector<double> ExitRunner::advance() {
  if (next_exit_ < 1 || next_exit_ > kNumExits) {
    throw ExecutionError("ExitRunner::advance called without a pending exit");
  }
  const int s = next_exit_;
  const int begin = net_.segment_begin(s);
  for (int id = begin; id < net_.segment_end(s); ++id) {
    const std::vector<double>& in = id == 0 ? input_ : outputs_[id - 1];
    outputs_[id] = run_layer(net_.layers()[id], in);
  }
  ++next_exit_;
  return run_head(s, outputs_[net_.segment_end(s) - 1]);
}

std::vector<double> forward_to_exit(const MultiExitNetwork& net,
                                    const WeightSet& weights,
                                    const Tensor& input, int exit_index,
                                    BitWidth precision) {
  if (exit_index < 1 || exit_index > kNumExits) {
    throw ValidationError("exit index must be 1, 2 or 3");
  }
  ExitRunner runner(net, weights, precision);
  runner.start(input);
  std::vector<double> logits;
  while (runner.next_exit() <= exit_index) logits = runner.advance();
  return logits;
}

std::array<std::vector<double>, kNumExits> forward_all_exits(
    const MultiExitNetwork& net, const WeightSet& weights, const Tensor& input,
    BitWidth precision) {
  ExitRunner runner(net, weights, precision);
  runner.start(input);
  std::array<std::vector<double>, kNumExits> out;
  for (int e = 0; e < kNumExits; ++e) out[e] = runner.advance();
  return out;
}

}  // namespace hnet
