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

#include "hnet/quantizer.hpp"

#include <algorithm>

#include "hnet/error.hpp"

namespace hnet {

void QuantParams::validate() const {
  if (!is_quantized(bit_width)) {
    throw ValidationError("quantization params cannot use FP32");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("quantization scale must be positive and finite");
  }
  if (!std::isfinite(zero_point)) {
    throw ValidationError("quantization zero point must be finite");
  }
}

void QuantTensor::validate() const {
  params.validate();
  if (codes.size() != numel(shape)) {
    throw ValidationError("quantized tensor code count does not match shape " +
                          shape_string(shape));
  }
  const CodeRange r = code_range(params.bit_width);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < r.min || codes[i] > r.max) {
      throw ValidationError("code " + std::to_string(codes[i]) +
                            " at index " + std::to_string(i) +
                            " outside range for " +
                            std::string(to_string(params.bit_width)));
    }
  }
}

namespace {

void require_finite(std::span<const double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw ValidationError("non-finite input at element " +
                            std::to_string(i));
    }
  }
}

}  // namespace

QuantTensor affine_quantize(const Tensor& x, const QuantParams& p) {
  p.validate();
  require_finite(x.values());
  const CodeRange r = code_range(p.bit_width);
  QuantTensor q;
  q.shape = x.shape;
  q.params = p;
  q.codes.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    q.codes[i] = static_cast<std::int8_t>(quantize_value(x[i], p, r));
  }
  return q;
}

Tensor dequantize(const QuantTensor& q) {
  q.validate();
  Tensor out(q.shape);
  for (std::size_t i = 0; i < q.codes.size(); ++i) {
    out[i] = dequantize_value(q.codes[i], q.params);
  }
  return out;
}

Tensor fake_quantize(const Tensor& x, const QuantParams& p) {
  p.validate();
  require_finite(x.values());
  Tensor out = x;
  fake_quantize_inplace(out.values(), p);
  return out;
}

void fake_quantize_inplace(std::span<double> x, const QuantParams& p) {
  const CodeRange r = code_range(p.bit_width);
  for (double& v : x) v = fake_quantize_value(v, p, r);
}

bool ste_passes(double x, const QuantParams& p, CodeRange r) {
  const double u = (x - p.zero_point) / p.scale;
  return u >= r.min && u <= r.max;
}

Tensor ste_gradient(const Tensor& upstream, const Tensor& x,
                    const QuantParams& p) {
  if (upstream.shape != x.shape) {
    throw ValidationError("ste_gradient shape mismatch: upstream " +
                          shape_string(upstream.shape) + " vs input " +
                          shape_string(x.shape));
  }
  p.validate();
  const CodeRange r = code_range(p.bit_width);
  Tensor g(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    g[i] = ste_passes(x[i], p, r) ? upstream[i] : 0.0;
  }
  return g;
}

RangeObserver observe(RangeObserver obs, std::span<const double> x) {
  if (x.empty()) return obs;
  require_finite(x);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  obs.running_min = std::min(obs.running_min, *lo);
  obs.running_max = std::max(obs.running_max, *hi);
  ++obs.sample_count;
  return obs;
}

QuantParams minmax_params(double lo, double hi, BitWidth bw) {
  const CodeRange r = code_range(bw);
  if (!(hi > lo)) return {kScaleFloor, lo, bw};
  const double scale = std::max((hi - lo) / r.levels(), kScaleFloor);
  return {scale, lo - r.min * scale, bw};
}

QuantParams centered_params(double lo, double hi, double scale, BitWidth bw) {
  const CodeRange r = code_range(bw);
  const double mid = 0.5 * (lo + hi);
  const double code_mid = 0.5 * (r.min + r.max);
  return {scale, mid - code_mid * scale, bw};
}

std::vector<double> mse_scale_grid(double minmax_scale) {
  std::vector<double> grid(kMseGridPoints);
  const double lo = std::log(minmax_scale * kMseGridLow);
  const double hi = std::log(minmax_scale * kMseGridHigh);
  for (int i = 0; i < kMseGridPoints; ++i) {
    grid[i] = std::exp(lo + (hi - lo) * i / (kMseGridPoints - 1));
  }
  return grid;
}

double reconstruction_mse(std::span<const double> x, const QuantParams& p) {
  if (x.empty()) return 0.0;
  const CodeRange r = code_range(p.bit_width);
  double acc = 0.0;
  for (double v : x) {
    const double e = fake_quantize_value(v, p, r) - v;
    acc += e * e;
  }
  return acc / static_cast<double>(x.size());
}

QuantParams compute_qparams(const RangeObserver& obs, BitWidth bw,
                            std::span<const double> calibration) {
  if (!is_quantized(bw)) {
    throw ValidationError("cannot compute quantization params for FP32");
  }
  if (obs.sample_count == 0) {
    throw ValidationError("observer has not seen any samples");
  }
  const QuantParams base = minmax_params(obs.running_min, obs.running_max, bw);
  if (obs.mode == ObserverMode::MinMax) return base;

  if (calibration.empty()) {
    throw ValidationError("MSE observer needs a non-empty calibration sample");
  }
  require_finite(calibration);
  if (base.scale <= kScaleFloor) return base;

  QuantParams best = base;
  double best_mse = reconstruction_mse(calibration, base);
  for (double s : mse_scale_grid(base.scale)) {
    const QuantParams cand =
        centered_params(obs.running_min, obs.running_max, s, bw);
    const double mse = reconstruction_mse(calibration, cand);
    if (mse < best_mse) {
      best = cand;
      best_mse = mse;
    }
  }
  return best;
}

}  // namespace hnet
