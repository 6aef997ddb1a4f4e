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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/tensor.hpp"

namespace hnet {

// Smallest scale ever produced by an observer; used for constant tensors.
inline constexpr double kScaleFloor = 1e-8;
// Number of geometric scale candidates searched by the MSE observer.
inline constexpr int kMseGridPoints = 100;
inline constexpr double kMseGridLow = 0.1;   // x minmax scale
inline constexpr double kMseGridHigh = 2.0;  // x minmax scale

// Per-tensor affine quantization parameters: real = code * scale + zero_point.
struct QuantParams {
  double scale = 1.0;
  double zero_point = 0.0;
  BitWidth bit_width = BitWidth::Q8;

  void validate() const;
  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

struct QuantTensor {
  std::vector<int> shape;
  std::vector<std::int8_t> codes;
  QuantParams params;

  void validate() const;
  std::size_t size() const { return codes.size(); }
};

// Scalar kernels. No validation; callers validate params once per tensor.
inline std::int32_t quantize_value(double x, const QuantParams& p,
                                   CodeRange r) {
  // std::round rounds halfway cases away from zero.
  const double q = std::round((x - p.zero_point) / p.scale);
  if (q <= r.min) return r.min;
  if (q >= r.max) return r.max;
  return static_cast<std::int32_t>(q);
}

inline double dequantize_value(std::int32_t code, const QuantParams& p) {
  return static_cast<double>(code) * p.scale + p.zero_point;
}

inline double fake_quantize_value(double x, const QuantParams& p, CodeRange r) {
  return dequantize_value(quantize_value(x, p, r), p);
}

QuantTensor affine_quantize(const Tensor& x, const QuantParams& p);
Tensor dequantize(const QuantTensor& q);
Tensor fake_quantize(const Tensor& x, const QuantParams& p);

// In-place fake quantization of a raw buffer.
void fake_quantize_inplace(std::span<double> x, const QuantParams& p);

// Clipped straight-through estimator: the upstream gradient passes where
// (x - zero_point) / scale lies in [qmin, qmax] (boundaries inclusive) and is
// zeroed elsewhere.
Tensor ste_gradient(const Tensor& upstream, const Tensor& x,
                    const QuantParams& p);
bool ste_passes(double x, const QuantParams& p, CodeRange r);

enum class ObserverMode { MinMax, MseSearch };

struct RangeObserver {
  ObserverMode mode = ObserverMode::MinMax;
  double running_min = std::numeric_limits<double>::infinity();
  double running_max = -std::numeric_limits<double>::infinity();
  std::size_t sample_count = 0;  // number of non-empty batches observed
};

// Returns the observer widened to cover every element of x.
RangeObserver observe(RangeObserver obs, std::span<const double> x);

// MinMax: scale spans the observed range over the full code range.
// MseSearch: picks the scale among the MinMax scale and kMseGridPoints
// geometric candidates in [0.1, 2] x the MinMax scale that minimizes the
// reconstruction MSE of `calibration`. Candidates keep the range midpoint
// pinned to the middle of the code range. Ties keep the earlier candidate,
// MinMax first and then ascending scale.
QuantParams compute_qparams(const RangeObserver& obs, BitWidth bw,
                            std::span<const double> calibration = {});

QuantParams minmax_params(double lo, double hi, BitWidth bw);
QuantParams centered_params(double lo, double hi, double scale, BitWidth bw);
std::vector<double> mse_scale_grid(double minmax_scale);
double reconstruction_mse(std::span<const double> x, const QuantParams& p);

}  // namespace hnet
