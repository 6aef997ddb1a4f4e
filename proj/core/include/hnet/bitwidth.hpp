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
#include <string>
#include <string_view>

namespace hnet {

// Numeric precision of a forward pass. Enumerators are declared in the
// scheduler's total order Q4 < Q8 < FP32, so the built-in comparison
// operators express "lower precision than".
enum class BitWidth : std::uint8_t { Q4 = 0, Q8 = 1, FP32 = 2 };

inline constexpr std::array<BitWidth, 3> kAllBitWidths = {
    BitWidth::FP32, BitWidth::Q8, BitWidth::Q4};
inline constexpr std::array<BitWidth, 2> kQuantizedBitWidths = {
    BitWidth::Q8, BitWidth::Q4};

struct CodeRange {
  std::int32_t min;
  std::int32_t max;
  constexpr std::int32_t levels() const { return max - min; }
};

constexpr bool is_quantized(BitWidth bw) { return bw != BitWidth::FP32; }

// Throws ValidationError for FP32, which has no integer code range.
CodeRange code_range(BitWidth bw);

std::string_view to_string(BitWidth bw);
BitWidth parse_bitwidth(std::string_view text);

}  // namespace hnet
