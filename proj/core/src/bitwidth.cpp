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

#include "hnet/bitwidth.hpp"

#include "hnet/error.hpp"

namespace hnet {

CodeRange code_range(BitWidth bw) {
  switch (bw) {
    case BitWidth::Q8:
      return {-128, 127};
    case BitWidth::Q4:
      return {-8, 7};
    case BitWidth::FP32:
      break;
  }
  throw ValidationError("FP32 has no integer code range");
}

std::string_view to_string(BitWidth bw) {
  switch (bw) {
    case BitWidth::FP32:
      return "fp32";
    case BitWidth::Q8:
      return "q8";
    case BitWidth::Q4:
      return "q4";
  }
  return "?";
}

BitWidth parse_bitwidth(std::string_view text) {
  if (text == "fp32" || text == "FP32" || text == "32") return BitWidth::FP32;
  if (text == "q8" || text == "Q8" || text == "8") return BitWidth::Q8;
  if (text == "q4" || text == "Q4" || text == "4") return BitWidth::Q4;
  throw ParseError("unknown precision '" + std::string(text) +
                   "' (expected fp32, q8 or q4)");
}

}  // namespace hnet
