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

#include "hnet/tensor.hpp"

#include "hnet/error.hpp"

namespace hnet {

std::string to_string(const Shape3& s) {
  return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

std::size_t numel(std::span<const int> dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d < 0) throw ValidationError("negative tensor dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(std::span<const int> dims) {
  std::string out = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(dims[i]);
  }
  return out + "]";
}

Tensor::Tensor(std::vector<int> dims)
    : shape(std::move(dims)), data(numel(shape), 0.0) {}

Tensor::Tensor(std::vector<int> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
  if (data.size() != numel(shape)) {
    throw ValidationError("tensor of shape " + shape_string(shape) + " given " +
                          std::to_string(data.size()) + " values");
  }
}

}  // namespace hnet
