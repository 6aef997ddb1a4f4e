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

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "hnet/tensor.hpp"

namespace hnet {

enum class SplitTag { Train, Val, Test };

std::string_view to_string(SplitTag tag);

struct DataSplit {
  std::vector<Tensor> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

struct LabeledDataset {
  Shape3 input_shape;
  int num_classes = 0;
  DataSplit train;
  DataSplit val;
  DataSplit test;

  const DataSplit& split(SplitTag tag) const;
  DataSplit& split(SplitTag tag);
  // Labels in range, inputs shaped, and no input shared between splits.
  void validate() const;
};

struct SplitSizes {
  int train = 200;
  int val = 100;
  int test = 100;
};

// Two classes split by a random hyperplane through the origin; samples with
// |w.x| < margin are rejected. Inputs are uniform in [-1, 1].
struct SeparableSet {
  LabeledDataset data;
  std::vector<double> normal;  // unit normal w; label = (w.x > 0)
};
SeparableSet make_separable(std::uint64_t seed, Shape3 shape, SplitSizes sizes,
                            double margin = 0.1);

// K Gaussian blobs with standard-normal centers and isotropic noise.
LabeledDataset make_blobs(std::uint64_t seed, Shape3 shape, int num_classes,
                          SplitSizes sizes, double spread = 0.5);

// Container layout: "<split>.inputs" [N, C, H, W] and "<split>.labels" [N].
void save_dataset(const LabeledDataset& data, const std::filesystem::path& manifest);
LabeledDataset load_dataset(const std::filesystem::path& manifest);

}  // namespace hnet
