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

#include "hnet/dataset.hpp"

#include <cmath>
#include <random>
#include <set>

#include "hnet/container.hpp"
#include "hnet/error.hpp"

namespace hnet {

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
  }
  return "?";
}

namespace {
constexpr SplitTag kAllSplits[] = {SplitTag::Train, SplitTag::Val, SplitTag::Test};
}  // namespace

const DataSplit& LabeledDataset::split(SplitTag tag) const {
  switch (tag) {
    case SplitTag::Train: return train;
    case SplitTag::Val: return val;
    case SplitTag::Test: break;
  }
  return test;
}

DataSplit& LabeledDataset::split(SplitTag tag) {
  return const_cast<DataSplit&>(std::as_const(*this).split(tag));
}

void LabeledDataset::validate() const {
  if (!input_shape.valid()) throw ValidationError("dataset input shape is empty");
  if (num_classes < 2) throw ValidationError("dataset needs at least 2 classes");
  std::set<std::vector<double>> seen;
  for (SplitTag tag : kAllSplits) {
    const DataSplit& s = split(tag);
    if (s.inputs.size() != s.labels.size()) {
      throw ValidationError(std::string(to_string(tag)) +
                            " split has mismatched input and label counts");
    }
    std::set<std::vector<double>> mine;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s.labels[i] < 0 || s.labels[i] >= num_classes) {
        throw ValidationError(std::string(to_string(tag)) + " label " +
                              std::to_string(s.labels[i]) + " at index " +
                              std::to_string(i) + " out of range");
      }
      if (s.inputs[i].size() != input_shape.numel()) {
        throw ValidationError(std::string(to_string(tag)) + " input " +
                              std::to_string(i) + " has wrong size");
      }
      if (seen.contains(s.inputs[i].data)) {
        throw ValidationError(std::string(to_string(tag)) + " input " +
                              std::to_string(i) + " also appears in another split");
      }
      mine.insert(s.inputs[i].data);
    }
    seen.merge(mine);
  }
}

SeparableSet make_separable(std::uint64_t seed, Shape3 shape, SplitSizes sizes,
                            double margin) {
  if (!shape.valid()) throw ValidationError("invalid input shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const std::size_t n = shape.numel();

  SeparableSet out;
  out.normal.resize(n);
  double norm = 0.0;
  for (double& v : out.normal) {
    v = gauss(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : out.normal) v /= norm;

  LabeledDataset& d = out.data;
  d.input_shape = shape;
  d.num_classes = 2;
  const int counts[] = {sizes.train, sizes.val, sizes.test};
  for (int k = 0; k < 3; ++k) {
    DataSplit& s = d.split(kAllSplits[k]);
    while (static_cast<int>(s.size()) < counts[k]) {
      Tensor x = Tensor::from_shape3(shape);
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = uni(rng);
        dot += x[i] * out.normal[i];
      }
      if (std::abs(dot) < margin) continue;
      s.inputs.push_back(std::move(x));
      s.labels.push_back(dot > 0.0 ? 1 : 0);
    }
  }
  d.validate();
  return out;
}

LabeledDataset make_blobs(std::uint64_t seed, Shape3 shape, int num_classes,
                          SplitSizes sizes, double spread) {
  if (!shape.valid()) throw ValidationError("invalid input shape");
  if (num_classes < 2) throw ValidationError("blobs need at least 2 classes");
  if (!(spread >= 0.0)) throw ValidationError("spread must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = shape.numel();
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(n));
  for (auto& c : centers) {
    for (double& v : c) v = gauss(rng);
  }
  std::uniform_int_distribution<int> pick(0, num_classes - 1);

  LabeledDataset d;
  d.input_shape = shape;
  d.num_classes = num_classes;
  const int counts[] = {sizes.train, sizes.val, sizes.test};
  for (int k = 0; k < 3; ++k) {
    DataSplit& s = d.split(kAllSplits[k]);
    for (int i = 0; i < counts[k]; ++i) {
      const int label = pick(rng);
      Tensor x = Tensor::from_shape3(shape);
      for (std::size_t j = 0; j < n; ++j) x[j] = centers[label][j] + spread * gauss(rng);
      s.inputs.push_back(std::move(x));
      s.labels.push_back(label);
    }
  }
  d.validate();
  return d;
}

void save_dataset(const LabeledDataset& data, const std::filesystem::path& manifest) {
  data.validate();
  TensorContainer c;
  c.metadata()["content"] = "dataset";
  c.metadata()["num_classes"] = std::to_string(data.num_classes);
  c.metadata()["input_shape"] = std::to_string(data.input_shape.c) + "," +
                                std::to_string(data.input_shape.h) + "," +
                                std::to_string(data.input_shape.w);
  const Shape3 sh = data.input_shape;
  for (SplitTag tag : kAllSplits) {
    const DataSplit& s = data.split(tag);
    const int count = static_cast<int>(s.size());
    Tensor inputs({count, sh.c, sh.h, sh.w});
    for (int i = 0; i < count; ++i) {
      std::copy(s.inputs[i].data.begin(), s.inputs[i].data.end(),
                inputs.data.begin() + static_cast<std::ptrdiff_t>(i * sh.numel()));
    }
    Tensor labels({count});
    for (int i = 0; i < count; ++i) labels[i] = s.labels[i];
    c.add(std::string(to_string(tag)) + ".inputs", inputs);
    c.add(std::string(to_string(tag)) + ".labels", labels);
  }
  write_container(c, manifest);
}

LabeledDataset load_dataset(const std::filesystem::path& manifest) {
  const TensorContainer c = read_container(manifest);
  const auto content = c.metadata().find("content");
  if (content == c.metadata().end() || content->second != "dataset") {
    throw ValidationError(manifest.string() + " is not a dataset container");
  }
  LabeledDataset d;
  try {
    d.num_classes = std::stoi(c.metadata().at("num_classes"));
  } catch (const std::exception&) {
    throw ParseError(manifest.string() + ": bad num_classes metadata");
  }
  for (SplitTag tag : kAllSplits) {
    const std::string prefix(to_string(tag));
    const Tensor inputs = c.real(prefix + ".inputs");
    const Tensor labels = c.real(prefix + ".labels");
    if (inputs.shape.size() != 4 || labels.shape.size() != 1 ||
        inputs.shape[0] != labels.shape[0]) {
      throw ValidationError(manifest.string() + ": malformed " + prefix + " split");
    }
    d.input_shape = {inputs.shape[1], inputs.shape[2], inputs.shape[3]};
    const std::size_t per = d.input_shape.numel();
    DataSplit& s = d.split(tag);
    for (int i = 0; i < labels.shape[0]; ++i) {
      const double l = labels[i];
      if (l != std::floor(l)) {
        throw ValidationError(manifest.string() + ": non-integer label in " + prefix);
      }
      s.labels.push_back(static_cast<int>(l));
      Tensor x = Tensor::from_shape3(d.input_shape);
      std::copy(inputs.data.begin() + static_cast<std::ptrdiff_t>(i * per),
                inputs.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * per),
                x.data.begin());
      s.inputs.push_back(std::move(x));
    }
  }
  d.validate();
  return d;
}

}  // namespace hnet
