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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hnet/quantizer.hpp"
#include "hnet/tensor.hpp"

namespace hnet {

// On-disk element encodings. Reals are little-endian IEEE-754 binary32;
// int4 codes are packed two per byte, low nibble first.
enum class ElementKind { Real32, Int8Code, Int4Code };

std::string_view to_string(ElementKind kind);
ElementKind parse_element_kind(std::string_view text);
ElementKind element_kind_for(BitWidth bw);

struct ContainerItem {
  std::string name;
  std::vector<int> shape;
  ElementKind kind = ElementKind::Real32;
  QuantParams params;                 // meaningful for code kinds only
  std::vector<double> reals;          // Real32
  std::vector<std::int8_t> codes;     // Int8Code / Int4Code
};

// A named list of tensors stored as a JSON manifest plus one binary blob.
class TensorContainer {
 public:
  void add(std::string name, const Tensor& t);
  void add(std::string name, const QuantTensor& q);
  // Parameters without payload (e.g. activation quantization params).
  void add_params(std::string name, const QuantParams& p);
  void add_item(ContainerItem item) { items_.push_back(std::move(item)); }

  const ContainerItem* find(std::string_view name) const;
  const ContainerItem& at(std::string_view name) const;
  Tensor real(std::string_view name) const;
  QuantTensor quant(std::string_view name) const;

  const std::vector<ContainerItem>& items() const { return items_; }
  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const {
    return metadata_;
  }

 private:
  std::vector<ContainerItem> items_;
  std::map<std::string, std::string> metadata_;
};

std::filesystem::path blob_path_for(const std::filesystem::path& manifest);

void write_container(const TensorContainer& c,
                     const std::filesystem::path& manifest);
TensorContainer read_container(const std::filesystem::path& manifest);

// Low-level payload codecs, exposed for tests.
std::vector<std::uint8_t> pack_int4(const std::vector<std::int8_t>& codes);
std::vector<std::int8_t> unpack_int4(const std::vector<std::uint8_t>& bytes,
                                     std::size_t count);

}  // namespace hnet
