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

#include "hnet/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "hnet/error.hpp"
#include "json.hpp"

namespace hnet {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "hnet-tensors";
constexpr int kVersion = 1;

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
}  // namespace

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Real32: return "real32";
    case ElementKind::Int8Code: return "int8-code";
    case ElementKind::Int4Code: return "int4-code";
  }
  return "?";
}

ElementKind parse_element_kind(std::string_view text) {
  if (text == "real32") return ElementKind::Real32;
  if (text == "int8-code") return ElementKind::Int8Code;
  if (text == "int4-code") return ElementKind::Int4Code;
  throw ParseError("unknown element kind '" + std::string(text) + "'");
}

ElementKind element_kind_for(BitWidth bw) {
  switch (bw) {
    case BitWidth::Q8: return ElementKind::Int8Code;
    case BitWidth::Q4: return ElementKind::Int4Code;
    case BitWidth::FP32: break;
  }
  return ElementKind::Real32;
}

std::vector<std::uint8_t> pack_int4(const std::vector<std::int8_t>& codes) {
  std::vector<std::uint8_t> out((codes.size() + 1) / 2, 0);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto nib = static_cast<std::uint8_t>(codes[i] & 0x0F);
    out[i / 2] |= (i % 2 == 0) ? nib : static_cast<std::uint8_t>(nib << 4);
  }
  return out;
}

std::vector<std::int8_t> unpack_int4(const std::vector<std::uint8_t>& bytes,
                                     std::size_t count) {
  if (bytes.size() < (count + 1) / 2) {
    throw ParseError("int4 payload too short");
  }
  std::vector<std::int8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    int nib = (i % 2 == 0) ? (bytes[i / 2] & 0x0F) : (bytes[i / 2] >> 4);
    if (nib >= 8) nib -= 16;  // sign-extend two's complement nibble
    out[i] = static_cast<std::int8_t>(nib);
  }
  return out;
}

void TensorContainer::add(std::string name, const Tensor& t) {
  ContainerItem item;
  item.name = std::move(name);
  item.shape = t.shape;
  item.kind = ElementKind::Real32;
  item.reals = t.data;
  items_.push_back(std::move(item));
}

void TensorContainer::add(std::string name, const QuantTensor& q) {
  q.validate();
  ContainerItem item;
  item.name = std::move(name);
  item.shape = q.shape;
  item.kind = element_kind_for(q.params.bit_width);
  item.params = q.params;
  item.codes = q.codes;
  items_.push_back(std::move(item));
}

void TensorContainer::add_params(std::string name, const QuantParams& p) {
  p.validate();
  ContainerItem item;
  item.name = std::move(name);
  item.shape = {0};
  item.kind = element_kind_for(p.bit_width);
  item.params = p;
  items_.push_back(std::move(item));
}

const ContainerItem* TensorContainer::find(std::string_view name) const {
  for (const ContainerItem& it : items_) {
    if (it.name == name) return &it;
  }
  return nullptr;
}

const ContainerItem& TensorContainer::at(std::string_view name) const {
  const ContainerItem* it = find(name);
  if (!it) throw ValidationError("container has no tensor '" + std::string(name) + "'");
  return *it;
}

Tensor TensorContainer::real(std::string_view name) const {
  const ContainerItem& it = at(name);
  if (it.kind != ElementKind::Real32) {
    throw ValidationError("tensor '" + it.name + "' is not real32");
  }
  return Tensor(it.shape, it.reals);
}

QuantTensor TensorContainer::quant(std::string_view name) const {
  const ContainerItem& it = at(name);
  if (it.kind == ElementKind::Real32) {
    throw ValidationError("tensor '" + it.name + "' is not a code tensor");
  }
  QuantTensor q{it.shape, it.codes, it.params};
  q.validate();
  return q;
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
  std::filesystem::path blob = manifest;
  blob.replace_extension(".bin");
  return blob;
}

void write_container(const TensorContainer& c,
                     const std::filesystem::path& manifest) {
  std::vector<std::uint8_t> blob;
  json tensors = json::array();
  for (const ContainerItem& it : c.items()) {
    const std::uint64_t offset = blob.size();
    switch (it.kind) {
      case ElementKind::Real32:
        for (double v : it.reals) {
          put_u32_le(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
        break;
      case ElementKind::Int8Code:
        for (std::int8_t v : it.codes) blob.push_back(static_cast<std::uint8_t>(v));
        break;
      case ElementKind::Int4Code: {
        const auto packed = pack_int4(it.codes);
        blob.insert(blob.end(), packed.begin(), packed.end());
        break;
      }
    }
    json entry = {{"name", it.name},
                  {"shape", it.shape},
                  {"kind", std::string(to_string(it.kind))},
                  {"offset", offset},
                  {"length", blob.size() - offset}};
    if (it.kind != ElementKind::Real32) {
      entry["scale"] = it.params.scale;
      entry["zero_point"] = it.params.zero_point;
    }
    tensors.push_back(std::move(entry));
  }

  const std::filesystem::path blob_path = blob_path_for(manifest);
  json doc = {{"format", kFormat},
              {"version", kVersion},
              {"blob", blob_path.filename().string()},
              {"metadata", c.metadata()},
              {"tensors", std::move(tensors)}};

  std::ofstream mf(manifest, std::ios::binary);
  if (!mf) throw ExecutionError("cannot write " + manifest.string());
  mf << doc.dump(2) << '\n';
  std::ofstream bf(blob_path, std::ios::binary);
  if (!bf) throw ExecutionError("cannot write " + blob_path.string());
  bf.write(reinterpret_cast<const char*>(blob.data()),
           static_cast<std::streamsize>(blob.size()));
  if (!mf || !bf) throw ExecutionError("write failed for " + manifest.string());
}

TensorContainer read_container(const std::filesystem::path& manifest) {
  std::ifstream mf(manifest, std::ios::binary);
  if (!mf) throw ExecutionError("cannot open " + manifest.string());
  json doc;
  try {
    doc = json::parse(mf);
  } catch (const json::parse_error& e) {
    throw ParseError(manifest.string() + ": " + e.what());
  }
  TensorContainer c;
  try {
    if (doc.at("format") != kFormat) {
      throw ParseError(manifest.string() + ": not an hnet tensor container");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw ParseError(manifest.string() + ": unsupported container version");
    }
    const std::filesystem::path blob_path =
        manifest.parent_path() / doc.at("blob").get<std::string>();
    std::ifstream bf(blob_path, std::ios::binary);
    if (!bf) throw ExecutionError("cannot open " + blob_path.string());
    const std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(bf)),
                                         std::istreambuf_iterator<char>());
    if (doc.contains("metadata")) {
      c.metadata() = doc["metadata"].get<std::map<std::string, std::string>>();
    }
    for (const json& e : doc.at("tensors")) {
      ContainerItem it;
      it.name = e.at("name").get<std::string>();
      it.shape = e.at("shape").get<std::vector<int>>();
      it.kind = parse_element_kind(e.at("kind").get<std::string>());
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto length = e.at("length").get<std::uint64_t>();
      if (offset + length > blob.size()) {
        throw ParseError(manifest.string() + ": tensor '" + it.name +
                         "' exceeds blob size");
      }
      const std::uint8_t* p = blob.data() + offset;
      const std::size_t n = numel(it.shape);
      switch (it.kind) {
        case ElementKind::Real32:
          if (length != 4 * n) throw ParseError("bad length for '" + it.name + "'");
          it.reals.resize(n);
          for (std::size_t i = 0; i < n; ++i) {
            it.reals[i] = std::bit_cast<float>(get_u32_le(p + 4 * i));
          }
          break;
        case ElementKind::Int8Code:
          if (length != n) throw ParseError("bad length for '" + it.name + "'");
          it.codes.assign(reinterpret_cast<const std::int8_t*>(p),
                          reinterpret_cast<const std::int8_t*>(p) + n);
          break;
        case ElementKind::Int4Code:
          if (length != (n + 1) / 2) throw ParseError("bad length for '" + it.name + "'");
          it.codes = unpack_int4(std::vector<std::uint8_t>(p, p + length), n);
          break;
      }
      if (it.kind != ElementKind::Real32) {
        it.params.scale = e.at("scale").get<double>();
        it.params.zero_point = e.at("zero_point").get<double>();
        it.params.bit_width = it.kind == ElementKind::Int8Code ? BitWidth::Q8
                                                               : BitWidth::Q4;
        it.params.validate();
      }
      c.add_item(std::move(it));
    }
  } catch (const json::exception& e) {
    throw ParseError(manifest.string() + ": " + e.what());
  }
  return c;
}

}  // namespace hnet
