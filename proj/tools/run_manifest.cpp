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

#include "run_manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "hnet/container.hpp"
#include "hnet/error.hpp"

namespace hnet::cli {

std::string tool_version() { return HNET_VERSION; }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExecutionError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw ExecutionError("sha256 init failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), in.gcount());
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xF];
  }
  return hex;
}

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) return;
  inputs.push_back({role, path.string(), sha256_file(path)});
  if (path.extension() == ".json") {
    const auto blob = blob_path_for(path);
    if (std::filesystem::is_regular_file(blob)) {
      inputs.push_back({role + ".blob", blob.string(), sha256_file(blob)});
    }
  }
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["format"] = "hnet-run-manifest";
  j["version"] = 1;
  j["tool_version"] = tool_version();
  j["command"] = command;
  j["argv"] = argv;
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["output"] = output;
  nlohmann::json ins = nlohmann::json::array();
  for (const InputRecord& r : inputs) {
    ins.push_back({{"role", r.role}, {"path", r.path}, {"sha256", r.sha256}});
  }
  j["inputs"] = ins;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExecutionError("cannot write " + path.string());
  out << to_json();
}

}  // namespace hnet::cli
