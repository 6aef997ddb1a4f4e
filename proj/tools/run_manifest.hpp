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
#include <optional>
#include <string>
#include <vector>

namespace hnet::cli {

struct InputRecord {
  std::string role;
  std::string path;
  std::string sha256;  // hex digest of the file contents
};

// Everything needed to rerun a command: argv, seed, inputs with content
// hashes, output location and tool version.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::vector<InputRecord> inputs;

  // Records `path`, plus the binary blob next to a container manifest.
  void add_input(const std::string& role, const std::filesystem::path& path);
  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string sha256_file(const std::filesystem::path& path);
std::string tool_version();

}  // namespace hnet::cli
