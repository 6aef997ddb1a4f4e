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

#include <filesystem>
#include <string>
#include <string_view>

#include "hnet/netgraph.hpp"

namespace hnet {

// Line-oriented graph description:
//
//   hnet-graph 1
//   name resnet_mini
//   input 3 32 32
//   classes 10
//   segment
//   conv out=16 k=3 s=1 p=1
//   relu
//   add from=1            # id of an earlier layer, or "input"
//   exit
//   segment
//   ...
//
// Layers take implicit ids in file order. Each "exit" closes the current
// segment and attaches the next exit head. '#' starts a comment.
MultiExitNetwork parse_graph(std::string_view text,
                             const std::string& source = "<graph>");
MultiExitNetwork load_graph(const std::filesystem::path& path);
std::string format_graph(const MultiExitNetwork& net);

// Accepts "preset:<name>[:classes[:C,H,W]]" or a file path.
MultiExitNetwork resolve_graph(const std::string& source);

}  // namespace hnet
