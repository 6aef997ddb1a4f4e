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

#include "hnet/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "hnet/error.hpp"

namespace hnet {

namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

int parse_int(std::string_view s, const std::string& source, int line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(source, line, "expected integer, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

MultiExitNetwork parse_graph(std::string_view text, const std::string& source) {
  std::string name = "graph";
  Shape3 input;
  int classes = 0;
  bool have_header = false;
  std::array<std::vector<LayerSpec>, kNumExits> segs;
  int seg = -1;          // index of the open segment, -1 if none
  int closed = 0;        // number of exits attached
  int line_no = 0;

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::vector<std::string> tok =
        split_ws(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (tok.empty()) continue;
    const std::string& kw = tok[0];

    if (!have_header) {
      if (kw != "hnet-graph" || tok.size() != 2 || tok[1] != "1") {
        throw ParseError(source, line_no, "expected header 'hnet-graph 1'");
      }
      have_header = true;
      continue;
    }
    if (kw == "name") {
      if (tok.size() != 2) throw ParseError(source, line_no, "name takes one value");
      name = tok[1];
    } else if (kw == "input") {
      if (tok.size() != 4) throw ParseError(source, line_no, "input takes C H W");
      input = {parse_int(tok[1], source, line_no), parse_int(tok[2], source, line_no),
               parse_int(tok[3], source, line_no)};
    } else if (kw == "classes") {
      if (tok.size() != 2) throw ParseError(source, line_no, "classes takes one value");
      classes = parse_int(tok[1], source, line_no);
    } else if (kw == "segment") {
      if (seg >= 0) throw ParseError(source, line_no, "segment opened before 'exit'");
      if (closed >= kNumExits) {
        throw ParseError(source, line_no, "more than three segments");
      }
      seg = closed;
    } else if (kw == "exit") {
      if (seg < 0) throw ParseError(source, line_no, "'exit' outside a segment");
      ++closed;
      seg = -1;
    } else {
      if (seg < 0) {
        throw ParseError(source, line_no, "layer '" + kw + "' outside a segment");
      }
      std::map<std::string, std::string> kv;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto eq = tok[i].find('=');
        if (eq == std::string::npos) {
          throw ParseError(source, line_no, "expected key=value, got '" + tok[i] + "'");
        }
        kv[tok[i].substr(0, eq)] = tok[i].substr(eq + 1);
      }
      auto take = [&](const std::string& key, int fallback, bool required) {
        auto it = kv.find(key);
        if (it == kv.end()) {
          if (required) {
            throw ParseError(source, line_no, kw + " requires '" + key + "='");
          }
          return fallback;
        }
        const int v = it->second == "input" && key == "from"
                          ? kNetworkInput
                          : parse_int(it->second, source, line_no);
        kv.erase(it);
        return v;
      };
      LayerSpec l;
      if (kw == "conv") {
        l = LayerSpec::conv(take("out", 0, true), take("k", 1, false),
                            take("s", 1, false), take("p", 0, false),
                            take("bias", 1, false) != 0);
      } else if (kw == "fc") {
        l = LayerSpec::fc(take("out", 0, true), take("bias", 1, false) != 0);
      } else if (kw == "relu") {
        l = LayerSpec::relu();
      } else if (kw == "maxpool") {
        const int k = take("k", 2, false);
        l = LayerSpec::max_pool(k, take("s", k, false));
      } else if (kw == "avgpool") {
        l = LayerSpec::adaptive_avg_pool(take("h", 1, false), take("w", 1, false));
      } else if (kw == "add") {
        l = LayerSpec::residual_add(take("from", 0, true));
      } else if (kw == "concat") {
        l = LayerSpec::dense_concat(take("from", 0, true));
      } else if (kw == "flatten") {
        l = LayerSpec::flatten();
      } else if (kw == "softmax") {
        l = LayerSpec::softmax();
      } else {
        throw ParseError(source, line_no, "unknown layer kind '" + kw + "'");
      }
      if (!kv.empty()) {
        throw ParseError(source, line_no,
                         "unknown key '" + kv.begin()->first + "' for " + kw);
      }
      segs[seg].push_back(l);
    }
  }
  if (!have_header) throw ParseError(source, line_no, "empty graph description");
  if (seg >= 0) throw ParseError(source, line_no, "segment not closed by 'exit'");
  if (closed != kNumExits) {
    throw ParseError(source, line_no, "expected three segments, found " +
                                          std::to_string(closed));
  }
  return MultiExitNetwork::build(name, input, classes, std::move(segs));
}

MultiExitNetwork load_graph(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ExecutionError("cannot open graph file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_graph(ss.str(), path.string());
}

std::string format_graph(const MultiExitNetwork& net) {
  std::ostringstream out;
  const Shape3 in = net.input_shape();
  out << "hnet-graph 1\n"
      << "name " << net.name() << "\n"
      << "input " << in.c << ' ' << in.h << ' ' << in.w << "\n"
      << "classes " << net.num_classes() << "\n";
  for (int s = 1; s <= kNumExits; ++s) {
    out << "segment\n";
    for (const LayerSpec& l : net.segment(s)) {
      out << to_string(l.kind);
      switch (l.kind) {
        case LayerKind::Conv2D:
          out << " out=" << l.out_channels << " k=" << l.kernel
              << " s=" << l.stride << " p=" << l.padding;
          if (!l.bias) out << " bias=0";
          break;
        case LayerKind::FullyConnected:
          out << " out=" << l.out_features;
          if (!l.bias) out << " bias=0";
          break;
        case LayerKind::MaxPool:
          out << " k=" << l.kernel << " s=" << l.stride;
          break;
        case LayerKind::AdaptiveAvgPool:
          out << " h=" << l.out_h << " w=" << l.out_w;
          break;
        case LayerKind::ResidualAdd:
        case LayerKind::DenseConcat:
          out << " from=";
          if (l.source == kNetworkInput) {
            out << "input";
          } else {
            out << l.source;
          }
          break;
        default:
          break;
      }
      out << "  # L" << l.id << " -> " << to_string(l.out_shape) << "\n";
    }
    out << "exit\n";
  }
  return out.str();
}

MultiExitNetwork resolve_graph(const std::string& source) {
  constexpr std::string_view kPrefix = "preset:";
  if (!source.starts_with(kPrefix)) return load_graph(source);
  std::vector<std::string> parts;
  std::stringstream ss(source.substr(kPrefix.size()));
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.empty() || parts.size() > 3) {
    throw ParseError("bad preset descriptor '" + source +
                     "' (expected preset:<name>[:classes[:C,H,W]])");
  }
  const Preset preset = parse_preset(parts[0]);
  int classes = 10;
  Shape3 shape = preset == Preset::DenseNetMini ? Shape3{1, 28, 28}
                                                : Shape3{3, 32, 32};
  if (parts.size() >= 2) classes = parse_int(parts[1], source, 1);
  if (parts.size() == 3) {
    int dims[3];
    std::stringstream ds(parts[2]);
    std::string d;
    int i = 0;
    while (std::getline(ds, d, ',')) {
      if (i >= 3) throw ParseError("preset shape must be C,H,W");
      dims[i++] = parse_int(d, source, 1);
    }
    if (i != 3) throw ParseError("preset shape must be C,H,W");
    shape = {dims[0], dims[1], dims[2]};
  }
  return build_preset(preset, classes, shape);
}

}  // namespace hnet
