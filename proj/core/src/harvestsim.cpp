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

#include "hnet/harvestsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hnet/error.hpp"
#include "hnet/forward.hpp"
#include "json.hpp"

namespace hnet {

using nlohmann::json;

void HarvestTrace::validate() const {
  if (samples.empty()) throw ValidationError("trace has no samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].t) || !std::isfinite(samples[i].r_c)) {
      throw ValidationError("trace sample " + std::to_string(i) + " is not finite");
    }
    if (samples[i].r_c < 0.0) {
      throw ValidationError("trace sample " + std::to_string(i) +
                            " has negative charging rate");
    }
    if (i > 0 && !(samples[i].t > samples[i - 1].t)) {
      throw ValidationError("trace timestamps must strictly increase (sample " +
                            std::to_string(i) + ")");
    }
  }
}

double HarvestTrace::rate_at(double t) const {
  if (t <= samples.front().t) return samples.front().r_c;
  if (t >= samples.back().t) return samples.back().r_c;
  const auto hi = std::upper_bound(
      samples.begin(), samples.end(), t,
      [](double v, const TraceSample& s) { return v < s.t; });
  const auto lo = hi - 1;
  const double f = (t - lo->t) / (hi->t - lo->t);
  return lo->r_c + f * (hi->r_c - lo->r_c);
}

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

HarvestTrace parse_trace(const std::string& text, const std::string& source) {
  HarvestTrace trace;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto comma = line.find(',');
    double t = 0.0;
    double r = 0.0;
    const bool ok = comma != std::string::npos &&
                    parse_double(std::string_view(line).substr(0, comma), t) &&
                    parse_double(std::string_view(line).substr(comma + 1), r);
    if (!ok) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw ParseError(source, line_no, "expected 't_seconds,charge_rate_watts'");
    }
    header_allowed = false;
    if (!std::isfinite(t) || !std::isfinite(r)) {
      throw ParseError(source, line_no, "non-finite value");
    }
    if (r < 0.0) throw ParseError(source, line_no, "negative charging rate");
    if (!trace.samples.empty() && !(t > trace.samples.back().t)) {
      throw ParseError(source, line_no, "timestamps must strictly increase");
    }
    trace.samples.push_back({t, r});
  }
  if (trace.samples.empty()) throw ParseError(source, line_no, "trace is empty");
  return trace;
}

HarvestTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExecutionError("cannot open trace " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str(), path.string());
}

std::string format_trace(const HarvestTrace& trace) {
  std::ostringstream out;
  out << "t_seconds,charge_rate_watts\n";
  out.precision(17);
  for (const TraceSample& s : trace.samples) out << s.t << ',' << s.r_c << '\n';
  return out.str();
}

TraceKind parse_trace_kind(const std::string& text) {
  if (text == "sinusoid") return TraceKind::Sinusoid;
  if (text == "step") return TraceKind::Step;
  if (text == "constant") return TraceKind::Constant;
  throw ValidationError("unknown trace kind '" + text + "'");
}

HarvestTrace synth_trace(TraceKind kind, const SynthParams& p, double duration,
                         double dt) {
  if (!(duration > 0.0)) throw ValidationError("trace duration must be positive");
  if (!(dt > 0.0)) throw ValidationError("trace dt must be positive");
  if (kind == TraceKind::Sinusoid && !(p.period > 0.0)) {
    throw ValidationError("sinusoid period must be positive");
  }
  if (kind == TraceKind::Step && p.levels.empty()) {
    throw ValidationError("step trace needs at least one level");
  }
  const auto n = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
  HarvestTrace trace;
  trace.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    double r = 0.0;
    switch (kind) {
      case TraceKind::Sinusoid:
        r = std::max(0.0, p.offset + p.amplitude *
                                         std::sin(2.0 * std::numbers::pi * t / p.period));
        break;
      case TraceKind::Step: {
        const auto k = std::min(
            p.levels.size() - 1,
            static_cast<std::size_t>(t / duration * static_cast<double>(p.levels.size())));
        r = p.levels[k];
        break;
      }
      case TraceKind::Constant:
        r = p.value;
        break;
    }
    if (r < 0.0) throw ValidationError("synthetic trace rate must be >= 0");
    trace.samples.push_back({t, r});
  }
  return trace;
}

EnergyStep step_energy(const EnergyState& state, double r_c,
                       double consumption_j, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(consumption_j >= 0.0)) throw ValidationError("consumption must be >= 0");
  EnergyStep out;
  out.state = state;
  out.state.r_c = r_c;
  const double next = state.e_sys + r_c * dt - consumption_j;
  // Rounding slack so a budget that exactly covers demand never counts as
  // depletion.
  const double slack = 1e-12 * (state.e_sys + consumption_j);
  if (next < -slack) out.depleted = true;
  if (next > state.e_cap) {
    out.clamped_full = true;
    out.state.e_sys = state.e_cap;
  } else {
    out.state.e_sys = std::max(0.0, next);
  }
  return out;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::PowerOn: return "power_on";
    case EventKind::StartInference: return "start_inference";
    case EventKind::ExitTaken: return "exit_taken";
    case EventKind::PowerOff: return "power_off";
    case EventKind::PrecisionLevelChange: return "precision_level_change";
    case EventKind::EnergyDepletedMidSegment: return "energy_depleted_mid_segment";
  }
  return "?";
}

EventKind parse_event_kind(std::string_view s) {
  for (EventKind k : {EventKind::PowerOn, EventKind::StartInference,
                      EventKind::ExitTaken, EventKind::PowerOff,
                      EventKind::PrecisionLevelChange,
                      EventKind::EnergyDepletedMidSegment}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown event kind '" + std::string(s) + "'");
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  if (!(e_cap >= 0.0)) throw ValidationError("e_cap must be >= 0");
  if (!(e_init >= 0.0 && e_init <= e_cap)) {
    throw ValidationError("e_init must lie in [0, e_cap]");
  }
  hardware.validate();
  thresholds.validate();
  for (const auto& [bw, t] : exit_thresholds) t.validate();
}

namespace {

class InputStream {
 public:
  InputStream(const SimConfig& c, Shape3 shape)
      : inputs_(c.inputs), shape_(shape), rng_(c.input_seed) {}

  Tensor next() {
    if (!inputs_.empty()) return inputs_[cursor_++ % inputs_.size()];
    Tensor t = Tensor::from_shape3(shape_);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : t.data) v = dist(rng_);
    return t;
  }

 private:
  const std::vector<Tensor>& inputs_;
  Shape3 shape_;
  std::mt19937_64 rng_;
  std::size_t cursor_ = 0;
};

ExitThresholds lookup_thresholds(const SimConfig& c, BitWidth bw) {
  auto it = c.exit_thresholds.find(bw);
  if (it != c.exit_thresholds.end()) return it->second;
  it = c.exit_thresholds.find(BitWidth::FP32);
  if (it != c.exit_thresholds.end()) return it->second;
  return ExitThresholds{};
}

}  // namespace

SimResult run_simulation(const SimConfig& config, const MultiExitNetwork& net,
                         const WeightSet& weights, const HarvestTrace& trace) {
  config.validate();
  trace.validate();
  for (BitWidth bw : kAllBitWidths) weights.validate(net, bw);

  SimResult result;
  result.dt = config.dt;
  result.e_cap = config.e_cap;
  result.thresholds = config.thresholds;
  const SchedulerThresholds& thr = config.thresholds;

  const std::array<double, kNumExits> work = {
      static_cast<double>(segment_work_macs(net, 1)),
      static_cast<double>(segment_work_macs(net, 2)),
      static_cast<double>(segment_work_macs(net, 3))};

  InputStream inputs(config, net.input_shape());
  PrecisionLatch latch;
  std::optional<ExitRunner> runner;
  EnergyState state{config.e_init, 0.0, config.e_cap};
  bool powered = false;
  int inference = -1;
  int segment = 0;
  double remaining = 0.0;  // J still to spend on the current segment
  ExitThresholds exit_t;
  std::optional<BitWidth> last_level;

  auto log = [&](SimEvent e) { result.events.push_back(std::move(e)); };

  const double duration = trace.end() - trace.start();
  const auto steps =
      static_cast<std::size_t>(std::floor(duration / config.dt + 1e-9)) + 1;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = trace.start() + static_cast<double>(i) * config.dt;
    const double r = trace.rate_at(t);
    int marker = kMarkerNone;

    const BitWidth level = select_precision(r, thr);
    if (last_level && *last_level != level) {
      log({.time = t, .kind = EventKind::PrecisionLevelChange, .precision = level});
    }
    last_level = level;

    if (!powered && state.e_sys > 0.0) {
      powered = true;
      log({.time = t, .kind = EventKind::PowerOn});
    }

    if (!latch.active()) {
      if (const auto p = latch.try_start(r, state.e_sys, thr)) {
        ++inference;
        log({.time = t, .kind = EventKind::StartInference,
             .inference = inference, .precision = *p});
        runner.emplace(net, weights, *p);
        runner->start(inputs.next());
        exit_t = lookup_thresholds(config, *p);
        segment = 1;
        remaining = work[0] * config.hardware.e_mac[*p];
      }
    }

    const std::optional<BitWidth> step_precision =
        latch.active() ? std::optional<BitWidth>(latch.precision()) : std::nullopt;
    double demand = 0.0;
    if (latch.active()) {
      demand = std::min(remaining, config.hardware.power(latch.precision()) * config.dt);
    }
    const EnergyStep step = step_energy(state, r, demand, config.dt);
    state = step.state;
    result.consumption.push_back(demand);
    result.clamped.push_back(step.clamped_full || step.depleted ||
                             (state.e_sys == 0.0 && demand > 0.0));

    if (latch.active()) {
      if (step.depleted) {
        log({.time = t, .kind = EventKind::EnergyDepletedMidSegment,
             .inference = inference, .exit = segment});
        marker = kMarkerDepleted;
        latch.release();
        runner.reset();
      } else {
        remaining -= demand;
        if (remaining <= 0.0) {
          const std::vector<double> probs = softmax(runner->advance());
          const double c = confidence(probs);
          const BitWidth p = latch.precision();
          std::optional<ExitReason> reason;
          if (segment == kNumExits) {
            reason = ExitReason::Confidence;
          } else if (decide_at_exit(state.e_sys, thr.e_th[p]) ==
                     ExitAction::TerminateHere) {
            reason = ExitReason::Energy;
          } else if (should_exit(c, exit_t.t[segment - 1])) {
            reason = ExitReason::Confidence;
          }
          if (reason) {
            log({.time = t, .kind = EventKind::ExitTaken, .inference = inference,
                 .exit = segment, .reason = *reason, .confidence = c,
                 .predicted_class = static_cast<int>(argmax(probs))});
            marker = exit_marker(segment, *reason);
            latch.release();
            runner.reset();
          } else {
            ++segment;
            remaining = work[segment - 1] * config.hardware.e_mac[p];
          }
        }
      }
    }

    if (powered && state.e_sys <= 0.0) {
      powered = false;
      log({.time = t, .kind = EventKind::PowerOff});
    }

    result.series.time.push_back(t);
    result.series.rate.push_back(r);
    result.series.precision.push_back(step_precision);
    result.series.energy.push_back(state.e_sys);
    result.series.exits.push_back(marker);
  }
  return result;
}

}  // namespace hnet

namespace hnet {

namespace {

constexpr const char* kReportFormat = "hnet-sim-report";
constexpr int kReportVersion = 1;

json thresholds_json(const SchedulerThresholds& t) {
  json eth = json::object();
  for (BitWidth bw : kAllBitWidths) eth[std::string(to_string(bw))] = t.e_th[bw];
  return {{"r_th1", t.r_th1}, {"r_th2", t.r_th2}, {"e_th", eth}};
}

json event_json(const SimEvent& e) {
  json j = {{"time", e.time}, {"kind", std::string(to_string(e.kind))}};
  if (e.inference >= 0) j["inference"] = e.inference;
  if (e.precision) j["precision"] = std::string(to_string(*e.precision));
  switch (e.kind) {
    case EventKind::ExitTaken:
      j["exit"] = e.exit;
      j["reason"] = std::string(to_string(e.reason));
      j["confidence"] = e.confidence;
      j["class"] = e.predicted_class;
      break;
    case EventKind::EnergyDepletedMidSegment:
      j["exit"] = e.exit;
      break;
    default:
      break;
  }
  return j;
}

SimEvent parse_event(const json& j) {
  SimEvent e;
  e.time = j.at("time").get<double>();
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.inference = j.value("inference", -1);
  if (j.contains("precision")) e.precision = parse_bitwidth(j["precision"].get<std::string>());
  e.exit = j.value("exit", 0);
  if (j.contains("reason")) {
    e.reason = j["reason"] == "energy" ? ExitReason::Energy : ExitReason::Confidence;
  }
  e.confidence = j.value("confidence", 0.0);
  e.predicted_class = j.value("class", -1);
  return e;
}

}  // namespace

SimSummary summarize(const SimResult& r) {
  SimSummary s;
  for (const SimEvent& e : r.events) {
    switch (e.kind) {
      case EventKind::StartInference:
        ++s.inferences;
        ++s.starts_by_precision[static_cast<int>(*e.precision)];
        break;
      case EventKind::ExitTaken:
        if (e.reason == ExitReason::Confidence) {
          ++s.confidence_exits[e.exit - 1];
        } else {
          ++s.energy_exits[e.exit - 1];
        }
        break;
      case EventKind::EnergyDepletedMidSegment:
        ++s.depleted;
        break;
      default:
        break;
    }
  }
  return s;
}

std::string format_report(const SimResult& r) {
  json precision = json::array();
  for (const auto& p : r.series.precision) {
    precision.push_back(p ? std::string(to_string(*p)) : std::string("idle"));
  }
  json events = json::array();
  for (const SimEvent& e : r.events) events.push_back(event_json(e));

  const SimSummary s = summarize(r);
  json summary = {{"inferences", s.inferences},
                  {"confidence_exits", s.confidence_exits},
                  {"energy_exits", s.energy_exits},
                  {"depleted", s.depleted},
                  {"starts_fp32", s.starts_by_precision[static_cast<int>(BitWidth::FP32)]},
                  {"starts_q8", s.starts_by_precision[static_cast<int>(BitWidth::Q8)]},
                  {"starts_q4", s.starts_by_precision[static_cast<int>(BitWidth::Q4)]}};

  json doc = {{"format", kReportFormat},
              {"version", kReportVersion},
              {"dt", r.dt},
              {"e_cap", r.e_cap},
              {"thresholds", thresholds_json(r.thresholds)},
              {"summary", summary},
              {"series",
               {{"time", r.series.time},
                {"rate", r.series.rate},
                {"precision", precision},
                {"energy", r.series.energy},
                {"exits", r.series.exits}}},
              {"events", events}};
  return doc.dump(1) + "\n";
}

void export_report(const SimResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExecutionError("cannot write report " + path.string());
  out << format_report(result);
  if (!out) throw ExecutionError("write failed for " + path.string());
}

SimResult parse_report(const std::string& text, const std::string& source) {
  SimResult r;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != kReportFormat) {
      throw ParseError(source + ": not a simulation report");
    }
    if (doc.at("version").get<int>() != kReportVersion) {
      throw ParseError(source + ": unsupported report version");
    }
    r.dt = doc.at("dt").get<double>();
    r.e_cap = doc.at("e_cap").get<double>();
    const json& th = doc.at("thresholds");
    r.thresholds.r_th1 = th.at("r_th1").get<double>();
    r.thresholds.r_th2 = th.at("r_th2").get<double>();
    for (BitWidth bw : kAllBitWidths) {
      r.thresholds.e_th[bw] = th.at("e_th").at(std::string(to_string(bw))).get<double>();
    }
    const json& s = doc.at("series");
    r.series.time = s.at("time").get<std::vector<double>>();
    r.series.rate = s.at("rate").get<std::vector<double>>();
    r.series.energy = s.at("energy").get<std::vector<double>>();
    r.series.exits = s.at("exits").get<std::vector<int>>();
    for (const json& p : s.at("precision")) {
      const auto v = p.get<std::string>();
      r.series.precision.push_back(v == "idle" ? std::nullopt
                                               : std::optional(parse_bitwidth(v)));
    }
    const std::size_t n = r.series.time.size();
    if (r.series.rate.size() != n || r.series.energy.size() != n ||
        r.series.exits.size() != n || r.series.precision.size() != n) {
      throw ParseError(source + ": report series lengths differ");
    }
    for (const json& e : doc.at("events")) r.events.push_back(parse_event(e));
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  return r;
}

SimResult load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExecutionError("cannot open report " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str(), path.string());
}

}  // namespace hnet
