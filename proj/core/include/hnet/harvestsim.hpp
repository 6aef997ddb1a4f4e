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
#include <optional>
#include <string>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/eats.hpp"
#include "hnet/exitpolicy.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/tensor.hpp"
#include "hnet/weights.hpp"

namespace hnet {

struct TraceSample {
  double t = 0.0;    // s
  double r_c = 0.0;  // W
};

// Charging-rate samples with strictly increasing timestamps.
struct HarvestTrace {
  std::vector<TraceSample> samples;

  void validate() const;
  double start() const { return samples.front().t; }
  double end() const { return samples.back().t; }
  // Linear interpolation; held constant outside the sampled interval.
  double rate_at(double t) const;
};

// Rows "t_seconds,charge_rate_watts"; an optional non-numeric header line
// and blank or '#' lines are skipped.
HarvestTrace parse_trace(const std::string& text,
                         const std::string& source = "<trace>");
HarvestTrace load_trace(const std::filesystem::path& path);
std::string format_trace(const HarvestTrace& trace);

enum class TraceKind { Sinusoid, Step, Constant };
TraceKind parse_trace_kind(const std::string& text);

struct SynthParams {
  double offset = 0.0;     // sinusoid
  double amplitude = 0.0;  // sinusoid
  double period = 1.0;     // sinusoid, s
  std::vector<double> levels;  // step: equal-length plateaus in order
  double value = 0.0;      // constant
};

// Samples every dt over [0, duration]. Sinusoids are clamped at zero.
HarvestTrace synth_trace(TraceKind kind, const SynthParams& params,
                         double duration, double dt);

struct EnergyStep {
  EnergyState state;
  bool depleted = false;      // demand exceeded stored plus harvested energy
  bool clamped_full = false;  // harvest discarded at capacity
};

// e' = clamp(e + r_c*dt - consumption, 0, e_cap).
EnergyStep step_energy(const EnergyState& state, double r_c,
                       double consumption_j, double dt);

enum class EventKind {
  PowerOn,
  StartInference,
  ExitTaken,
  PowerOff,
  PrecisionLevelChange,
  EnergyDepletedMidSegment,
};
std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::PowerOn;
  int inference = -1;                  // index of the inference, if any
  std::optional<BitWidth> precision;   // StartInference, PrecisionLevelChange
  int exit = 0;                        // ExitTaken, EnergyDepletedMidSegment
  ExitReason reason = ExitReason::Confidence;  // ExitTaken
  double confidence = 0.0;             // ExitTaken
  int predicted_class = -1;            // ExitTaken

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

// Exit markers in the exits series.
inline constexpr int kMarkerNone = 0;
inline constexpr int kMarkerDepleted = 4;
// +e for a confidence exit at e, -e for an energy exit at e.
inline int exit_marker(int exit, ExitReason reason) {
  return reason == ExitReason::Confidence ? exit : -exit;
}

struct SimSeries {
  std::vector<double> time;
  std::vector<double> rate;
  std::vector<std::optional<BitWidth>> precision;  // active precision or idle
  std::vector<double> energy;
  std::vector<int> exits;
};

struct SimConfig {
  double dt = 1e-3;
  double e_cap = 1.0;
  double e_init = 0.0;
  HardwareProfile hardware;
  SchedulerThresholds thresholds;
  std::map<BitWidth, ExitThresholds> exit_thresholds;  // missing -> FP32 entry
  std::uint64_t input_seed = 1;
  std::vector<Tensor> inputs;  // cycled if non-empty, else N(0,1) inputs

  void validate() const;
};

struct SimResult {
  double dt = 0.0;
  double e_cap = 0.0;
  SchedulerThresholds thresholds;
  std::vector<SimEvent> events;
  SimSeries series;
  // Not exported: per-step demand and clamp flags for invariant checks.
  std::vector<double> consumption;
  std::vector<std::uint8_t> clamped;
};

// Steps the charge/compute loop every dt from the trace start to its end.
SimResult run_simulation(const SimConfig& config, const MultiExitNetwork& net,
                         const WeightSet& weights, const HarvestTrace& trace);

// Report file (JSON) with the series time/rate/precision/energy/exits and
// the event log.
std::string format_report(const SimResult& result);
void export_report(const SimResult& result, const std::filesystem::path& path);
SimResult parse_report(const std::string& text,
                       const std::string& source = "<report>");
SimResult load_report(const std::filesystem::path& path);

struct SimSummary {
  std::size_t inferences = 0;
  std::array<std::size_t, kNumExits> confidence_exits{};
  std::array<std::size_t, kNumExits> energy_exits{};
  std::size_t depleted = 0;
  std::array<std::size_t, 3> starts_by_precision{};  // indexed by BitWidth
};
SimSummary summarize(const SimResult& result);

}  // namespace hnet
