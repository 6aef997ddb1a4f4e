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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hnet/bitwidth.hpp"
#include "hnet/netgraph.hpp"

namespace hnet {

// One value per precision, indexed by BitWidth.
struct PrecisionTable {
  std::array<double, 3> v{};

  double& operator[](BitWidth bw) { return v[static_cast<int>(bw)]; }
  double operator[](BitWidth bw) const { return v[static_cast<int>(bw)]; }
  friend bool operator==(const PrecisionTable&, const PrecisionTable&) = default;
};

inline constexpr double kDefaultKappa = 1.2;

struct HardwareProfile {
  PrecisionTable e_mac;      // J per MAC
  PrecisionTable delay_mac;  // s per MAC
  double f_max = 1.0;        // frames per second the rate threshold sustains
  double kappa_rate = kDefaultKappa;
  double kappa_energy = kDefaultKappa;

  // Strictly positive entries, ordered Q4 <= Q8 <= FP32, kappas >= 1.
  void validate() const;
  // Average power while computing at bw.
  double power(BitWidth bw) const { return e_mac[bw] / delay_mac[bw]; }
};

struct SchedulerThresholds {
  double r_th1 = 0.0;  // W; Q8 at or above
  double r_th2 = 0.0;  // W; FP32 at or above
  PrecisionTable e_th; // J needed to reach the next exit, per precision

  void validate() const;
};

struct EnergyState {
  double e_sys = 0.0;  // J stored
  double r_c = 0.0;    // W harvested
  double e_cap = 0.0;  // J capacity

  void validate() const;
};

// kappa * f_max * n_mac * e_mac; every argument must be positive.
double compute_rate_threshold(double kappa, double f_max, double n_mac,
                              double e_mac);

// FP32 if r_c >= r_th2, Q8 if r_th1 <= r_c < r_th2, Q4 below r_th1.
BitWidth select_precision(double r_c, const SchedulerThresholds& t);

// kappa * e_mac * max(n1, n2, n3) over the per-segment MAC counts.
double compute_energy_threshold(double kappa, double e_mac, double n1,
                                double n2, double n3);

enum class ExitAction { Continue, TerminateHere };
enum class GateAction { Start, Wait };

// Continue iff e_sys >= e_th.
ExitAction decide_at_exit(double e_sys, double e_th);
// Start iff e_sys >= e_th.
GateAction start_gate(double e_sys, double e_th);

// Rate thresholds use the full-network MAC count with the Q8 (r_th1) and
// FP32 (r_th2) per-MAC energies. Energy thresholds use each precision's
// per-MAC energy and the largest segment_work_macs of the network.
SchedulerThresholds derive_thresholds(const HardwareProfile& hw,
                                      const MultiExitNetwork& net);
SchedulerThresholds derive_thresholds(const HardwareProfile& hw,
                                      std::uint64_t total_macs,
                                      const std::array<std::uint64_t, 3>& segment_macs);

// Holds the precision chosen at Start until the inference finishes.
class PrecisionLatch {
 public:
  // Selects a precision from r_c and starts if the gate opens.
  std::optional<BitWidth> try_start(double r_c, double e_sys,
                                    const SchedulerThresholds& t);
  bool active() const { return active_.has_value(); }
  BitWidth precision() const;
  void release() { active_.reset(); }

 private:
  std::optional<BitWidth> active_;
};

// Simulation knobs carried alongside the scheduler settings.
struct SimulationSettings {
  double dt = 1e-3;
  double e_cap = 1.0;
  double e_init = 0.0;
  std::uint64_t input_seed = 1;
};

// Scheduler configuration file (JSON):
//   { "e_mac": {"fp32": J, "q8": J, "q4": J},
//     "delay_mac": {"fp32": s, "q8": s, "q4": s},
//     "f_max": fps, "kappa_rate": k, "kappa_energy": k,
//     "overrides": {"r_th1": W, "r_th2": W, "e_th": {"fp32": J, ...}},
//     "simulation": {"dt": s, "e_cap": J, "e_init": J, "input_seed": n} }
// Unknown keys are rejected by name.
struct SchedulerConfig {
  HardwareProfile hardware;
  std::optional<double> r_th1;
  std::optional<double> r_th2;
  std::array<std::optional<double>, 3> e_th;
  SimulationSettings simulation;

  SchedulerThresholds resolve(const MultiExitNetwork& net) const;
};

SchedulerConfig parse_scheduler_config(const std::string& text,
                                       const std::string& source = "<config>");
SchedulerConfig load_scheduler_config(const std::filesystem::path& path);
std::string format_scheduler_config(const SchedulerConfig& c);

}  // namespace hnet
