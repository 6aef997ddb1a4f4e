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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/eats.hpp"
#include "hnet/netgraph.hpp"

namespace hnet {

// Per-precision DSP-slice view: packing_factor MACs share one slice cycle.
struct PrecisionCost {
  int packing_factor = 1;
  double power_per_slice = 0.0;  // W
  double cycle_time = 0.0;       // s per slice cycle

  double delay_mac() const { return cycle_time / packing_factor; }
  double e_mac() const { return power_per_slice * cycle_time / packing_factor; }
};

struct StageCost {
  int exit = 0;
  BitWidth precision = BitWidth::FP32;
  std::uint64_t macs = 0;
  double power = 0.0;
  double delay = 0.0;
  double pdp = 0.0;  // power * delay
};

// delay = macs * delay_mac, energy = macs * e_mac, power = energy / delay.
StageCost stage_cost(std::uint64_t macs, int exit, BitWidth bw,
                     const HardwareProfile& profile);
StageCost stage_cost(const MultiExitNetwork& net, int exit, BitWidth bw,
                     const HardwareProfile& profile);

// One measured stage: "exit,precision,power,delay[,pdp]".
struct CalibrationRow {
  int exit = 0;
  BitWidth precision = BitWidth::FP32;
  double power = 0.0;
  double delay = 0.0;
  std::optional<double> pdp;
  int line = 0;
};

struct CalibrationTable {
  std::vector<CalibrationRow> rows;
  // Cumulative MACs per exit, from an optional "macs,n1,n2,n3" line.
  std::optional<std::array<std::uint64_t, kNumExits>> exit_macs;
};

// Exit column accepts EE1/EE2/ME or 1/2/3. '#' lines and a header are
// skipped.
CalibrationTable parse_calibration_table(const std::string& text,
                                         const std::string& source = "<table>");
CalibrationTable load_calibration_table(const std::filesystem::path& path);

// Relative tolerance for the pdp == power * delay unit check.
inline constexpr double kPdpUnitTolerance = 0.02;

struct RowFit {
  CalibrationRow row;
  std::uint64_t macs = 0;
  double fitted_delay = 0.0;
  double fitted_energy = 0.0;
  double delay_residual = 0.0;   // relative
  double energy_residual = 0.0;  // relative, against power * delay
  double power_residual = 0.0;   // relative
};

struct ProfileFit {
  HardwareProfile profile;
  std::map<BitWidth, PrecisionCost> costs;
  std::vector<RowFit> rows;
  double delay_unit_s = 1.0;
};

// Least-squares fits through the origin, per precision:
//   delay = macs * delay_mac,  power * delay = macs * e_mac.
// Packing factors are round(delay_mac(fp32) / delay_mac(bw)). Delays are
// multiplied by delay_unit_s before fitting.
ProfileFit calibrate_profile(const std::vector<CalibrationRow>& rows,
                             const std::array<std::uint64_t, kNumExits>& exit_macs,
                             double delay_unit_s = 1.0);

struct Reduction {
  int exit = 0;
  BitWidth precision = BitWidth::FP32;
  double power_pct = 0.0;  // 100 * (1 - value / fp32 value)
  double delay_pct = 0.0;
  double pdp_pct = 0.0;
};

double reduction_percent(double baseline, double value);

// Measured reductions from table rows, each precision against the FP32 row
// of the same exit.
std::vector<Reduction> reduction_from_rows(const std::vector<CalibrationRow>& rows);
// Modeled reductions for every exit of `net` under `profile`.
std::vector<Reduction> reduction_report(const HardwareProfile& profile,
                                        const MultiExitNetwork& net);

std::string exit_label(int exit);

}  // namespace hnet
