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

#include "hnet/costmodel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hnet/error.hpp"

namespace hnet {

StageCost stage_cost(std::uint64_t macs, int exit, BitWidth bw,
                     const HardwareProfile& profile) {
  profile.validate();
  StageCost c;
  c.exit = exit;
  c.precision = bw;
  c.macs = macs;
  c.delay = static_cast<double>(macs) * profile.delay_mac[bw];
  const double energy = static_cast<double>(macs) * profile.e_mac[bw];
  c.power = c.delay > 0.0 ? energy / c.delay : 0.0;
  c.pdp = c.power * c.delay;
  return c;
}

StageCost stage_cost(const MultiExitNetwork& net, int exit, BitWidth bw,
                     const HardwareProfile& profile) {
  return stage_cost(count_macs(net, exit), exit, bw, profile);
}

std::string exit_label(int exit) {
  switch (exit) {
    case 1: return "EE1";
    case 2: return "EE2";
    case 3: return "ME";
  }
  return "E" + std::to_string(exit);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

bool to_double(const std::string& s, double& v) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

int parse_exit(const std::string& s) {
  if (s == "EE1" || s == "ee1" || s == "1") return 1;
  if (s == "EE2" || s == "ee2" || s == "2") return 2;
  if (s == "ME" || s == "me" || s == "3") return 3;
  return 0;
}

}  // namespace

CalibrationTable parse_calibration_table(const std::string& text,
                                         const std::string& source) {
  CalibrationTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells[0] == "macs") {
      if (cells.size() != 4) throw ParseError(source, line_no, "macs line needs three counts");
      std::array<std::uint64_t, kNumExits> m{};
      for (int e = 0; e < kNumExits; ++e) {
        double v = 0.0;
        if (!to_double(cells[e + 1], v) || v <= 0.0) {
          throw ParseError(source, line_no, "bad MAC count '" + cells[e + 1] + "'");
        }
        m[e] = static_cast<std::uint64_t>(std::llround(v));
      }
      table.exit_macs = m;
      header_allowed = false;
      continue;
    }
    if (cells[0] == "exit") continue;  // column header
    const int exit = parse_exit(cells[0]);
    if (exit == 0) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw ParseError(source, line_no, "unknown exit '" + cells[0] + "'");
    }
    header_allowed = false;
    if (cells.size() != 4 && cells.size() != 5) {
      throw ParseError(source, line_no, "expected exit,precision,power,delay[,pdp]");
    }
    CalibrationRow row;
    row.exit = exit;
    row.line = line_no;
    try {
      row.precision = parse_bitwidth(cells[1]);
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
    if (!to_double(cells[2], row.power) || row.power <= 0.0) {
      throw ParseError(source, line_no, "bad power '" + cells[2] + "'");
    }
    if (!to_double(cells[3], row.delay) || row.delay <= 0.0) {
      throw ParseError(source, line_no, "bad delay '" + cells[3] + "'");
    }
    if (cells.size() == 5) {
      double pdp = 0.0;
      if (!to_double(cells[4], pdp) || pdp <= 0.0) {
        throw ParseError(source, line_no, "bad pdp '" + cells[4] + "'");
      }
      row.pdp = pdp;
    }
    table.rows.push_back(row);
  }
  if (table.rows.empty()) throw ParseError(source, line_no, "no calibration rows");
  return table;
}

CalibrationTable load_calibration_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExecutionError("cannot open calibration table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_calibration_table(ss.str(), path.string());
}

ProfileFit calibrate_profile(const std::vector<CalibrationRow>& rows,
                             const std::array<std::uint64_t, kNumExits>& exit_macs,
                             double delay_unit_s) {
  if (!(delay_unit_s > 0.0)) throw ValidationError("delay unit must be positive");
  for (std::uint64_t m : exit_macs) {
    if (m == 0) throw ValidationError("exit MAC counts must be positive");
  }
  for (const CalibrationRow& r : rows) {
    if (r.pdp) {
      const double rel = std::abs(r.power * r.delay - *r.pdp) / *r.pdp;
      if (rel > kPdpUnitTolerance) {
        throw ValidationError("inconsistent units on table line " +
                              std::to_string(r.line) + ": power*delay differs from pdp by " +
                              std::to_string(100.0 * rel) + "%");
      }
    }
  }

  ProfileFit fit;
  fit.delay_unit_s = delay_unit_s;
  for (BitWidth bw : kAllBitWidths) {
    double nn = 0.0;
    double nd = 0.0;
    double ne = 0.0;
    int count = 0;
    for (const CalibrationRow& r : rows) {
      if (r.precision != bw) continue;
      const auto n = static_cast<double>(exit_macs[r.exit - 1]);
      const double d = r.delay * delay_unit_s;
      nn += n * n;
      nd += n * d;
      ne += n * (r.power * d);
      ++count;
    }
    if (count == 0) {
      throw ValidationError("calibration table has no " +
                            std::string(to_string(bw)) + " rows");
    }
    fit.profile.delay_mac[bw] = nd / nn;
    fit.profile.e_mac[bw] = ne / nn;
  }

  for (BitWidth bw : kAllBitWidths) {
    PrecisionCost c;
    c.packing_factor = static_cast<int>(std::lround(
        fit.profile.delay_mac[BitWidth::FP32] / fit.profile.delay_mac[bw]));
    c.packing_factor = std::max(c.packing_factor, 1);
    c.cycle_time = fit.profile.delay_mac[bw] * c.packing_factor;
    c.power_per_slice = fit.profile.e_mac[bw] / fit.profile.delay_mac[bw];
    fit.costs[bw] = c;
  }

  for (const CalibrationRow& r : rows) {
    RowFit rf;
    rf.row = r;
    rf.macs = exit_macs[r.exit - 1];
    const auto n = static_cast<double>(rf.macs);
    const double d = r.delay * delay_unit_s;
    rf.fitted_delay = n * fit.profile.delay_mac[r.precision];
    rf.fitted_energy = n * fit.profile.e_mac[r.precision];
    rf.delay_residual = (rf.fitted_delay - d) / d;
    rf.energy_residual = (rf.fitted_energy - r.power * d) / (r.power * d);
    rf.power_residual = (rf.fitted_energy / rf.fitted_delay - r.power) / r.power;
    fit.rows.push_back(rf);
  }
  fit.profile.validate();
  return fit;
}

double reduction_percent(double baseline, double value) {
  if (!(baseline > 0.0)) throw ValidationError("reduction baseline must be positive");
  return 100.0 * (1.0 - value / baseline);
}

std::vector<Reduction> reduction_from_rows(const std::vector<CalibrationRow>& rows) {
  std::vector<Reduction> out;
  for (const CalibrationRow& r : rows) {
    const CalibrationRow* base = nullptr;
    for (const CalibrationRow& b : rows) {
      if (b.exit == r.exit && b.precision == BitWidth::FP32) base = &b;
    }
    if (!base) continue;
    const double base_pdp = base->pdp.value_or(base->power * base->delay);
    const double pdp = r.pdp.value_or(r.power * r.delay);
    out.push_back({r.exit, r.precision, reduction_percent(base->power, r.power),
                   reduction_percent(base->delay, r.delay),
                   reduction_percent(base_pdp, pdp)});
  }
  return out;
}

std::vector<Reduction> reduction_report(const HardwareProfile& profile,
                                        const MultiExitNetwork& net) {
  std::vector<Reduction> out;
  for (int e = 1; e <= kNumExits; ++e) {
    const StageCost base = stage_cost(net, e, BitWidth::FP32, profile);
    for (BitWidth bw : kAllBitWidths) {
      const StageCost c = stage_cost(net, e, bw, profile);
      out.push_back({e, bw, reduction_percent(base.power, c.power),
                     reduction_percent(base.delay, c.delay),
                     reduction_percent(base.pdp, c.pdp)});
    }
  }
  return out;
}

}  // namespace hnet
