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

#include "hnet/eats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hnet/error.hpp"
#include "json.hpp"

namespace hnet {

using nlohmann::json;

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(what) + " must be positive and finite");
  }
}

void require_ordered(const PrecisionTable& t, const char* what) {
  for (BitWidth bw : kAllBitWidths) {
    require_positive(t[bw], (std::string(what) + "[" +
                             std::string(to_string(bw)) + "]").c_str());
  }
  if (!(t[BitWidth::Q4] <= t[BitWidth::Q8] && t[BitWidth::Q8] <= t[BitWidth::FP32])) {
    throw ValidationError(std::string(what) + " must satisfy q4 <= q8 <= fp32");
  }
}

}  // namespace

void HardwareProfile::validate() const {
  require_ordered(e_mac, "e_mac");
  require_ordered(delay_mac, "delay_mac");
  require_positive(f_max, "f_max");
  if (!(kappa_rate >= 1.0)) throw ValidationError("kappa_rate must be >= 1");
  if (!(kappa_energy >= 1.0)) throw ValidationError("kappa_energy must be >= 1");
}

void SchedulerThresholds::validate() const {
  require_positive(r_th1, "r_th1");
  require_positive(r_th2, "r_th2");
  if (!(r_th1 < r_th2)) throw ValidationError("r_th1 must be below r_th2");
  require_ordered(e_th, "e_th");
}

void EnergyState::validate() const {
  if (!(e_cap >= 0.0)) throw ValidationError("capacitor capacity must be >= 0");
  if (!(e_sys >= 0.0 && e_sys <= e_cap)) {
    throw ValidationError("stored energy must lie in [0, e_cap]");
  }
  if (!(r_c >= 0.0)) throw ValidationError("charging rate must be >= 0");
}

double compute_rate_threshold(double kappa, double f_max, double n_mac,
                              double e_mac) {
  require_positive(kappa, "kappa");
  require_positive(f_max, "f_max");
  require_positive(n_mac, "n_mac");
  require_positive(e_mac, "e_mac");
  return kappa * f_max * n_mac * e_mac;
}

BitWidth select_precision(double r_c, const SchedulerThresholds& t) {
  if (!(r_c >= 0.0)) throw ValidationError("charging rate must be >= 0");
  if (!(t.r_th1 < t.r_th2)) throw ValidationError("r_th1 must be below r_th2");
  if (r_c >= t.r_th2) return BitWidth::FP32;
  if (r_c >= t.r_th1) return BitWidth::Q8;
  return BitWidth::Q4;
}

double compute_energy_threshold(double kappa, double e_mac, double n1,
                                double n2, double n3) {
  require_positive(kappa, "kappa");
  require_positive(e_mac, "e_mac");
  require_positive(n1, "n1");
  require_positive(n2, "n2");
  require_positive(n3, "n3");
  return kappa * e_mac * std::max({n1, n2, n3});
}

ExitAction decide_at_exit(double e_sys, double e_th) {
  return e_sys >= e_th ? ExitAction::Continue : ExitAction::TerminateHere;
}

GateAction start_gate(double e_sys, double e_th) {
  return e_sys >= e_th ? GateAction::Start : GateAction::Wait;
}

SchedulerThresholds derive_thresholds(
    const HardwareProfile& hw, std::uint64_t total_macs,
    const std::array<std::uint64_t, 3>& segment_macs) {
  hw.validate();
  SchedulerThresholds t;
  const auto n = static_cast<double>(total_macs);
  t.r_th1 = compute_rate_threshold(hw.kappa_rate, hw.f_max, n, hw.e_mac[BitWidth::Q8]);
  t.r_th2 = compute_rate_threshold(hw.kappa_rate, hw.f_max, n, hw.e_mac[BitWidth::FP32]);
  for (BitWidth bw : kAllBitWidths) {
    t.e_th[bw] = compute_energy_threshold(
        hw.kappa_energy, hw.e_mac[bw], static_cast<double>(segment_macs[0]),
        static_cast<double>(segment_macs[1]), static_cast<double>(segment_macs[2]));
  }
  return t;
}

SchedulerThresholds derive_thresholds(const HardwareProfile& hw,
                                      const MultiExitNetwork& net) {
  return derive_thresholds(hw, count_macs(net, kNumExits),
                           {segment_work_macs(net, 1), segment_work_macs(net, 2),
                            segment_work_macs(net, 3)});
}

std::optional<BitWidth> PrecisionLatch::try_start(double r_c, double e_sys,
                                                  const SchedulerThresholds& t) {
  if (active_) throw ExecutionError("inference already running");
  const BitWidth bw = select_precision(r_c, t);
  if (start_gate(e_sys, t.e_th[bw]) == GateAction::Wait) return std::nullopt;
  active_ = bw;
  return bw;
}

BitWidth PrecisionLatch::precision() const {
  if (!active_) throw ExecutionError("no inference running");
  return *active_;
}

SchedulerThresholds SchedulerConfig::resolve(const MultiExitNetwork& net) const {
  SchedulerThresholds t = derive_thresholds(hardware, net);
  if (r_th1) t.r_th1 = *r_th1;
  if (r_th2) t.r_th2 = *r_th2;
  for (BitWidth bw : kAllBitWidths) {
    if (e_th[static_cast<int>(bw)]) t.e_th[bw] = *e_th[static_cast<int>(bw)];
  }
  t.validate();
  return t;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError("unknown config key '" + where + key + "'");
    }
  }
}

PrecisionTable read_table(const json& obj, const std::string& where) {
  check_keys(obj, {"fp32", "q8", "q4"}, where + ".");
  PrecisionTable t;
  for (BitWidth bw : kAllBitWidths) {
    const std::string k(to_string(bw));
    if (!obj.contains(k)) throw ValidationError("missing config key '" + where + "." + k + "'");
    t[bw] = obj.at(k).get<double>();
  }
  return t;
}

json write_table(const PrecisionTable& t) {
  json j = json::object();
  for (BitWidth bw : kAllBitWidths) j[std::string(to_string(bw))] = t[bw];
  return j;
}

}  // namespace

SchedulerConfig parse_scheduler_config(const std::string& text,
                                       const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  SchedulerConfig c;
  try {
    check_keys(doc, {"format", "version", "e_mac", "delay_mac", "f_max",
                     "kappa_rate", "kappa_energy", "overrides", "simulation",
                     "fit"},
               "");
    HardwareProfile& hw = c.hardware;
    if (!doc.contains("e_mac")) throw ValidationError("missing config key 'e_mac'");
    if (!doc.contains("delay_mac")) throw ValidationError("missing config key 'delay_mac'");
    hw.e_mac = read_table(doc["e_mac"], "e_mac");
    hw.delay_mac = read_table(doc["delay_mac"], "delay_mac");
    hw.f_max = doc.value("f_max", 1.0);
    hw.kappa_rate = doc.value("kappa_rate", kDefaultKappa);
    hw.kappa_energy = doc.value("kappa_energy", kDefaultKappa);
    if (doc.contains("overrides")) {
      const json& o = doc["overrides"];
      check_keys(o, {"r_th1", "r_th2", "e_th"}, "overrides.");
      if (o.contains("r_th1")) c.r_th1 = o["r_th1"].get<double>();
      if (o.contains("r_th2")) c.r_th2 = o["r_th2"].get<double>();
      if (o.contains("e_th")) {
        check_keys(o["e_th"], {"fp32", "q8", "q4"}, "overrides.e_th.");
        for (BitWidth bw : kAllBitWidths) {
          const std::string k(to_string(bw));
          if (o["e_th"].contains(k)) {
            c.e_th[static_cast<int>(bw)] = o["e_th"][k].get<double>();
          }
        }
      }
    }
    if (doc.contains("simulation")) {
      const json& s = doc["simulation"];
      check_keys(s, {"dt", "e_cap", "e_init", "input_seed"}, "simulation.");
      c.simulation.dt = s.value("dt", c.simulation.dt);
      c.simulation.e_cap = s.value("e_cap", c.simulation.e_cap);
      c.simulation.e_init = s.value("e_init", c.simulation.e_init);
      c.simulation.input_seed = s.value("input_seed", c.simulation.input_seed);
    }
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  c.hardware.validate();
  return c;
}

SchedulerConfig load_scheduler_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ExecutionError("cannot open scheduler config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scheduler_config(ss.str(), path.string());
}

std::string format_scheduler_config(const SchedulerConfig& c) {
  json doc = {{"format", "hnet-scheduler"},
              {"version", 1},
              {"e_mac", write_table(c.hardware.e_mac)},
              {"delay_mac", write_table(c.hardware.delay_mac)},
              {"f_max", c.hardware.f_max},
              {"kappa_rate", c.hardware.kappa_rate},
              {"kappa_energy", c.hardware.kappa_energy},
              {"simulation",
               {{"dt", c.simulation.dt},
                {"e_cap", c.simulation.e_cap},
                {"e_init", c.simulation.e_init},
                {"input_seed", c.simulation.input_seed}}}};
  json o = json::object();
  if (c.r_th1) o["r_th1"] = *c.r_th1;
  if (c.r_th2) o["r_th2"] = *c.r_th2;
  json eth = json::object();
  for (BitWidth bw : kAllBitWidths) {
    if (c.e_th[static_cast<int>(bw)]) {
      eth[std::string(to_string(bw))] = *c.e_th[static_cast<int>(bw)];
    }
  }
  if (!eth.empty()) o["e_th"] = eth;
  if (!o.empty()) doc["overrides"] = o;
  return doc.dump(2) + "\n";
}

}  // namespace hnet
