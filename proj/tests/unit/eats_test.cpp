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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hnet/eats.hpp"
#include "hnet/error.hpp"
#include "hnet/harvestsim.hpp"
#include "fixtures.hpp"

namespace hnet {
namespace {

SchedulerThresholds thresholds(double r1, double r2) {
  SchedulerThresholds t;
  t.r_th1 = r1;
  t.r_th2 = r2;
  t.e_th[BitWidth::Q4] = 1.0;
  t.e_th[BitWidth::Q8] = 2.0;
  t.e_th[BitWidth::FP32] = 4.0;
  return t;
}

TEST(RateThreshold, HandProduct) {
  EXPECT_NEAR(compute_rate_threshold(1, 1, 1e6, 1e-9), 1e-3, 1e-18);
  EXPECT_EQ(compute_rate_threshold(2, 1, 1e6, 1e-9),
            2 * compute_rate_threshold(1, 1, 1e6, 1e-9));
}

TEST(RateThreshold, RejectsNonPositive) {
  EXPECT_THROW(compute_rate_threshold(0, 1, 1, 1), ValidationError);
  EXPECT_THROW(compute_rate_threshold(1, 0, 1, 1), ValidationError);
  EXPECT_THROW(compute_rate_threshold(1, 1, 0, 1), ValidationError);
  EXPECT_THROW(compute_rate_threshold(1, 1, 1, -1), ValidationError);
}

TEST(EnergyThreshold, SegmentCountsFromCumulativeMacs) {
  const double n1 = 4.02e7;
  const double n2 = 7.37e7 - 4.02e7;
  const double n3 = 1.41e8 - 7.37e7;
  EXPECT_NEAR(n2, 3.35e7, 1e-6);
  EXPECT_NEAR(n3, 6.73e7, 1e-6);
  EXPECT_EQ(compute_energy_threshold(1, 1e-9, 4.02e7, 3.35e7, 6.73e7), 1e-9 * 6.73e7);
  EXPECT_NEAR(compute_energy_threshold(1, 1e-9, n1, n2, n3), 6.73e-2, 1e-15);
}

TEST(EnergyThreshold, MaxSymmetryAndEqualSegments) {
  EXPECT_EQ(compute_energy_threshold(1.5, 2e-9, 5, 5, 5), 1.5 * 2e-9 * 5);
  const double a = compute_energy_threshold(1.2, 1e-9, 1, 2, 3);
  EXPECT_EQ(compute_energy_threshold(1.2, 1e-9, 3, 1, 2), a);
  EXPECT_EQ(compute_energy_threshold(1.2, 1e-9, 2, 3, 1), a);
  EXPECT_THROW(compute_energy_threshold(1, 1e-9, 0, 1, 1), ValidationError);
}

TEST(ThresholdScaling, HomogeneousOfDegreeOne) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  for (int i = 0; i < 1000; ++i) {
    std::array<double, 4> r{u(rng), u(rng), u(rng) * 1e6, u(rng) * 1e-9};
    const double base = compute_rate_threshold(r[0], r[1], r[2], r[3]);
    for (int k = 0; k < 4; ++k) {
      auto d = r;
      d[k] *= 2;
      EXPECT_DOUBLE_EQ(compute_rate_threshold(d[0], d[1], d[2], d[3]), 2 * base);
    }
    std::array<double, 5> e{u(rng), u(rng) * 1e-9, u(rng), u(rng), u(rng)};
    const double eb = compute_energy_threshold(e[0], e[1], e[2], e[3], e[4]);
    for (int k = 0; k < 2; ++k) {
      auto d = e;
      d[k] *= 2;
      EXPECT_DOUBLE_EQ(compute_energy_threshold(d[0], d[1], d[2], d[3], d[4]), 2 * eb);
    }
    // Doubling every segment count doubles the max.
    EXPECT_DOUBLE_EQ(compute_energy_threshold(e[0], e[1], 2 * e[2], 2 * e[3], 2 * e[4]),
                     2 * eb);
  }
}

TEST(SelectPrecision, Boundaries) {
  const SchedulerThresholds t = thresholds(2, 5);
  EXPECT_EQ(select_precision(5, t), BitWidth::FP32);
  EXPECT_EQ(select_precision(2, t), BitWidth::Q8);
  EXPECT_EQ(select_precision(1.9, t), BitWidth::Q4);
  EXPECT_EQ(select_precision(4.999, t), BitWidth::Q8);
  EXPECT_EQ(select_precision(0, t), BitWidth::Q4);
  EXPECT_THROW(select_precision(-1, t), ValidationError);
  EXPECT_THROW(select_precision(1, thresholds(5, 2)), ValidationError);
}

TEST(SelectPrecision, MonotoneOverRandomDraws) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    double r1 = u(rng);
    double r2 = u(rng);
    if (r1 == r2) continue;
    if (r1 > r2) std::swap(r1, r2);
    const SchedulerThresholds t = thresholds(r1, r2);
    double a = u(rng);
    double b = u(rng);
    if (a > b) std::swap(a, b);
    EXPECT_LE(select_precision(a, t), select_precision(b, t));
  }
}

TEST(Decisions, EnergyBoundaries) {
  EXPECT_EQ(decide_at_exit(3.0, 3.0), ExitAction::Continue);
  EXPECT_EQ(decide_at_exit(0.0, 3.0), ExitAction::TerminateHere);
  EXPECT_EQ(decide_at_exit(6.0, 3.0), ExitAction::Continue);
  EXPECT_EQ(start_gate(2.9, 3.0), GateAction::Wait);
  EXPECT_EQ(start_gate(3.0, 3.0), GateAction::Start);
}

TEST(Latch, HoldsPrecisionUntilRelease) {
  const SchedulerThresholds t = thresholds(2, 5);
  PrecisionLatch latch;
  EXPECT_FALSE(latch.try_start(6.0, 3.9, t).has_value());  // FP32 needs 4 J
  const auto p = latch.try_start(6.0, 4.0, t);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(*p, BitWidth::FP32);
  EXPECT_EQ(latch.precision(), BitWidth::FP32);
  EXPECT_THROW(latch.try_start(0.0, 10.0, t), ExecutionError);
  EXPECT_EQ(latch.precision(), BitWidth::FP32);
  latch.release();
  EXPECT_FALSE(latch.active());
  EXPECT_EQ(*latch.try_start(0.0, 1.0, t), BitWidth::Q4);
}

TEST(DeriveThresholds, BindsPrecisions) {
  HardwareProfile hw;
  hw.e_mac[BitWidth::FP32] = 1e-9;
  hw.e_mac[BitWidth::Q8] = 2e-10;
  hw.e_mac[BitWidth::Q4] = 1e-10;
  hw.delay_mac = hw.e_mac;
  hw.f_max = 2.0;
  const SchedulerThresholds t = derive_thresholds(hw, 1000, {300, 500, 200});
  EXPECT_DOUBLE_EQ(t.r_th1, 1.2 * 2.0 * 1000 * 2e-10);
  EXPECT_DOUBLE_EQ(t.r_th2, 1.2 * 2.0 * 1000 * 1e-9);
  EXPECT_DOUBLE_EQ(t.e_th[BitWidth::FP32], 1.2 * 1e-9 * 500);
  EXPECT_DOUBLE_EQ(t.e_th[BitWidth::Q4], 1.2 * 1e-10 * 500);
  EXPECT_LE(t.e_th[BitWidth::Q4], t.e_th[BitWidth::Q8]);
  EXPECT_LE(t.e_th[BitWidth::Q8], t.e_th[BitWidth::FP32]);
}

TEST(HardwareProfile, RejectsMisordered) {
  HardwareProfile hw;
  hw.e_mac[BitWidth::FP32] = 1e-9;
  hw.e_mac[BitWidth::Q8] = 2e-9;
  hw.e_mac[BitWidth::Q4] = 1e-10;
  hw.delay_mac[BitWidth::FP32] = 1;
  hw.delay_mac[BitWidth::Q8] = 1;
  hw.delay_mac[BitWidth::Q4] = 1;
  EXPECT_THROW(hw.validate(), ValidationError);
  hw.e_mac[BitWidth::Q8] = 5e-10;
  EXPECT_NO_THROW(hw.validate());
  hw.kappa_energy = 0.9;
  EXPECT_THROW(hw.validate(), ValidationError);
}

TEST(SchedulerConfig, RoundTripAndOverrides) {
  SchedulerConfig c;
  c.hardware.e_mac[BitWidth::FP32] = 1e-9;
  c.hardware.e_mac[BitWidth::Q8] = 1.25e-10;
  c.hardware.e_mac[BitWidth::Q4] = 6e-11;
  c.hardware.delay_mac[BitWidth::FP32] = 1e-8;
  c.hardware.delay_mac[BitWidth::Q8] = 1.7e-9;
  c.hardware.delay_mac[BitWidth::Q4] = 8.5e-10;
  c.hardware.f_max = 10;
  const MultiExitNetwork net = fixtures::make_sim_rig().net;
  const double q4_override = 0.5 * derive_thresholds(c.hardware, net).e_th[BitWidth::Q4];
  c.r_th2 = 0.5;
  c.e_th[static_cast<int>(BitWidth::Q4)] = q4_override;
  c.simulation.e_cap = 0.01;
  const SchedulerConfig back = parse_scheduler_config(format_scheduler_config(c));
  EXPECT_EQ(back.hardware.e_mac, c.hardware.e_mac);
  EXPECT_EQ(back.hardware.delay_mac, c.hardware.delay_mac);
  EXPECT_EQ(back.r_th2, c.r_th2);
  EXPECT_FALSE(back.r_th1.has_value());
  EXPECT_EQ(back.e_th, c.e_th);
  EXPECT_EQ(back.simulation.e_cap, 0.01);

  const SchedulerThresholds t = back.resolve(net);
  EXPECT_EQ(t.r_th2, 0.5);
  EXPECT_EQ(t.e_th[BitWidth::Q4], q4_override);
  EXPECT_EQ(t.e_th[BitWidth::FP32], derive_thresholds(back.hardware, net).e_th[BitWidth::FP32]);
}

TEST(SchedulerConfig, UnknownKeyIsNamed) {
  const std::string text =
      R"({"e_mac": {"fp32": 1e-9, "q8": 1e-10, "q4": 5e-11},
          "delay_mac": {"fp32": 1e-8, "q8": 2e-9, "q4": 1e-9},
          "kapa": 2})";
  try {
    parse_scheduler_config(text);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("kapa"), std::string::npos);
  }
  EXPECT_THROW(parse_scheduler_config("{"), ParseError);
  EXPECT_THROW(parse_scheduler_config("{}"), ValidationError);
}

TEST(Latching, HoldsOnSimulatedRuns) {
  const fixtures::SimRig rig = fixtures::make_sim_rig();
  for (const HarvestTrace& trace :
       {fixtures::step_trace(rig.thr), fixtures::crash_trace(rig.thr)}) {
    const SimConfig cfg = fixtures::make_sim_config(rig, 0.05, 0.0, {{0.4, 0.4, 0}});
    const SimResult r = run_simulation(cfg, rig.net, rig.weights, trace);
    std::optional<BitWidth> active;
    int starts = 0;
    for (std::size_t i = 0, ev = 0; i < r.series.time.size(); ++i) {
      while (ev < r.events.size() && r.events[ev].time <= r.series.time[i]) {
        const SimEvent& e = r.events[ev++];
        if (e.kind == EventKind::StartInference) {
          active = e.precision;
          ++starts;
        }
      }
      if (r.series.precision[i]) {
        ASSERT_TRUE(active.has_value());
        EXPECT_EQ(*r.series.precision[i], *active);
      }
      if (r.series.exits[i] != kMarkerNone) active.reset();
    }
    EXPECT_GT(starts, 0);
  }
}

}  // namespace
}  // namespace hnet
