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

#include <cmath>
#include <random>
#include <string>

#include "hnet/costmodel.hpp"
#include "hnet/error.hpp"

namespace hnet {
namespace {

const std::string kData = HNET_DATA_DIR;

CalibrationTable resnet() { return load_calibration_table(kData + "/artix7_resnet18_stages.csv"); }
CalibrationTable densenet() {
  return load_calibration_table(kData + "/artix7_densenet121_stages.csv");
}

const CalibrationRow& row(const CalibrationTable& t, int exit, BitWidth bw) {
  for (const CalibrationRow& r : t.rows) {
    if (r.exit == exit && r.precision == bw) return r;
  }
  throw std::runtime_error("row not found");
}

HardwareProfile simple_profile() {
  HardwareProfile p;
  p.e_mac[BitWidth::FP32] = 1e-9;
  p.e_mac[BitWidth::Q8] = 1.5e-10;
  p.e_mac[BitWidth::Q4] = 7e-11;
  p.delay_mac[BitWidth::FP32] = 2e-9;
  p.delay_mac[BitWidth::Q8] = 3e-10;
  p.delay_mac[BitWidth::Q4] = 1.5e-10;
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(StageCost, PdpIdentityAndLinearity) {
  const HardwareProfile p = simple_profile();
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::uint64_t> macs(1, 1'000'000'000);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t n = macs(rng);
    for (BitWidth bw : kAllBitWidths) {
      const StageCost a = stage_cost(n, 1, bw, p);
      EXPECT_EQ(a.pdp, a.power * a.delay);
      const StageCost b = stage_cost(2 * n, 1, bw, p);
      EXPECT_DOUBLE_EQ(b.delay, 2 * a.delay);
      EXPECT_DOUBLE_EQ(b.pdp, 2 * a.pdp);
      EXPECT_DOUBLE_EQ(b.power, a.power);
    }
    const StageCost f = stage_cost(n, 1, BitWidth::FP32, p);
    const StageCost q = stage_cost(n, 1, BitWidth::Q4, p);
    EXPECT_DOUBLE_EQ(f.delay / q.delay, p.delay_mac[BitWidth::FP32] / p.delay_mac[BitWidth::Q4]);
    EXPECT_DOUBLE_EQ(f.pdp / q.pdp, p.e_mac[BitWidth::FP32] / p.e_mac[BitWidth::Q4]);
  }
}

TEST(StageCost, ZeroMacs) {
  const StageCost c = stage_cost(0, 2, BitWidth::Q8, simple_profile());
  EXPECT_EQ(c.delay, 0.0);
  EXPECT_EQ(c.pdp, 0.0);
}

TEST(PrecisionCost, DerivedPerMacValues) {
  const PrecisionCost c{12, 3.0, 24e-9};
  EXPECT_DOUBLE_EQ(c.delay_mac(), 2e-9);
  EXPECT_DOUBLE_EQ(c.e_mac(), 6e-9);
}

TEST(Table, MeasuredPdpMatchesPowerTimesDelay) {
  // 3.28e1 W x 3.13e-1 = 10.27, published 1.03e1.
  EXPECT_NEAR(32.8 * 0.313, 10.2664, 1e-9);
  int rows = 0;
  for (const CalibrationTable& t : {resnet(), densenet()}) {
    ASSERT_EQ(t.rows.size(), 9u);
    ASSERT_TRUE(t.exit_macs.has_value());
    for (const CalibrationRow& r : t.rows) {
      ASSERT_TRUE(r.pdp.has_value());
      EXPECT_LT(rel(r.power * r.delay, *r.pdp), 0.015) << "line " << r.line;
      ++rows;
    }
  }
  EXPECT_EQ(rows, 18);
}

TEST(Table, ParsesExitAliasesAndComments) {
  const CalibrationTable t = parse_calibration_table(
      "# comment\n"
      "exit,precision,power,delay\n"
      "1,fp32,10,0.5\n"
      "ME,q4,1,0.05,0.05\n"
      "macs,10,20,30\n");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].exit, 1);
  EXPECT_FALSE(t.rows[0].pdp.has_value());
  EXPECT_EQ(t.rows[1].exit, 3);
  EXPECT_EQ(t.rows[1].line, 4);
  EXPECT_EQ((*t.exit_macs)[2], 30u);
}

TEST(Table, ErrorsCarryLineNumbers) {
  try {
    parse_calibration_table("exit,precision,power,delay\nEE3,fp32,1,1\n", "tbl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("tbl:2"), std::string::npos);
  }
  EXPECT_THROW(parse_calibration_table("EE1,fp32,x,1\n"), ParseError);
  EXPECT_THROW(parse_calibration_table("EE1,fp16,1,1\n"), ParseError);
  EXPECT_THROW(parse_calibration_table("# nothing\n"), ParseError);
}

TEST(Calibrate, ResnetRatiosGivePackingFactors) {
  const CalibrationTable t = resnet();
  const ProfileFit fit = calibrate_profile(t.rows, *t.exit_macs);
  EXPECT_EQ(fit.costs.at(BitWidth::FP32).packing_factor, 1);
  EXPECT_EQ(fit.costs.at(BitWidth::Q8).packing_factor, 6);
  EXPECT_EQ(fit.costs.at(BitWidth::Q4).packing_factor, 12);
  // Row ratios straight from the table.
  const double d_fp32 = row(t, 3, BitWidth::FP32).delay;
  EXPECT_LT(rel(d_fp32 / row(t, 3, BitWidth::Q4).delay, 12.0), 0.01);
  EXPECT_LT(rel(d_fp32 / row(t, 3, BitWidth::Q8).delay, 6.0), 0.01);
  // Fitted per-MAC delay ratios.
  const HardwareProfile& p = fit.profile;
  EXPECT_LT(rel(p.delay_mac[BitWidth::FP32] / p.delay_mac[BitWidth::Q4], 12.0), 0.01);
  EXPECT_LT(rel(p.delay_mac[BitWidth::FP32] / p.delay_mac[BitWidth::Q8], 6.0), 0.01);
  EXPECT_NO_THROW(p.validate());
}

TEST(Calibrate, DelayResidualsSmall) {
  for (const CalibrationTable& t : {resnet(), densenet()}) {
    const ProfileFit fit = calibrate_profile(t.rows, *t.exit_macs);
    ASSERT_EQ(fit.rows.size(), 9u);
    for (const RowFit& r : fit.rows) EXPECT_LT(std::abs(r.delay_residual), 0.05);
  }
}

TEST(Calibrate, SingleRowPerPrecisionFitsExactly) {
  std::vector<CalibrationRow> rows = {{3, BitWidth::FP32, 32.8, 0.313, {}, 1},
                                      {3, BitWidth::Q8, 7.61, 0.0521, {}, 2},
                                      {3, BitWidth::Q4, 4.08, 0.0261, {}, 3}};
  const ProfileFit fit = calibrate_profile(rows, {40'200'000, 73'700'000, 141'000'000});
  for (const RowFit& r : fit.rows) {
    EXPECT_NEAR(r.delay_residual, 0.0, 1e-12);
    EXPECT_NEAR(r.energy_residual, 0.0, 1e-12);
    EXPECT_NEAR(r.power_residual, 0.0, 1e-12);
  }
}

TEST(Calibrate, DelayUnitScalesPerMacDelay) {
  const CalibrationTable t = resnet();
  const ProfileFit a = calibrate_profile(t.rows, *t.exit_macs, 1.0);
  const ProfileFit b = calibrate_profile(t.rows, *t.exit_macs, 1e-3);
  for (BitWidth bw : kAllBitWidths) {
    EXPECT_NEAR(b.profile.delay_mac[bw], 1e-3 * a.profile.delay_mac[bw],
                1e-12 * a.profile.delay_mac[bw]);
  }
}

TEST(Calibrate, RejectsInconsistentUnitsAndMissingPrecisions) {
  std::vector<CalibrationRow> rows = {{3, BitWidth::FP32, 32.8, 0.313, 10.3, 7},
                                      {3, BitWidth::Q8, 7.61, 0.0521, 0.396, 8},
                                      {3, BitWidth::Q4, 4.08, 0.0261, 0.2, 9}};
  try {
    calibrate_profile(rows, {1, 2, 3});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos);
  }
  rows.pop_back();
  EXPECT_THROW(calibrate_profile(rows, {1, 2, 3}), ValidationError);
}

TEST(Reduction, DensenetMainExit) {
  const CalibrationTable t = densenet();
  const double power = reduction_percent(row(t, 3, BitWidth::FP32).power,
                                         row(t, 3, BitWidth::Q4).power);
  EXPECT_NEAR(power, 87.5, 0.1);
  for (const Reduction& r : reduction_from_rows(t.rows)) {
    if (r.exit == 3 && r.precision == BitWidth::Q4) {
      EXPECT_NEAR(r.power_pct, power, 1e-12);
      // 13.6 -> 0.141
      EXPECT_NEAR(r.pdp_pct, 100 * (1 - 0.141 / 13.6), 1e-9);
    }
    if (r.precision == BitWidth::FP32) {
      EXPECT_EQ(r.power_pct, 0.0);
      EXPECT_EQ(r.delay_pct, 0.0);
      EXPECT_EQ(r.pdp_pct, 0.0);
    }
  }
  EXPECT_EQ(reduction_percent(2.0, 2.0), 0.0);
  EXPECT_THROW(reduction_percent(0.0, 1.0), ValidationError);
}

TEST(Reduction, ModelReportFollowsProfileRatios) {
  const HardwareProfile p = simple_profile();
  const MultiExitNetwork net = build_preset("resnet_mini", 10, {3, 32, 32});
  const auto report = reduction_report(p, net);
  EXPECT_EQ(report.size(), 9u);
  for (const Reduction& r : report) {
    const double want_pdp = 100 * (1 - p.e_mac[r.precision] / p.e_mac[BitWidth::FP32]);
    EXPECT_NEAR(r.pdp_pct, want_pdp, 1e-9);
  }
}

TEST(ExitLabel, Names) {
  EXPECT_EQ(exit_label(1), "EE1");
  EXPECT_EQ(exit_label(2), "EE2");
  EXPECT_EQ(exit_label(3), "ME");
}

}  // namespace
}  // namespace hnet
