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
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hnet/bitwidth.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/tensor.hpp"
#include "hnet/weights.hpp"

namespace hnet {

// Confidence thresholds (T1, T2, T3); T3 is fixed at 0 so the main exit
// always accepts.
struct ExitThresholds {
  std::array<double, kNumExits> t{0.0, 0.0, 0.0};

  void validate() const;
  friend bool operator==(const ExitThresholds&, const ExitThresholds&) = default;
};

enum class ExitReason { Confidence, Energy };
std::string_view to_string(ExitReason r);

struct ExitDecisionTrace {
  std::array<double, kNumExits> confidence{};  // valid for exits 1..evaluated
  int evaluated = 0;
  int exit_taken = 0;
  std::size_t predicted_class = 0;
  ExitReason reason = ExitReason::Confidence;
};

// Largest softmax probability. Rejects vectors that do not sum to 1 within
// 1e-6 or that contain negative entries.
double confidence(std::span<const double> probs);

// Strict: exits only when the confidence exceeds the threshold.
inline bool should_exit(double c, double t) { return c > t; }

// Evaluates exits in order and stops at the first one whose confidence
// exceeds its threshold; exit 3 always stops.
ExitDecisionTrace adaptive_inference(const MultiExitNetwork& net,
                                     const WeightSet& weights,
                                     const Tensor& input,
                                     const ExitThresholds& thresholds,
                                     BitWidth precision);

// Per-sample outputs of all three heads, computed once and reused for every
// threshold candidate.
struct SampleExits {
  std::array<double, kNumExits> confidence{};
  std::array<std::size_t, kNumExits> predicted{};
  int label = 0;
};

std::vector<SampleExits> profile_exits(const MultiExitNetwork& net,
                                       const WeightSet& weights,
                                       std::span<const Tensor> inputs,
                                       std::span<const int> labels,
                                       BitWidth precision);

struct AdaptiveOutcome {
  std::array<std::size_t, kNumExits> exit_count{};
  std::array<std::size_t, kNumExits> exit_correct{};
  std::size_t correct = 0;
  std::size_t samples = 0;

  double exit_rate(int e) const;
  double exit_accuracy(int e) const;  // among samples taking exit e
  double accuracy() const;
};

int first_accepting_exit(const SampleExits& s, const ExitThresholds& t);
AdaptiveOutcome evaluate_thresholds(std::span<const SampleExits> samples,
                                    const ExitThresholds& t);

// 0.00, 0.05, ..., 1.00
std::array<double, 21> threshold_grid();

struct CalibrationReport {
  BitWidth precision = BitWidth::FP32;
  double max_accuracy_drop = 0.0;
  ExitThresholds thresholds;
  std::array<double, kNumExits> head_accuracy{};  // each head on all samples
  double full_depth_accuracy = 0.0;
  AdaptiveOutcome outcome;
};

// Greedy search: T1 is the smallest grid value meeting the accuracy floor
// with T2 = 1; T2 is then the smallest grid value meeting it given T1.
// The floor is full-depth accuracy minus max_accuracy_drop.
CalibrationReport calibrate_from_profile(std::span<const SampleExits> samples,
                                         double max_accuracy_drop);
CalibrationReport calibrate_thresholds(const MultiExitNetwork& net,
                                       const WeightSet& weights,
                                       std::span<const Tensor> inputs,
                                       std::span<const int> labels,
                                       double max_accuracy_drop,
                                       BitWidth precision);

// Thresholds file: per-precision thresholds plus the calibration reports
// that produced them.
struct ThresholdFile {
  std::map<BitWidth, ExitThresholds> per_precision;
  std::vector<CalibrationReport> reports;
  // Thresholds calibrated at FP32 and evaluated at each precision.
  std::vector<CalibrationReport> shared_evaluations;

  ExitThresholds for_precision(BitWidth bw) const;
};

std::string format_threshold_file(const ThresholdFile& f);
ThresholdFile parse_threshold_file(const std::string& text,
                                   const std::string& source = "<thresholds>");
void save_threshold_file(const ThresholdFile& f, const std::filesystem::path& p);
ThresholdFile load_threshold_file(const std::filesystem::path& p);

}  // namespace hnet
