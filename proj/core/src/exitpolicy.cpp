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

#include "hnet/exitpolicy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hnet/error.hpp"
#include "hnet/forward.hpp"
#include "json.hpp"

namespace hnet {

using nlohmann::json;

namespace {
// Slack for comparing accuracies computed from different sample counts.
constexpr double kAccuracySlack = 1e-12;
}  // namespace

void ExitThresholds::validate() const {
  for (double v : t) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("exit thresholds must lie in [0, 1]");
    }
  }
  if (t[2] != 0.0) throw ValidationError("main-exit threshold must be 0");
}

std::string_view to_string(ExitReason r) {
  return r == ExitReason::Confidence ? "confidence" : "energy";
}

double confidence(std::span<const double> probs) {
  if (probs.empty()) throw ValidationError("empty probability vector");
  double sum = 0.0;
  double best = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ValidationError("probabilities must be nonnegative");
    sum += p;
    best = std::max(best, p);
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ValidationError("probabilities sum to " + std::to_string(sum) +
                          ", not 1");
  }
  return best;
}

ExitDecisionTrace adaptive_inference(const MultiExitNetwork& net,
                                     const WeightSet& weights,
                                     const Tensor& input,
                                     const ExitThresholds& thresholds,
                                     BitWidth precision) {
  thresholds.validate();
  ExitRunner runner(net, weights, precision);
  runner.start(input);
  ExitDecisionTrace trace;
  for (int e = 1; e <= kNumExits; ++e) {
    const std::vector<double> probs = softmax(runner.advance());
    const double c = confidence(probs);
    trace.confidence[e - 1] = c;
    trace.evaluated = e;
    if (e == kNumExits || should_exit(c, thresholds.t[e - 1])) {
      trace.exit_taken = e;
      trace.predicted_class = argmax(probs);
      trace.reason = ExitReason::Confidence;
      break;
    }
  }
  return trace;
}

std::vector<SampleExits> profile_exits(const MultiExitNetwork& net,
                                       const WeightSet& weights,
                                       std::span<const Tensor> inputs,
                                       std::span<const int> labels,
                                       BitWidth precision) {
  if (inputs.size() != labels.size()) {
    throw ValidationError("inputs and labels differ in length");
  }
  std::vector<SampleExits> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= net.num_classes()) {
      throw ValidationError("label out of range at sample " + std::to_string(i));
    }
    const auto logits = forward_all_exits(net, weights, inputs[i], precision);
    SampleExits s;
    s.label = labels[i];
    for (int e = 0; e < kNumExits; ++e) {
      const std::vector<double> probs = softmax(logits[e]);
      s.confidence[e] = confidence(probs);
      s.predicted[e] = argmax(probs);
    }
    out.push_back(s);
  }
  return out;
}

double AdaptiveOutcome::exit_rate(int e) const {
  return samples ? static_cast<double>(exit_count[e - 1]) / samples : 0.0;
}

double AdaptiveOutcome::exit_accuracy(int e) const {
  return exit_count[e - 1]
             ? static_cast<double>(exit_correct[e - 1]) / exit_count[e - 1]
             : 0.0;
}

double AdaptiveOutcome::accuracy() const {
  return samples ? static_cast<double>(correct) / samples : 0.0;
}

int first_accepting_exit(const SampleExits& s, const ExitThresholds& t) {
  for (int e = 1; e < kNumExits; ++e) {
    if (should_exit(s.confidence[e - 1], t.t[e - 1])) return e;
  }
  return kNumExits;
}

AdaptiveOutcome evaluate_thresholds(std::span<const SampleExits> samples,
                                    const ExitThresholds& t) {
  AdaptiveOutcome o;
  o.samples = samples.size();
  for (const SampleExits& s : samples) {
    const int e = first_accepting_exit(s, t);
    const bool ok = s.predicted[e - 1] == static_cast<std::size_t>(s.label);
    ++o.exit_count[e - 1];
    o.exit_correct[e - 1] += ok;
    o.correct += ok;
  }
  return o;
}

std::array<double, 21> threshold_grid() {
  std::array<double, 21> g{};
  for (int i = 0; i <= 20; ++i) g[i] = i / 20.0;
  return g;
}

CalibrationReport calibrate_from_profile(std::span<const SampleExits> samples,
                                         double max_accuracy_drop) {
  if (samples.empty()) throw ValidationError("validation set is empty");
  if (!(max_accuracy_drop >= 0.0)) {
    throw ValidationError("max accuracy drop must be nonnegative");
  }
  CalibrationReport r;
  r.max_accuracy_drop = max_accuracy_drop;
  for (int e = 0; e < kNumExits; ++e) {
    std::size_t ok = 0;
    for (const SampleExits& s : samples) {
      ok += s.predicted[e] == static_cast<std::size_t>(s.label);
    }
    r.head_accuracy[e] = static_cast<double>(ok) / samples.size();
  }
  r.full_depth_accuracy = r.head_accuracy[kNumExits - 1];
  const double floor = r.full_depth_accuracy - max_accuracy_drop - kAccuracySlack;

  ExitThresholds t{{1.0, 1.0, 0.0}};
  for (int e = 1; e < kNumExits; ++e) {
    for (double cand : threshold_grid()) {
      t.t[e - 1] = cand;
      if (evaluate_thresholds(samples, t).accuracy() >= floor) break;
    }
  }
  r.thresholds = t;
  r.outcome = evaluate_thresholds(samples, t);
  return r;
}

CalibrationReport calibrate_thresholds(const MultiExitNetwork& net,
                                       const WeightSet& weights,
                                       std::span<const Tensor> inputs,
                                       std::span<const int> labels,
                                       double max_accuracy_drop,
                                       BitWidth precision) {
  if (inputs.empty()) throw ValidationError("validation set is empty");
  const auto samples = profile_exits(net, weights, inputs, labels, precision);
  CalibrationReport r = calibrate_from_profile(samples, max_accuracy_drop);
  r.precision = precision;
  return r;
}

ExitThresholds ThresholdFile::for_precision(BitWidth bw) const {
  auto it = per_precision.find(bw);
  if (it != per_precision.end()) return it->second;
  it = per_precision.find(BitWidth::FP32);
  if (it != per_precision.end()) return it->second;
  throw ValidationError("thresholds file has no entry for " +
                        std::string(to_string(bw)));
}

namespace {

json report_json(const CalibrationReport& r) {
  json exits = json::array();
  for (int e = 1; e <= kNumExits; ++e) {
    exits.push_back({{"exit", e},
                     {"threshold", r.thresholds.t[e - 1]},
                     {"exit_rate", r.outcome.exit_rate(e)},
                     {"exit_accuracy", r.outcome.exit_accuracy(e)},
                     {"head_accuracy", r.head_accuracy[e - 1]}});
  }
  return {{"precision", std::string(to_string(r.precision))},
          {"max_accuracy_drop", r.max_accuracy_drop},
          {"samples", r.outcome.samples},
          {"full_depth_accuracy", r.full_depth_accuracy},
          {"adaptive_accuracy", r.outcome.accuracy()},
          {"exits", exits}};
}

}  // namespace

std::string format_threshold_file(const ThresholdFile& f) {
  json th = json::object();
  for (const auto& [bw, t] : f.per_precision) {
    th[std::string(to_string(bw))] = t.t;
  }
  json reports = json::array();
  for (const CalibrationReport& r : f.reports) reports.push_back(report_json(r));
  json shared = json::array();
  for (const CalibrationReport& r : f.shared_evaluations) {
    shared.push_back(report_json(r));
  }
  json doc = {{"format", "hnet-thresholds"},
              {"version", 1},
              {"thresholds", th},
              {"calibration", reports},
              {"shared_fp32_thresholds", shared}};
  return doc.dump(2) + "\n";
}

ThresholdFile parse_threshold_file(const std::string& text,
                                   const std::string& source) {
  ThresholdFile f;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "hnet-thresholds") {
      throw ParseError(source + ": not a thresholds file");
    }
    for (const auto& [key, value] : doc.at("thresholds").items()) {
      ExitThresholds t;
      const auto v = value.get<std::vector<double>>();
      if (v.size() != kNumExits) {
        throw ParseError(source + ": thresholds for " + key + " need 3 values");
      }
      std::copy(v.begin(), v.end(), t.t.begin());
      t.validate();
      f.per_precision[parse_bitwidth(key)] = t;
    }
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  return f;
}

void save_threshold_file(const ThresholdFile& f, const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw ExecutionError("cannot write " + p.string());
  out << format_threshold_file(f);
}

ThresholdFile load_threshold_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ExecutionError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_threshold_file(ss.str(), p.string());
}

}  // namespace hnet
