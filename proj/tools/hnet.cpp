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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hnet/costmodel.hpp"
#include "hnet/dataset.hpp"
#include "hnet/eats.hpp"
#include "hnet/error.hpp"
#include "hnet/exitpolicy.hpp"
#include "hnet/graph_io.hpp"
#include "hnet/harvestsim.hpp"
#include "hnet/netgraph.hpp"
#include "hnet/trainer.hpp"
#include "hnet/weights.hpp"
#include "run_manifest.hpp"
#include "text_format.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hnet::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitExecution = 4;

// Calibration inputs used for post-training Q8/Q4 snapshots.
constexpr std::size_t kSnapshotCalibrationSamples = 64;

std::vector<std::string> g_argv;

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExecutionError("cannot write " + path.string());
  out << text;
  if (!out) throw ExecutionError("write failed for " + path.string());
}

fs::path manifest_path_for(const fs::path& out) {
  return fs::path(out.string() + ".manifest.json");
}

RunManifest start_manifest(const std::string& command, const std::string& output) {
  RunManifest m;
  m.command = command;
  m.argv = g_argv;
  m.output = output;
  return m;
}

// The graph argument may be a preset descriptor rather than a file.
void add_graph_input(RunManifest& m, const std::string& source) {
  if (fs::is_regular_file(source)) {
    m.add_input("graph", source);
  } else {
    m.inputs.push_back({"graph", source, ""});
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ValidationError("bad value '" + cell + "' in " + what);
    }
  }
  if (out.empty()) throw ValidationError(what + " is empty");
  return out;
}

Shape3 parse_shape(const std::string& text) {
  const std::vector<double> v = parse_list(text, "--shape");
  if (v.size() != 3) throw ValidationError("--shape needs C,H,W");
  return {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
}

std::string pct(double v) { return fixed(v, 2); }

// ---------------------------------------------------------------- count

struct CountArgs {
  std::string graph;
  std::string out;
};

std::string count_text(const MultiExitNetwork& net) {
  std::string s = "# hnet-count 1\n";
  s += "graph " + net.name() + " input " + to_string(net.input_shape()) +
       " classes " + std::to_string(net.num_classes()) + "\n";
  TextTable t({"stage", "cum_macs", "segment_macs", "work_macs", "params",
               "fp32_bytes", "q8_bytes", "q4_bytes"});
  for (int e = 1; e <= kNumExits; ++e) {
    const std::uint64_t params = count_params_to_exit(net, e);
    t.add({exit_label(e), std::to_string(count_macs(net, e)),
           std::to_string(segment_macs(net, e)), std::to_string(segment_work_macs(net, e)),
           std::to_string(params), std::to_string(param_bytes(params, BitWidth::FP32)),
           std::to_string(param_bytes(params, BitWidth::Q8)),
           std::to_string(param_bytes(params, BitWidth::Q4))});
  }
  const std::uint64_t total = count_params(net);
  t.add({"full", "-", "-", "-", std::to_string(total),
         std::to_string(param_bytes(total, BitWidth::FP32)),
         std::to_string(param_bytes(total, BitWidth::Q8)),
         std::to_string(param_bytes(total, BitWidth::Q4))});
  return s + t.render();
}

int run_count(const CountArgs& a) {
  const MultiExitNetwork net = resolve_graph(a.graph);
  const std::string text = count_text(net);
  std::cout << text;
  if (!a.out.empty()) {
    write_text(a.out, text);
    RunManifest m = start_manifest("count", a.out);
    add_graph_input(m, a.graph);
    m.write(manifest_path_for(a.out));
  }
  return kExitOk;
}

// --------------------------------------------------------- synth-data

struct SynthDataArgs {
  std::string kind = "separable";
  std::string shape = "8,1,1";
  int classes = 4;
  std::string sizes = "200,100,100";
  double spread = 0.5;
  double margin = 0.1;
  std::uint64_t seed = 1;
  std::string out;
};

int run_synth_data(const SynthDataArgs& a) {
  const Shape3 shape = parse_shape(a.shape);
  const std::vector<double> n = parse_list(a.sizes, "--sizes");
  if (n.size() != 3) throw ValidationError("--sizes needs train,val,test");
  const SplitSizes sizes{static_cast<int>(n[0]), static_cast<int>(n[1]),
                         static_cast<int>(n[2])};
  LabeledDataset data;
  if (a.kind == "separable") {
    data = make_separable(a.seed, shape, sizes, a.margin).data;
  } else if (a.kind == "blobs") {
    data = make_blobs(a.seed, shape, a.classes, sizes, a.spread);
  } else {
    throw ValidationError("unknown dataset kind '" + a.kind + "'");
  }
  save_dataset(data, a.out);
  RunManifest m = start_manifest("synth-data", a.out);
  m.seed = a.seed;
  m.write(manifest_path_for(a.out));
  std::cout << "dataset " << a.kind << " classes " << data.num_classes << " input "
            << to_string(data.input_shape) << " train " << data.train.size() << " val "
            << data.val.size() << " test " << data.test.size() << "\n";
  return kExitOk;
}

// -------------------------------------------------------- synth-trace

struct SynthTraceArgs {
  std::string kind = "step";
  std::string levels;
  double offset = 0.0;
  double amplitude = 0.0;
  double period = 1.0;
  double value = 0.0;
  double duration = 1.0;
  double dt = 1e-3;
  std::string out;
};

int run_synth_trace(const SynthTraceArgs& a) {
  SynthParams p;
  p.offset = a.offset;
  p.amplitude = a.amplitude;
  p.period = a.period;
  p.value = a.value;
  if (!a.levels.empty()) p.levels = parse_list(a.levels, "--levels");
  const HarvestTrace trace = synth_trace(parse_trace_kind(a.kind), p, a.duration, a.dt);
  write_text(a.out, format_trace(trace));
  start_manifest("synth-trace", a.out).write(manifest_path_for(a.out));
  std::cout << "trace " << a.kind << " samples " << trace.samples.size() << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- train

struct TrainArgs {
  std::string graph;
  std::string dataset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string precision;
  std::string out;
};

int run_train(const TrainArgs& a) {
  const MultiExitNetwork net = resolve_graph(a.graph);
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.precision.empty()) cfg.bit_width = parse_bitwidth(a.precision);
  cfg.validate();
  if (!fs::exists(a.dataset)) throw ExecutionError("dataset not found: " + a.dataset);
  const LabeledDataset data = load_dataset(a.dataset);

  TrainResult result = train(net, data, cfg);
  const std::size_t n_cal = std::min(kSnapshotCalibrationSamples, data.train.size());
  complete_precisions(net, result.weights,
                      std::span<const Tensor>(data.train.inputs.data(), n_cal));

  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_weights(result.weights, dir / "weights.json", net.name());

  json log;
  log["format"] = "hnet-train-log";
  log["version"] = 1;
  log["config"] = json::parse(format_train_config(cfg));
  json epochs = json::array();
  for (const EpochLog& e : result.log) {
    epochs.push_back({{"epoch", e.epoch},
                      {"loss", e.loss},
                      {"accuracy", e.accuracy},
                      {"observing", e.observing}});
  }
  log["epochs"] = epochs;
  const DataSplit& eval = data.val.empty() ? data.train : data.val;
  json acc;
  for (BitWidth bw : kAllBitWidths) {
    acc[std::string(to_string(bw))] = exit_accuracy(net, result.weights, eval, bw);
  }
  log["eval_split"] = data.val.empty() ? "train" : "val";
  log["eval_accuracy"] = acc;
  write_text(dir / "train_log.json", log.dump(2) + "\n");

  RunManifest m = start_manifest("train", dir.string());
  m.seed = cfg.seed;
  add_graph_input(m, a.graph);
  m.add_input("dataset", a.dataset);
  if (!a.config.empty()) m.add_input("config", a.config);
  m.write(dir / "manifest.json");

  TextTable t({"epoch", "loss", "acc_EE1", "acc_EE2", "acc_ME"});
  for (const EpochLog& e : result.log) {
    t.add({std::to_string(e.epoch), fixed(e.loss, 6), fixed(e.accuracy[0], 4),
           fixed(e.accuracy[1], 4), fixed(e.accuracy[2], 4)});
  }
  std::cout << "# hnet-train 1\n" << t.render();
  for (BitWidth bw : kAllBitWidths) {
    const auto ex = exit_accuracy(net, result.weights, eval, bw);
    std::cout << "eval " << to_string(bw) << " " << fixed(ex[0], 4) << " "
              << fixed(ex[1], 4) << " " << fixed(ex[2], 4) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string graph;
  std::string weights;
  std::string dataset;
  double max_drop = 0.02;
  std::string precision = "all";
  std::string out;
};

CalibrationReport evaluate_report(std::span<const SampleExits> samples,
                                  const ExitThresholds& t, BitWidth bw, double drop) {
  CalibrationReport r = calibrate_from_profile(samples, drop);
  r.precision = bw;
  r.thresholds = t;
  r.outcome = evaluate_thresholds(samples, t);
  return r;
}

int run_calibrate(const CalibrateArgs& a) {
  const MultiExitNetwork net = resolve_graph(a.graph);
  const WeightSet weights = load_weights(a.weights);
  weights.validate(net);
  if (!fs::exists(a.dataset)) throw ExecutionError("dataset not found: " + a.dataset);
  const LabeledDataset data = load_dataset(a.dataset);
  const DataSplit& split = data.val.empty() ? data.test : data.val;

  std::vector<BitWidth> precisions;
  if (a.precision == "all") {
    for (BitWidth bw : kAllBitWidths) {
      if (weights.has_precision(bw)) precisions.push_back(bw);
    }
  } else {
    precisions.push_back(parse_bitwidth(a.precision));
  }

  ThresholdFile file;
  std::map<BitWidth, std::vector<SampleExits>> profiles;
  for (BitWidth bw : precisions) {
    profiles[bw] = profile_exits(net, weights, split.inputs, split.labels, bw);
    CalibrationReport r = calibrate_from_profile(profiles[bw], a.max_drop);
    r.precision = bw;
    file.per_precision[bw] = r.thresholds;
    file.reports.push_back(r);
  }
  if (file.per_precision.contains(BitWidth::FP32)) {
    const ExitThresholds shared = file.per_precision.at(BitWidth::FP32);
    for (BitWidth bw : precisions) {
      file.shared_evaluations.push_back(
          evaluate_report(profiles.at(bw), shared, bw, a.max_drop));
    }
  }
  write_text(a.out, format_threshold_file(file));
  RunManifest m = start_manifest("calibrate", a.out);
  add_graph_input(m, a.graph);
  m.add_input("weights", a.weights);
  m.add_input("dataset", a.dataset);
  m.write(manifest_path_for(a.out));

  TextTable t({"precision", "T1", "T2", "T3", "rate_EE1", "rate_EE2", "rate_ME",
               "adaptive_acc", "full_acc"});
  for (const CalibrationReport& r : file.reports) {
    t.add({std::string(to_string(r.precision)), fixed(r.thresholds.t[0], 2),
           fixed(r.thresholds.t[1], 2), fixed(r.thresholds.t[2], 2),
           fixed(r.outcome.exit_rate(1), 4), fixed(r.outcome.exit_rate(2), 4),
           fixed(r.outcome.exit_rate(3), 4), fixed(r.outcome.accuracy(), 4),
           fixed(r.full_depth_accuracy, 4)});
  }
  std::cout << "# hnet-calibrate 1\nmax_drop " << fixed(a.max_drop, 4) << " samples "
            << split.size() << "\n"
            << t.render();
  return kExitOk;
}

// ----------------------------------------------------------- simulate

struct SimulateArgs {
  std::string graph;
  std::string weights;
  std::string thresholds;
  std::string config;
  std::string trace;
  std::string inputs;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::string summary_text(const SimResult& r) {
  const SimSummary s = summarize(r);
  std::string out = "inferences " + std::to_string(s.inferences) + "\n";
  TextTable t({"exit", "confidence", "energy"});
  for (int e = 1; e <= kNumExits; ++e) {
    t.add({exit_label(e), std::to_string(s.confidence_exits[e - 1]),
           std::to_string(s.energy_exits[e - 1])});
  }
  out += t.render();
  out += "depleted " + std::to_string(s.depleted) + "\n";
  for (BitWidth bw : kAllBitWidths) {
    out += "starts " + std::string(to_string(bw)) + " " +
           std::to_string(s.starts_by_precision[static_cast<int>(bw)]) + "\n";
  }
  return out;
}

int run_simulate(const SimulateArgs& a) {
  const MultiExitNetwork net = resolve_graph(a.graph);
  const WeightSet weights = load_weights(a.weights);
  const ThresholdFile th = load_threshold_file(a.thresholds);
  const SchedulerConfig sched = load_scheduler_config(a.config);
  const HarvestTrace trace = load_trace(a.trace);

  SimConfig cfg;
  cfg.dt = sched.simulation.dt;
  cfg.e_cap = sched.simulation.e_cap;
  cfg.e_init = sched.simulation.e_init;
  cfg.hardware = sched.hardware;
  cfg.thresholds = sched.resolve(net);
  for (BitWidth bw : kAllBitWidths) cfg.exit_thresholds[bw] = th.for_precision(bw);
  cfg.input_seed = a.seed.value_or(sched.simulation.input_seed);
  if (!a.inputs.empty()) {
    const LabeledDataset data = load_dataset(a.inputs);
    cfg.inputs = data.test.empty() ? data.train.inputs : data.test.inputs;
  }

  const SimResult result = run_simulation(cfg, net, weights, trace);
  export_report(result, a.out);

  RunManifest m = start_manifest("simulate", a.out);
  m.seed = cfg.input_seed;
  add_graph_input(m, a.graph);
  m.add_input("weights", a.weights);
  m.add_input("thresholds", a.thresholds);
  m.add_input("config", a.config);
  m.add_input("trace", a.trace);
  if (!a.inputs.empty()) m.add_input("inputs", a.inputs);
  m.write(manifest_path_for(a.out));

  std::cout << "# hnet-simulate 1\n"
            << "r_th1 " << sci(cfg.thresholds.r_th1, 6) << " r_th2 "
            << sci(cfg.thresholds.r_th2, 6) << "\n"
            << "e_th fp32 " << sci(cfg.thresholds.e_th[BitWidth::FP32], 6) << " q8 "
            << sci(cfg.thresholds.e_th[BitWidth::Q8], 6) << " q4 "
            << sci(cfg.thresholds.e_th[BitWidth::Q4], 6) << "\n"
            << summary_text(result);
  return kExitOk;
}

// -------------------------------------------------------------- costs

struct CostsArgs {
  std::string table;
  std::string graph;
  double delay_unit = 1.0;
  std::string out;
};

int run_costs(const CostsArgs& a) {
  const CalibrationTable table = load_calibration_table(a.table);
  std::optional<MultiExitNetwork> net;
  if (!a.graph.empty()) net = resolve_graph(a.graph);

  std::array<std::uint64_t, kNumExits> macs{};
  std::string mac_source;
  if (table.exit_macs) {
    macs = *table.exit_macs;
    mac_source = "table";
  } else if (net) {
    for (int e = 1; e <= kNumExits; ++e) macs[e - 1] = count_macs(*net, e);
    mac_source = "graph";
  } else {
    throw ValidationError("calibration table has no macs line; pass --graph");
  }
  const ProfileFit fit = calibrate_profile(table.rows, macs, a.delay_unit);

  std::ostringstream s;
  s << "# hnet-costs 1\nmacs_source " << mac_source << "\n\n[measured]\n";
  TextTable measured({"stage", "precision", "power", "delay", "power*delay", "pdp",
                      "pdp_rel_err"});
  for (const CalibrationRow& r : table.rows) {
    const double pd = r.power * r.delay;
    measured.add({exit_label(r.exit), std::string(to_string(r.precision)),
                  sci(r.power, 3), sci(r.delay, 3), sci(pd, 4),
                  r.pdp ? sci(*r.pdp, 3) : "-",
                  r.pdp ? sci(std::abs(pd - *r.pdp) / *r.pdp, 3) : "-"});
  }
  s << measured.render() << "\n[profile]\n";
  TextTable prof({"precision", "e_mac", "delay_mac", "packing", "power_per_slice",
                  "cycle_time"});
  for (BitWidth bw : kAllBitWidths) {
    const PrecisionCost& c = fit.costs.at(bw);
    prof.add({std::string(to_string(bw)), sci(fit.profile.e_mac[bw], 6),
              sci(fit.profile.delay_mac[bw], 6), std::to_string(c.packing_factor),
              sci(c.power_per_slice, 6), sci(c.cycle_time, 6)});
  }
  s << prof.render() << "\n[fitted]\n";
  TextTable fitted({"stage", "precision", "macs", "delay", "power", "pdp",
                    "delay_resid", "power_resid"});
  for (const RowFit& rf : fit.rows) {
    const StageCost c = stage_cost(rf.macs, rf.row.exit, rf.row.precision, fit.profile);
    fitted.add({exit_label(rf.row.exit), std::string(to_string(rf.row.precision)),
                std::to_string(rf.macs), sci(c.delay, 4), sci(c.power, 4),
                sci(c.pdp, 4), pct(100.0 * rf.delay_residual) + "%",
                pct(100.0 * rf.power_residual) + "%"});
  }
  s << fitted.render() << "\n[reduction_measured]\n";
  TextTable red({"stage", "precision", "power_pct", "delay_pct", "pdp_pct"});
  for (const Reduction& r : reduction_from_rows(table.rows)) {
    red.add({exit_label(r.exit), std::string(to_string(r.precision)), pct(r.power_pct),
             pct(r.delay_pct), pct(r.pdp_pct)});
  }
  s << red.render();
  if (net) {
    s << "\n[reduction_model " << net->name() << "]\n";
    TextTable model({"stage", "precision", "power_pct", "delay_pct", "pdp_pct"});
    for (const Reduction& r : reduction_report(fit.profile, *net)) {
      model.add({exit_label(r.exit), std::string(to_string(r.precision)),
                 pct(r.power_pct), pct(r.delay_pct), pct(r.pdp_pct)});
    }
    s << model.render();
  }
  std::cout << s.str();

  if (!a.out.empty()) {
    SchedulerConfig frag;
    frag.hardware = fit.profile;
    json doc = json::parse(format_scheduler_config(frag));
    json packing;
    for (BitWidth bw : kAllBitWidths) {
      packing[std::string(to_string(bw))] = fit.costs.at(bw).packing_factor;
    }
    doc["fit"] = {{"source", a.table},
                  {"delay_unit_s", a.delay_unit},
                  {"exit_macs", macs},
                  {"packing_factor", packing}};
    write_text(a.out, doc.dump(2) + "\n");
    RunManifest m = start_manifest("costs", a.out);
    m.add_input("table", a.table);
    if (net) add_graph_input(m, a.graph);
    m.write(manifest_path_for(a.out));
  }
  return kExitOk;
}

// ------------------------------------------------------------- report

struct ReportArgs {
  std::string report;
};

int run_report(const ReportArgs& a) {
  const SimResult r = load_report(a.report);
  std::ostringstream s;
  s << "# hnet-report 1\n"
    << "dt " << sci(r.dt, 3) << " e_cap " << sci(r.e_cap, 6) << " steps "
    << r.series.time.size() << "\n"
    << summary_text(r);

  std::array<std::size_t, 3> busy{};
  std::size_t idle = 0;
  for (const auto& p : r.series.precision) {
    if (p) ++busy[static_cast<int>(*p)]; else ++idle;
  }
  const double total = std::max<std::size_t>(r.series.precision.size(), 1);
  s << "time_share idle " << fixed(idle / total, 4);
  for (BitWidth bw : kAllBitWidths) {
    s << " " << to_string(bw) << " " << fixed(busy[static_cast<int>(bw)] / total, 4);
  }
  s << "\n[precision_intervals]\n";
  TextTable iv({"precision", "start", "end"});
  std::optional<BitWidth> cur;
  double begin = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < r.series.precision.size(); ++i) {
    const auto& p = r.series.precision[i];
    if (!p) continue;
    if (cur != p) {
      if (cur) iv.add({std::string(to_string(*cur)), fixed(begin, 4), fixed(last, 4)});
      cur = p;
      begin = r.series.time[i];
    }
    last = r.series.time[i];
  }
  if (cur) iv.add({std::string(to_string(*cur)), fixed(begin, 4), fixed(last, 4)});
  s << iv.render() << "\n[events]\n";
  std::map<std::string, std::size_t> counts;
  for (const SimEvent& e : r.events) ++counts[std::string(to_string(e.kind))];
  for (const auto& [k, n] : counts) s << k << " " << n << "\n";
  std::cout << s.str();
  return kExitOk;
}

// ------------------------------------------------------- export-graph

int run_export_graph(const std::string& source, const std::string& out) {
  const std::string text = format_graph(resolve_graph(source));
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Parse: return kExitParse;
    case ErrorKind::Validation: return kExitValidation;
    case ErrorKind::Execution: return kExitExecution;
  }
  return kExitExecution;
}

int main_impl(int argc, char** argv) {
  g_argv.assign(argv + 1, argv + argc);
  CLI::App app{"hnet: multi-precision early-exit inference under harvested energy"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  int rc = kExitOk;

  CountArgs count;
  auto* c = app.add_subcommand("count", "MACs, parameters and storage per exit");
  c->add_option("graph", count.graph, "graph file or preset:<name>[:classes[:C,H,W]]")
      ->required();
  c->add_option("--out", count.out, "also write the table here");
  c->callback([&] { rc = run_count(count); });

  SynthDataArgs sd;
  auto* d = app.add_subcommand("synth-data", "generate a seeded synthetic dataset");
  d->add_option("--kind", sd.kind, "separable or blobs")->capture_default_str();
  d->add_option("--shape", sd.shape, "C,H,W")->capture_default_str();
  d->add_option("--classes", sd.classes, "classes for blobs")->capture_default_str();
  d->add_option("--sizes", sd.sizes, "train,val,test")->capture_default_str();
  d->add_option("--spread", sd.spread, "blob noise")->capture_default_str();
  d->add_option("--margin", sd.margin, "separable rejection margin")->capture_default_str();
  d->add_option("--seed", sd.seed)->capture_default_str();
  d->add_option("--out", sd.out, "dataset manifest (.json)")->required();
  d->callback([&] { rc = run_synth_data(sd); });

  SynthTraceArgs st;
  auto* tr = app.add_subcommand("synth-trace", "generate a charging-rate trace");
  tr->add_option("--kind", st.kind, "step, sinusoid or constant")->capture_default_str();
  tr->add_option("--levels", st.levels, "step plateaus in W, comma separated");
  tr->add_option("--offset", st.offset)->capture_default_str();
  tr->add_option("--amplitude", st.amplitude)->capture_default_str();
  tr->add_option("--period", st.period)->capture_default_str();
  tr->add_option("--value", st.value)->capture_default_str();
  tr->add_option("--duration", st.duration, "s")->capture_default_str();
  tr->add_option("--dt", st.dt, "sample spacing, s")->capture_default_str();
  tr->add_option("--out", st.out, "trace CSV")->required();
  tr->callback([&] { rc = run_synth_trace(st); });

  TrainArgs ta;
  std::uint64_t train_seed = 0;
  auto* t = app.add_subcommand("train", "quantization-aware multi-exit training");
  t->add_option("graph", ta.graph)->required();
  t->add_option("dataset", ta.dataset, "dataset manifest")->required();
  t->add_option("--config", ta.config, "train config JSON");
  auto* seed_opt = t->add_option("--seed", train_seed, "overrides the config seed");
  t->add_option("--precision", ta.precision, "fp32, q8 or q4; overrides the config");
  t->add_option("--out", ta.out, "output directory")->required();
  t->callback([&] {
    if (seed_opt->count()) ta.seed = train_seed;
    rc = run_train(ta);
  });

  CalibrateArgs ca;
  auto* cal = app.add_subcommand("calibrate", "calibrate exit confidence thresholds");
  cal->add_option("graph", ca.graph)->required();
  cal->add_option("weights", ca.weights, "weights manifest")->required();
  cal->add_option("dataset", ca.dataset, "dataset manifest; the val split is used")
      ->required();
  cal->add_option("--max-drop", ca.max_drop, "allowed accuracy drop, fraction")
      ->capture_default_str();
  cal->add_option("--precision", ca.precision, "fp32, q8, q4 or all")->capture_default_str();
  cal->add_option("--out", ca.out, "thresholds JSON")->required();
  cal->callback([&] { rc = run_calibrate(ca); });

  SimulateArgs sa;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "run the harvested-energy simulation");
  sim->add_option("graph", sa.graph)->required();
  sim->add_option("weights", sa.weights)->required();
  sim->add_option("thresholds", sa.thresholds)->required();
  sim->add_option("--config", sa.config, "scheduler config JSON")->required();
  sim->add_option("--trace", sa.trace, "charging-rate CSV")->required();
  sim->add_option("--inputs", sa.inputs, "dataset whose test split feeds inferences");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "input seed override");
  sim->add_option("--out", sa.out, "report JSON")->required();
  sim->callback([&] {
    if (sim_seed_opt->count()) sa.seed = sim_seed;
    rc = run_simulate(sa);
  });

  CostsArgs co;
  auto* cost = app.add_subcommand("costs", "fit and report per-stage power/delay/PDP");
  cost->add_option("table", co.table, "CSV exit,precision,power,delay[,pdp]")->required();
  cost->add_option("--graph", co.graph, "network for modeled reductions");
  cost->add_option("--delay-unit", co.delay_unit, "seconds per table delay unit")
      ->capture_default_str();
  cost->add_option("--out", co.out, "scheduler-config fragment JSON");
  cost->callback([&] { rc = run_costs(co); });

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "summarize a simulation report");
  rep->add_option("report", ra.report)->required();
  rep->callback([&] { rc = run_report(ra); });

  std::string eg_graph;
  std::string eg_out;
  auto* eg = app.add_subcommand("export-graph", "write a graph in the text format");
  eg->add_option("graph", eg_graph)->required();
  eg->add_option("--out", eg_out);
  eg->callback([&] { rc = run_export_graph(eg_graph, eg_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  return rc;
}

}  // namespace
}  // namespace hnet::cli

int main(int argc, char** argv) {
  try {
    return hnet::cli::main_impl(argc, argv);
  } catch (const hnet::Error& e) {
    std::cerr << "hnet: " << e.what() << "\n";
    return hnet::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "hnet: " << e.what() << "\n";
    return hnet::cli::kExitExecution;
  }
}
