#pragma once

// Batch command line: analyze, select-sdt, compile, run, compare, bench.
// `run_cli` is the whole program; main() only forwards to it.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "typeline/analyzer/analyzer.hpp"
#include "typeline/assembly.hpp"
#include "typeline/metrics/pipeline.hpp"

namespace typeline::cli {

enum Exit : int { Ok = 0, Usage = 1, CompileError = 2, RuntimeTrap = 3, ValidationError = 4 };

inline int exit_code(ErrorCode code) {
  switch (classify(code)) {
    case ErrorClass::Usage: return Usage;
    case ErrorClass::Compile: return CompileError;
    case ErrorClass::Runtime: return RuntimeTrap;
    case ErrorClass::Validation: return ValidationError;
  }
  return Usage;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
}

inline nlohmann::json read_inputs(const std::string& path) { return path.empty() ? nlohmann::json::object() : parse_inputs(read_file(path)); }

/// Options shared by the commands that compile.
struct CompileFlags {
  std::string config;
  std::string cost_table;
  int window = 0;
  int unroll = 0;
  bool no_cluster = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "JSON scheduler config");
    app.add_option("--cost-table", cost_table, "JSON opcode cost table");
    app.add_option("--window", window, "scheduling window")->check(CLI::PositiveNumber);
    app.add_option("--unroll", unroll, "unroll factor for constant-trip loops")->check(CLI::PositiveNumber);
    app.add_flag("--no-cluster", no_cluster, "emit the scalar schedule only");
  }

  compiler::Config build() const {
    compiler::Config cfg;
    if (!config.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(config));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
      }
      cfg = compiler::Config::from_json(j);
    }
    if (!cost_table.empty()) cfg.costs = CostTable::from_json_text(read_file(cost_table));
    if (window > 0) cfg.window = window;
    if (unroll > 0) cfg.unroll = unroll;
    if (no_cluster) cfg.cluster = false;
    return cfg;
  }
};

inline std::string unit_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

inline nlohmann::ordered_json totals_json(const machine::Totals& t) {
  nlohmann::ordered_json j;
  j["cycles"] = t.cycles;
  j["issues"] = t.issues;
  j["ops"] = t.ops;
  j["loadOps"] = t.load_ops;
  j["computeOps"] = t.compute_ops;
  j["routedOps"] = t.routed_ops;
  j["reroutedAtRuntime"] = t.rerouted_at_runtime;
  return j;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"typeline: datatype-clustering compiler and cycle model"};
  app.require_subcommand(1);

  // analyze
  std::vector<std::string> sources;
  double loop_weight = analyzer::kDefaultLoopWeight;
  std::string csv_out, features_out;
  bool weighted = false;
  auto* analyze = app.add_subcommand("analyze", "datatype and feature counts of MiniC sources");
  analyze->add_option("files", sources, "MiniC sources")->required()->check(CLI::ExistingFile);
  analyze->add_option("--loop-weight", loop_weight, "weight per loop nesting level")->check(CLI::PositiveNumber);
  analyze->add_option("--csv", csv_out, "write type counts here instead of stdout");
  analyze->add_option("--features", features_out, "also write feature counts to this CSV");
  analyze->add_flag("--weighted", weighted, "emit loop-weighted type counts");

  // select-sdt
  std::string stats_csv;
  std::size_t k = 4;
  auto* select = app.add_subcommand("select-sdt", "rank datatypes of a stats CSV and pick the SDTs");
  select->add_option("stats", stats_csv, "type counts CSV")->required()->check(CLI::ExistingFile);
  select->add_option("-k", k, "number of SDTs")->check(CLI::Range(1, 4));
  select->add_flag("--scores", weighted, "print the averaged score next to each type");

  // compile
  std::string source, output;
  CompileFlags flags;
  auto* compile = app.add_subcommand("compile", "MiniC source to assembly");
  compile->add_option("file", source, "MiniC source")->required()->check(CLI::ExistingFile);
  compile->add_option("-o", output, "output .tla path (stdout if omitted)");
  flags.attach(*compile);

  // run
  std::string program, inputs, trace, cost_table;
  bool strict = false;
  auto* run = app.add_subcommand("run", "execute an assembly program on the cycle model");
  run->add_option("file", program, "assembly program")->required()->check(CLI::ExistingFile);
  run->add_option("--inputs", inputs, "JSON inputs")->check(CLI::ExistingFile);
  run->add_option("--trace", trace, "write per-issue JSONL trace here");
  run->add_option("--cost-table", cost_table, "JSON opcode cost table");
  run->add_flag("--strict-lanes", strict, "trap on ops for disabled lanes instead of rerouting");

  // compare
  std::string format = "json", baseline_trace;
  auto* cmp = app.add_subcommand("compare", "compile, run against the baseline, report metrics");
  cmp->add_option("file", source, "MiniC source")->required()->check(CLI::ExistingFile);
  cmp->add_option("--inputs", inputs, "JSON inputs")->check(CLI::ExistingFile);
  cmp->add_option("--format", format, "json, csv or table")->check(CLI::IsMember({"json", "csv", "table"}));
  cmp->add_option("--trace", trace, "write the typeline JSONL trace here");
  cmp->add_option("--baseline-trace", baseline_trace, "write the baseline JSONL trace here");
  flags.attach(*cmp);

  // bench
  std::string dir;
  std::string bench_format = "csv";
  auto* bench = app.add_subcommand("bench", "compare every <unit>.mc of a directory; inputs from <unit>.json");
  bench->add_option("dir", dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--format", bench_format, "csv, json or table")->check(CLI::IsMember({"json", "csv", "table"}));
  flags.attach(*bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return Ok;
    }
    err << e.what() << '\n';
    return Usage;
  }

  try {
    if (*analyze) {
      std::vector<analyzer::TypeStats> rows;
      for (const auto& f : sources)
        rows.push_back(analyzer::collect_stats(minic::parse_minic(read_file(f)), loop_weight, unit_name(f)));
      std::ostringstream types;
      analyzer::write_types_csv(types, rows, weighted);
      if (csv_out.empty()) out << types.str();
      else write_file(csv_out, types.str());
      if (!features_out.empty()) {
        std::ostringstream feats;
        analyzer::write_features_csv(feats, rows);
        write_file(features_out, feats.str());
      }
      return Ok;
    }

    if (*select) {
      std::ifstream in(stats_csv);
      auto rows = analyzer::read_types_csv(in);
      const analyzer::TypeStats avg = analyzer::aggregate(rows);
      for (const auto& t : analyzer::select_sdt(avg, k)) {
        out << t;
        if (weighted) out << ' ' << avg.type(t);
        out << '\n';
      }
      return Ok;
    }

    if (*compile) {
      const compiler::Config cfg = flags.build();
      const std::string text = format_assembly(compiler::compile(metrics::lower_source(read_file(source), cfg), cfg));
      if (output.empty()) out << text;
      else write_file(output, text);
      return Ok;
    }

    if (*run) {
      machine::RunOptions ro;
      if (!cost_table.empty()) ro.costs = CostTable::from_json_text(read_file(cost_table));
      ro.strict_lanes = strict;
      ro.keep_records = !trace.empty();
      const Program prog = parse_assembly(read_file(program));
      const machine::ExecTrace t = machine::run(prog, read_inputs(inputs), ro);
      if (!trace.empty()) write_file(trace, machine::trace_jsonl(t));
      nlohmann::ordered_json j;
      j["outputs"] = outputs_json(t.outputs);
      j["totals"] = totals_json(t.totals);
      out << j.dump(2) << '\n';
      return Ok;
    }

    if (*cmp) {
      const compiler::Config cfg = flags.build();
      const bool keep = !trace.empty() || !baseline_trace.empty();
      auto c = metrics::compare(read_file(source), read_inputs(inputs), cfg, unit_name(source), keep);
      if (!trace.empty()) write_file(trace, machine::trace_jsonl(c.typeline));
      if (!baseline_trace.empty()) write_file(baseline_trace, machine::trace_jsonl(c.baseline));
      out << metrics::export_reports({c.report}, metrics::parse_format(format));
      return Ok;
    }

    if (*bench) {
      const compiler::Config cfg = flags.build();
      std::vector<std::filesystem::path> units;
      for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".mc") units.push_back(e.path());
      std::sort(units.begin(), units.end());
      std::vector<metrics::ExecReport> reports;
      for (const auto& u : units) {
        auto in_path = u;
        in_path.replace_extension(".json");
        const nlohmann::json in = std::filesystem::exists(in_path) ? read_inputs(in_path.string()) : nlohmann::json::object();
        try {
          reports.push_back(metrics::compare(read_file(u.string()), in, cfg, u.stem().string(), false).report);
        } catch (const Error& e) {
          err << u.filename().string() << ": " << e.what() << '\n';
          return exit_code(e.code());
        }
      }
      out << metrics::export_reports(reports, metrics::parse_format(bench_format));
      return Ok;
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return Usage;
  }
  return Usage;
}

}  // namespace typeline::cli
