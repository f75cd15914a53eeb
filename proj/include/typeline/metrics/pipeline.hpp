#pragma once

// Source to report: parse, check, lower, compile, then run the program and
// the sequential baseline on the same inputs.

#include <string>

#include "typeline/compiler/emit.hpp"
#include "typeline/frontend/lower.hpp"
#include "typeline/frontend/parser.hpp"
#include "typeline/frontend/typecheck.hpp"
#include "typeline/machine/baseline.hpp"
#include "typeline/machine/machine.hpp"
#include "typeline/metrics/report.hpp"

namespace typeline::metrics {

inline ir::Program lower_source(std::string_view source, const compiler::Config& cfg = {}) {
  return minic::lower(minic::type_check(minic::parse_minic(source)), minic::LowerOptions{cfg.unroll});
}

struct Comparison {
  ir::Program ir;
  compiler::Compiled compiled;
  machine::ExecTrace typeline;
  machine::ExecTrace baseline;
  ExecReport report;
};

inline Comparison compare(std::string_view source, const nlohmann::json& inputs, const compiler::Config& cfg = {},
                          std::string unit = {}, bool keep_records = true) {
  Comparison c;
  c.ir = lower_source(source, cfg);
  c.compiled = compiler::compile_detailed(c.ir, cfg);
  machine::RunOptions ro;
  ro.costs = cfg.costs;
  ro.keep_records = keep_records;
  ro.validation.relax = cfg.relax;
  c.typeline = machine::run(c.compiled.program, inputs, ro);
  machine::BaselineOptions bo;
  bo.costs = cfg.costs;
  bo.lanes = cfg.lanes;
  bo.keep_records = keep_records;
  c.baseline = machine::run_baseline(c.ir, inputs, bo);
  c.report = report(c.typeline, c.baseline, std::move(unit));
  return c;
}

}  // namespace typeline::metrics
