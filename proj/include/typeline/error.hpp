#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace typeline {

enum class ErrorCode {
  // assembly
  UnknownOpcode,
  MalformedOperand,
  LaneMismatch,
  MissingCostEntry,
  InvalidCostTable,
  InvalidConfig,
  // frontend
  SyntaxError,
  UnsupportedConstruct,
  UndeclaredVariable,
  ArityMismatch,
  NonSdtArithmetic,
  TypeError,
  // analyzer
  EmptyCorpus,
  InvalidArgument,
  // compiler
  RegisterPressure,
  // machine
  ConversionDisabled,
  UnsupportedConversion,
  LaneDisabledAtRuntime,
  IntDivisionByZero,
  UnboundInput,
  ZeroSizeAllocation,
  DoubleFree,
  UnknownHandle,
  ProtectedLane,
  MemoryFault,
  TypeTagMismatch,
  StepLimit,
  // metrics
  TraceMismatch,
  ValidationFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownOpcode: return "UnknownOpcode";
    case ErrorCode::MalformedOperand: return "MalformedOperand";
    case ErrorCode::LaneMismatch: return "LaneMismatch";
    case ErrorCode::MissingCostEntry: return "MissingCostEntry";
    case ErrorCode::InvalidCostTable: return "InvalidCostTable";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::UndeclaredVariable: return "UndeclaredVariable";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::NonSdtArithmetic: return "NonSdtArithmetic";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::RegisterPressure: return "RegisterPressure";
    case ErrorCode::ConversionDisabled: return "ConversionDisabled";
    case ErrorCode::UnsupportedConversion: return "UnsupportedConversion";
    case ErrorCode::LaneDisabledAtRuntime: return "LaneDisabledAtRuntime";
    case ErrorCode::IntDivisionByZero: return "IntDivisionByZero";
    case ErrorCode::UnboundInput: return "UnboundInput";
    case ErrorCode::ZeroSizeAllocation: return "ZeroSizeAllocation";
    case ErrorCode::DoubleFree: return "DoubleFree";
    case ErrorCode::UnknownHandle: return "UnknownHandle";
    case ErrorCode::ProtectedLane: return "ProtectedLane";
    case ErrorCode::MemoryFault: return "MemoryFault";
    case ErrorCode::TypeTagMismatch: return "TypeTagMismatch";
    case ErrorCode::StepLimit: return "StepLimit";
    case ErrorCode::TraceMismatch: return "TraceMismatch";
    case ErrorCode::ValidationFailure: return "ValidationFailure";
  }
  return "Unknown";
}

/// Coarse grouping used by the CLI to pick an exit status.
enum class ErrorClass { Usage, Compile, Runtime, Validation };

constexpr ErrorClass classify(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConversionDisabled:
    case ErrorCode::UnsupportedConversion:
    case ErrorCode::LaneDisabledAtRuntime:
    case ErrorCode::IntDivisionByZero:
    case ErrorCode::UnboundInput:
    case ErrorCode::ZeroSizeAllocation:
    case ErrorCode::DoubleFree:
    case ErrorCode::UnknownHandle:
    case ErrorCode::ProtectedLane:
    case ErrorCode::MemoryFault:
    case ErrorCode::TypeTagMismatch:
    case ErrorCode::StepLimit:
    case ErrorCode::TraceMismatch:
      return ErrorClass::Runtime;
    case ErrorCode::ValidationFailure:
      return ErrorClass::Validation;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
    case ErrorCode::EmptyCorpus:
      return ErrorClass::Usage;
    default:
      return ErrorClass::Compile;
  }
}

struct Diagnostic {
  ErrorCode code;
  int line = 0;
  int column = 0;
  std::string message;

  std::string str() const {
    std::string out;
    if (line > 0) out += std::to_string(line) + ":" + std::to_string(column) + ": ";
    out += std::string(to_string(code)) + ": " + message;
    return out;
  }
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        diagnostics_{Diagnostic{code, 0, 0, message}} {}

  explicit Error(std::vector<Diagnostic> diags)
      : std::runtime_error(join(diags)), code_(diags.front().code), diagnostics_(std::move(diags)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string join(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
      if (!out.empty()) out += "\n";
      out += d.str();
    }
    return out;
  }

  ErrorCode code_;
  std::vector<Diagnostic> diagnostics_;
};

}  // namespace typeline
