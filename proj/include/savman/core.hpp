#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace savman {

using NodeId = std::int32_t;
using AuctionId = std::int64_t;
using PacketId = std::int64_t;
using Credits = std::int64_t;
using SimTime = double;

inline constexpr NodeId kNoNode = -1;

enum class Errc {
  EmptyChain,
  FineOrderViolation,
  LatticeTooLarge,
  UnknownKind,
  MalformedSpec,
  InvalidScenario,
  ParseError,
  UnknownStrategy,
  SchemaVersionMismatch,
  IoFailure,
  InvalidDecision,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyChain: return "EmptyChain";
    case Errc::FineOrderViolation: return "FineOrderViolation";
    case Errc::LatticeTooLarge: return "LatticeTooLarge";
    case Errc::UnknownKind: return "UnknownKind";
    case Errc::MalformedSpec: return "MalformedSpec";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownStrategy: return "UnknownStrategy";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::IoFailure: return "IoFailure";
    case Errc::InvalidDecision: return "InvalidDecision";
  }
  return "Unknown";
}

// All recoverable failures in the library carry one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

  // Scenario/configuration problems (exit code 1 in the CLI) as opposed to
  // failures during a run.
  bool is_config_error() const noexcept {
    switch (code_) {
      case Errc::MalformedSpec:
      case Errc::InvalidScenario:
      case Errc::ParseError:
      case Errc::UnknownStrategy:
      case Errc::SchemaVersionMismatch:
      case Errc::UnknownKind:
        return true;
      default:
        return false;
    }
  }

 private:
  Errc code_;
};

}  // namespace savman
