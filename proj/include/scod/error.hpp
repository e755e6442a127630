#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scod {

enum class ErrorKind {
  InvalidArgument,
  InvalidDof,
  InvalidAction,
  SpecMismatch,
  DimensionMismatch,
  ShapeMismatch,
  PlacementFailure,
  EmptyDofSet,
  EmptyDataset,
  Format,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidDof: return "InvalidDof";
    case ErrorKind::InvalidAction: return "InvalidAction";
    case ErrorKind::SpecMismatch: return "SpecMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::PlacementFailure: return "PlacementFailure";
    case ErrorKind::EmptyDofSet: return "EmptyDofSet";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::Format: return "Format";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace scod
