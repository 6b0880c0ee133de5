#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmrec {

enum class ErrorCode {
  Io,
  Malformed,
  DuplicateItem,
  UnknownToken,
  UnknownUser,
  UnknownModality,
  MissingFeatureRow,
  Degenerate,
  DimMismatch,
  EmptyModalities,
  BadMagic,
  BadVersion,
  BadDtype,
  TruncatedFile,
  SizeMismatch,
  InvalidValue,
  InsufficientItems,
  EmptyGrid,
  EmptyRecords,
  KeyMismatch,
  Config,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::Malformed: return "Malformed";
    case ErrorCode::DuplicateItem: return "DuplicateItem";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::UnknownModality: return "UnknownModality";
    case ErrorCode::MissingFeatureRow: return "MissingFeatureRow";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyModalities: return "EmptyModalities";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::BadDtype: return "BadDtype";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::InsufficientItems: return "InsufficientItems";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

/// Library error. what() reads "<Code>: <detail>", or
/// "<stage>: <Code>: <detail>" once a pipeline stage label is attached.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail)
      : std::runtime_error(compose("", code, detail)),
        code_(code),
        detail_(std::move(detail)) {}

  Error(std::string stage, ErrorCode code, std::string detail)
      : std::runtime_error(compose(stage, code, detail)),
        code_(code),
        stage_(std::move(stage)),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  Error with_stage(std::string stage) const {
    return Error(std::move(stage), code_, detail_);
  }

 private:
  static std::string compose(const std::string& stage, ErrorCode code,
                             const std::string& detail) {
    std::string out;
    if (!stage.empty()) out += stage + ": ";
    out += to_string(code);
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace mmrec
