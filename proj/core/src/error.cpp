#include "pfa/error.hpp"

namespace pfa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kBehindCamera: return "behind camera";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kEmptyMesh: return "empty mesh";
    case ErrorCode::kDegenerateTriangle: return "degenerate triangle";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kMeshHashMismatch: return "mesh hash mismatch";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kDegenerate: return "degenerate configuration";
    case ErrorCode::kSolver: return "solver error";
    case ErrorCode::kRobustFailure: return "robust estimation failure";
    case ErrorCode::kIo: return "I/O error";
  }
  return "unknown error";
}

}  // namespace pfa
