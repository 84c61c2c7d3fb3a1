#include "gqmc/error.hpp"

namespace gqmc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpace: return "InvalidSpace";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotIdempotent: return "NotIdempotent";
    case ErrorCode::WrongRank: return "WrongRank";
    case ErrorCode::DegenerateDraw: return "DegenerateDraw";
    case ErrorCode::EigengapCollapse: return "EigengapCollapse";
    case ErrorCode::UnsupportedSpace: return "UnsupportedSpace";
    case ErrorCode::KernelSpaceMismatch: return "KernelSpaceMismatch";
    case ErrorCode::InvalidKernel: return "InvalidKernel";
    case ErrorCode::NegativeWce: return "NegativeWce";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::MissingDesignFile: return "MissingDesignFile";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace gqmc
