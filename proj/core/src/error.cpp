#include "rpmap/error.hpp"

namespace rpmap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::SingularDiffusion: return "SingularDiffusion";
    case ErrorCode::NoCrossing: return "NoCrossing";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::EmptyRow: return "EmptyRow";
    case ErrorCode::DefectiveCluster: return "DefectiveCluster";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NonReturning: return "NonReturning";
    case ErrorCode::NoGap: return "NoGap";
    case ErrorCode::ZeroEigenfunction: return "ZeroEigenfunction";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::LaplaceDivergence: return "LaplaceDivergence";
    case ErrorCode::BallOverlap: return "BallOverlap";
    case ErrorCode::NotInvariant: return "NotInvariant";
    case ErrorCode::AmbiguousHierarchy: return "AmbiguousHierarchy";
    case ErrorCode::NoContraction: return "NoContraction";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace rpmap
