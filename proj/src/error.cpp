#include "dhj/error.hpp"

namespace dhj {

const char *error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::MaximizerOnBoundary: return "MaximizerOnBoundary";
    case ErrorCode::ConvexityViolation: return "ConvexityViolation";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::UnboundedBelow: return "UnboundedBelow";
    case ErrorCode::UnboundedAbove: return "UnboundedAbove";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::RegularityFailure: return "RegularityFailure";
    case ErrorCode::GradientBlowup: return "GradientBlowup";
    case ErrorCode::EmptyAubry: return "EmptyAubry";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::Escape: return "Escape";
    case ErrorCode::HypothesisViolation: return "HypothesisViolation";
    case ErrorCode::FloorDominates: return "FloorDominates";
    }
    return "Unknown";
}

} // namespace dhj
