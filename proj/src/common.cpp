#include "shapelab/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace shapelab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
        case ErrorCode::MeshQualityFailure: return "MeshQualityFailure";
        case ErrorCode::DegenerateStrip: return "DegenerateStrip";
        case ErrorCode::ComponentNotFound: return "ComponentNotFound";
        case ErrorCode::SingularTriangle: return "SingularTriangle";
        case ErrorCode::MeshFoldOver: return "MeshFoldOver";
        case ErrorCode::EmptyBoundary: return "EmptyBoundary";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::IndefiniteMass: return "IndefiniteMass";
        case ErrorCode::AmbiguousCluster: return "AmbiguousCluster";
        case ErrorCode::OptimizerStall: return "OptimizerStall";
        case ErrorCode::ProjectionDiverged: return "ProjectionDiverged";
        case ErrorCode::ZeroGradient: return "ZeroGradient";
        case ErrorCode::BracketNotFound: return "BracketNotFound";
        case ErrorCode::VolumeMismatch: return "VolumeMismatch";
        case ErrorCode::CenteringFailed: return "CenteringFailed";
        case ErrorCode::AllZeroFunction: return "AllZeroFunction";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

int exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigInvalid:
            return 1;
        case ErrorCode::NoConvergence:
        case ErrorCode::IndefiniteMass:
        case ErrorCode::AmbiguousCluster:
        case ErrorCode::OptimizerStall:
        case ErrorCode::ProjectionDiverged:
        case ErrorCode::ZeroGradient:
        case ErrorCode::BracketNotFound:
            return 2;
        case ErrorCode::NonPositiveRadius:
        case ErrorCode::MeshQualityFailure:
        case ErrorCode::DegenerateStrip:
        case ErrorCode::ComponentNotFound:
        case ErrorCode::SingularTriangle:
        case ErrorCode::MeshFoldOver:
        case ErrorCode::EmptyBoundary:
            return 3;
        case ErrorCode::VolumeMismatch:
        case ErrorCode::CenteringFailed:
        case ErrorCode::AllZeroFunction:
        case ErrorCode::DomainError:
        case ErrorCode::InvalidArgument:
            return 4;
        case ErrorCode::Internal:
            return 5;
    }
    return 5;
}

int thread_cap() {
    if (const char* env = std::getenv("SHAPELAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace shapelab
