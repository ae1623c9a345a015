#include "homogenize/error.hpp"

namespace homog {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::ValidationFailed: return "validation failed";
        case ErrorKind::NonStabilizing: return "non-stabilizing Cesaro average";
        case ErrorKind::FactorizationFailure: return "factorization failure";
        case ErrorKind::StepTooCoarse: return "step too coarse";
        case ErrorKind::NonFinite: return "non-finite value";
        case ErrorKind::ContractionViolated: return "contraction violated";
        case ErrorKind::RankDeficientBasis: return "rank-deficient basis";
        case ErrorKind::CflViolation: return "CFL violation";
        case ErrorKind::OscillationUnresolved: return "oscillation unresolved";
        case ErrorKind::RegionExceedsGrid: return "region exceeds grid";
        case ErrorKind::ExcessiveBoxExit: return "excessive box exit";
        case ErrorKind::Io: return "I/O error";
        case ErrorKind::Config: return "config error";
    }
    return "error";
}

}  // namespace homog
