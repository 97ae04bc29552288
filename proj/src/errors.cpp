#include "mixpipe/errors.hpp"

namespace mixpipe {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::ZeroNormVector: return "ZeroNormVector";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateSampleId: return "DuplicateSampleId";
    case Errc::CrossVideoPid: return "CrossVideoPid";
    case Errc::BadMagic: return "BadMagic";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::InfeasibleSpec: return "InfeasibleSpec";
    case Errc::EmptyPrediction: return "EmptyPrediction";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::UnknownPid: return "UnknownPid";
    case Errc::MissingCentroid: return "MissingCentroid";
    case Errc::NotEnoughCandidates: return "NotEnoughCandidates";
    case Errc::Infeasible: return "Infeasible";
    case Errc::DegenerateBatch: return "DegenerateBatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NoValidGallery: return "NoValidGallery";
    case Errc::UsageError: return "UsageError";
    case Errc::IoError: return "IoError";
    case Errc::ValidationError: return "ValidationError";
    }
    return "UnknownError";
}

} // namespace mixpipe
