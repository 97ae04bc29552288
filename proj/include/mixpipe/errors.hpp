#pragma once

#include <stdexcept>
#include <string>

namespace mixpipe {

// Every failure carries one of these codes. The CLI prints them as
// "CodeName: message" and maps them to exit codes (see cli.hpp).
enum class Errc {
    ZeroNormVector,
    ParseError,
    DuplicateSampleId,
    CrossVideoPid,
    BadMagic,
    DimMismatch,
    TruncatedFile,
    InfeasibleSpec,
    EmptyPrediction,
    EmptyGroup,
    UnknownPid,
    MissingCentroid,
    NotEnoughCandidates,
    Infeasible,
    DegenerateBatch,
    ShapeMismatch,
    NoValidGallery,
    UsageError,
    IoError,
    ValidationError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const { return code_; }
    const char* code_name() const { return errc_name(code_); }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace mixpipe
