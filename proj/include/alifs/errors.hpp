#pragma once

#include <stdexcept>
#include <string>

namespace alifs {

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg) : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define ALIFS_ERROR(Name)                                                   \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}        \
    };

ALIFS_ERROR(InvalidModel)
ALIFS_ERROR(DomainError)
ALIFS_ERROR(MomentDivergence)
ALIFS_ERROR(EigenDegenerate)
ALIFS_ERROR(NotDefinable)
ALIFS_ERROR(NotStochastic)
ALIFS_ERROR(NotIrreducible)
ALIFS_ERROR(AmbiguousClassification)
ALIFS_ERROR(DegenerateSpectrum)
ALIFS_ERROR(InfiniteDrift)
ALIFS_ERROR(InsufficientTail)
ALIFS_ERROR(NotCase1)
ALIFS_ERROR(NotUnilateral)
ALIFS_ERROR(NotSeparated)
ALIFS_ERROR(HypothesisViolated)
ALIFS_ERROR(Unsupported)
ALIFS_ERROR(DriftUnavailable)
ALIFS_ERROR(EnvelopeUnavailable)
ALIFS_ERROR(ConfigError)
ALIFS_ERROR(IoError)

#undef ALIFS_ERROR

}  // namespace alifs
