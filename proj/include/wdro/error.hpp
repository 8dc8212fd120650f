#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wdro {

enum class ErrorKind {
    // distributions
    NegativeWeight,
    LengthMismatch,
    NotNormalizable,
    SampleOffSupport,
    SupportMismatch,
    InvalidSupport,
    // transport
    DegenerateInput,
    TooFewSamples,
    // dual solvers
    NegativeLambda,
    InvalidTolerance,
    NegativeEpsilon,
    InstanceTooLarge,
    EmptyInput,
    NonPositiveEta,
    // evaluation / learning
    MissingPair,
    IncompleteTable,
    PolicyContextMismatch,
    EmptyExperiment,
    UnknownContext,
    InvalidConfig,
    DimensionTooLarge,
    // data
    SchemaMismatch,
    UnparsableRow,
    EmptyDataset,
    UnparsableOutcome,
    InvalidShift,
    // environment
    Io,
    Numerical,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every library failure is reported as an Error carrying a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace wdro
