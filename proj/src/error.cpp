#include "wdro/error.hpp"

namespace wdro {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NegativeWeight: return "NegativeWeight";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::NotNormalizable: return "NotNormalizable";
        case ErrorKind::SampleOffSupport: return "SampleOffSupport";
        case ErrorKind::SupportMismatch: return "SupportMismatch";
        case ErrorKind::InvalidSupport: return "InvalidSupport";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::NegativeLambda: return "NegativeLambda";
        case ErrorKind::InvalidTolerance: return "InvalidTolerance";
        case ErrorKind::NegativeEpsilon: return "NegativeEpsilon";
        case ErrorKind::InstanceTooLarge: return "InstanceTooLarge";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::NonPositiveEta: return "NonPositiveEta";
        case ErrorKind::MissingPair: return "MissingPair";
        case ErrorKind::IncompleteTable: return "IncompleteTable";
        case ErrorKind::PolicyContextMismatch: return "PolicyContextMismatch";
        case ErrorKind::EmptyExperiment: return "EmptyExperiment";
        case ErrorKind::UnknownContext: return "UnknownContext";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::UnparsableRow: return "UnparsableRow";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::UnparsableOutcome: return "UnparsableOutcome";
        case ErrorKind::InvalidShift: return "InvalidShift";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Numerical: return "Numerical";
    }
    return "Unknown";
}

}  // namespace wdro
