#include "spikecore/error.hpp"

namespace spikecore {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::DanglingTarget: return "DanglingTarget";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::WeightOverflow: return "WeightOverflow";
    case ErrorCode::FanOutExceeded: return "FanOutExceeded";
    case ErrorCode::UnknownOutputKey: return "UnknownOutputKey";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::UnknownAxonKey: return "UnknownAxonKey";
    case ErrorCode::UnknownNeuronKey: return "UnknownNeuronKey";
    case ErrorCode::NoSuchSynapse: return "NoSuchSynapse";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::CorruptImage: return "CorruptImage";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail)
    , code_(code)
    , detail_(detail)
{
}

} // namespace spikecore
