#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spikecore {

enum class ErrorCode {
    DanglingTarget,
    DuplicateKey,
    WeightOverflow,
    FanOutExceeded,
    UnknownOutputKey,
    UnknownModel,
    UnknownAxonKey,
    UnknownNeuronKey,
    NoSuchSynapse,
    DimensionMismatch,
    CapacityExceeded,
    CorruptImage,
    IndexOutOfRange,
    DegenerateInput,
    ShapeMismatch,
    InvalidArgument,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; code() identifies the
// failure class, what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace spikecore
