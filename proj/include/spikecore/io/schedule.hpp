#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spikecore::io {

/// Input schedule: axon keys to activate per step, grouped into inference
/// blocks. JSON forms (version 1):
///
///   {"format": "spikecore-schedule", "version": 1, "inferences": [[["a0", "a3"], []], ...]}
///   {"format": "spikecore-schedule", "version": 1, "steps": [["a0"], [], ...]}
///
/// The "steps" form is a single inference block.
struct Schedule {
    std::vector<std::vector<std::string>> steps;
    /// Lengths of consecutive inference blocks; they sum to steps.size().
    std::vector<std::size_t> blocks;

    bool operator==(const Schedule&) const = default;
};

Schedule parse_schedule(std::string_view text);
Schedule load_schedule(const std::string& path);
std::string to_schedule_json(const Schedule& s);

/// Pads with empty steps (extending the last block) or truncates (cutting
/// blocks) to exactly `steps`.
Schedule fit_steps(Schedule s, std::size_t steps);

} // namespace spikecore::io
