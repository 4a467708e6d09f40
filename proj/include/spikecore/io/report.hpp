#pragma once

#include <string>
#include <string_view>

#include "spikecore/runner.hpp"

namespace spikecore::io {

/// Line-oriented run report, schema version 1. Keys are percent-encoded so
/// every field is a single whitespace-free token:
///
///   spikecore-report 1
///   backend <oracle|engine>
///   seed <u64>
///   network axons=<n> neurons=<n> outputs=<k1>,<k2>,...
///   cost_config energy_per_access=<x> cycles_per_row=<n> clock_period=<x>
///   step <t> spikes=<k1>,<k2>,... [pointer_reads=<n> synapse_rows=<n> scan_cycles=<n> cycles=<n>]
///   ...
///   total steps=<n> output_spikes=<n> [pointer_reads=... accesses=<n> cycles=<n> energy=<x> latency=<x>]
///   inference <i> first_step=<t> steps=<n> output_spikes=<n> [accesses=<n> cycles=<n> energy=<x> latency=<x>]
///   ...
///   summary inferences=<n> [energy_mean=<x> energy_sd=<x> latency_mean=<x> latency_sd=<x>]
///   membranes <k>=<v> ...
///   end
///
/// Bracketed fields appear for the engine backend only. Reals use the
/// shortest round-trip decimal form; SD is the sample standard deviation.
std::string format_report(const RunRecord& run);

/// Percent-encodes bytes outside [A-Za-z0-9_.:/+-].
std::string encode_key(std::string_view key);

} // namespace spikecore::io
