#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "spikecore/network.hpp"

namespace spikecore::io {

/// JSON netlist, schema "spikecore-netlist" version 1:
///
///   {
///     "format": "spikecore-netlist", "version": 1,
///     "config": {"max_fan_out": 4096, "saturating": true},      (optional)
///     "models": {"<name>": {"kind": "LIF"|"ANN", "theta": int,
///                           "nu": int (default -17), "lambda": int (LIF, default 0)}},
///     "axons": {"<key>": [["<post>", weight], ...]},
///     "neurons": {"<key>": {"model": "<name>", "synapses": [["<post>", weight], ...]}},
///     "outputs": ["<key>", ...],
///     "bias_axons": ["<key>", ...]                               (optional)
///   }
///
/// Object member order defines insertion order. Syntax errors raise
/// ParseError with line and column; semantic errors carry the JSON path and,
/// where it can be found, the line.
Network parse_netlist(std::string_view text);
Network load_netlist(const std::string& path);

/// Canonical text: neurons in index order, synapses by post index.
/// parse_netlist(to_netlist_json(n)) == n.
std::string to_netlist_json(const Network& net);
void save_netlist(const std::string& path, const Network& net);

/// Whole-file helpers shared by the readers; IoError on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

} // namespace spikecore::io
