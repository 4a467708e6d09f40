#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spikecore/network.hpp"

namespace spikecore::convert {

/// (channels, height, width). Cells are indexed channel-major, then row,
/// then column.
struct Shape3 {
    std::uint32_t c = 0, h = 0, w = 0;

    std::size_t size() const noexcept { return std::size_t{c} * h * w; }
    std::size_t index(std::uint32_t ch, std::uint32_t r, std::uint32_t col) const noexcept
    {
        return (std::size_t{ch} * h + r) * w + col;
    }
    bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& s);

enum class LayerKind { Conv, MaxPool, FC };

/// Neuron parameters of a layer; threshold is in real (pre-quantization) units.
struct NeuronSpec {
    NeuronKind kind = NeuronKind::ANN;
    double threshold = 0.0;
    int nu = -17;
    int lambda = 63;
};

struct LayerSpec {
    LayerKind kind = LayerKind::FC;
    std::uint32_t out = 0;  ///< output channels (Conv) or units (FC)
    std::uint32_t kh = 1, kw = 1;
    std::uint32_t stride = 1;
    std::uint32_t padding = 0;
    std::vector<double> weights; ///< Conv (out, in, kh, kw); FC (out, in)
    std::vector<double> bias;    ///< empty or one per output channel / unit
    NeuronSpec neuron;
    std::optional<double> alpha; ///< fixed quantization scale for this layer
};

/// Output shape of a layer applied to `in`; FC yields (units, 1, 1).
/// ShapeMismatch when the window does not fit or weights have the wrong size.
Shape3 output_shape(const Shape3& in, const LayerSpec& layer);

/// Unique weight parameters (biases excluded).
std::size_t parameter_count(const Shape3& in, const LayerSpec& layer);

struct Quantized {
    std::vector<std::int16_t> values;
    double scale = 1.0;
    bool all_zero = false; ///< scale undefined; values are zero and scale is 1
};

/// Symmetric per-tensor scaling: scale = 32767 / max|w| (or `alpha`),
/// q = round-half-even(w * scale) clamped to int16. InvalidArgument on
/// non-finite weights or a non-positive alpha.
Quantized quantize(std::span<const double> weights, std::optional<double> alpha = std::nullopt);

/// Rounds a real value with the given scale into the int32 threshold range.
std::int64_t quantize_scalar(double value, double scale);

struct ThresholdPolicy {
    double threshold = 0.5; ///< cell active iff value > threshold
};

/// Integer intensities in [0, 2^bits) are split into `bits` binary channels,
/// most significant bit first: input channel c, bit b -> channel c*bits + b.
struct BitSlicePolicy {
    unsigned bits = 8;
};

using BinarizePolicy = std::variant<ThresholdPolicy, BitSlicePolicy>;

/// Keys ("in_<index>") of the axons a frame activates, ascending.
/// ShapeMismatch when the frame size or the resulting grid does not match
/// `model_input`.
std::vector<std::string> binarize_input(std::span<const double> frame, const Shape3& frame_shape,
                                        const Shape3& model_input, const BinarizePolicy& policy);

std::string axon_key(std::size_t index);
/// Conv/pool neurons: "L<layer>_<channel>_<row*w+col>"; FC: "L<layer>_<unit>".
std::string neuron_key(std::size_t layer, const Shape3& shape, std::size_t cell, LayerKind kind);

enum class BiasStrategy { ThresholdShift, BiasAxon, AlwaysOnNeuron };

std::string_view to_string(BiasStrategy s) noexcept;
/// "threshold_shift", "bias_axon", "always_on_neuron"; InvalidArgument otherwise.
BiasStrategy parse_bias_strategy(std::string_view name);

/// Keys of one mapped layer's cells, in cell order.
struct LayerCells {
    Shape3 shape;
    std::vector<std::string> keys;
};

/// Per-layer mappers. Each adds the layer's neurons and the synapses from
/// `in` to the builder and returns the new cells. `models` holds one model
/// name for the whole layer or one per output channel / unit.
LayerCells map_conv_layer(NetworkBuilder& b, const LayerCells& in, const LayerSpec& spec,
                          std::span<const std::int16_t> weights, std::size_t layer,
                          std::span<const std::string> models);
LayerCells map_pool_layer(NetworkBuilder& b, const LayerCells& in, const LayerSpec& spec, std::size_t layer,
                          const std::string& model);
LayerCells map_fc_layer(NetworkBuilder& b, const LayerCells& in, const LayerSpec& spec,
                        std::span<const std::int16_t> weights, std::size_t layer,
                        std::span<const std::string> models);

/// Threshold per channel / unit after folding in the bias: theta - b.
std::vector<std::int64_t> shifted_thresholds(std::int64_t theta, std::span<const std::int64_t> bias);

/// Adds the bias source of one layer for the axon and always-on strategies:
/// axon or ANN neuron "bias_L<layer>" with a weight-b synapse to every cell
/// whose channel bias is nonzero. Returns false (adding nothing) when all
/// biases are zero. WeightOverflow when a bias does not fit 16 bits.
bool apply_bias_source(NetworkBuilder& b, const LayerCells& cells, std::span<const std::int64_t> bias,
                       BiasStrategy strategy, std::size_t layer, const std::string& always_on_model);

struct ConvertOptions {
    BiasStrategy bias = BiasStrategy::ThresholdShift;
    /// Overrides every layer's quantization scale when set.
    std::optional<double> alpha;
    EngineConfig config;
};

/// Counts of the mapped layer stack. Input axons, layer neurons, unique
/// weight parameters and unrolled weight synapses exclude bias machinery,
/// which is tallied separately.
struct StructuralReport {
    std::size_t axons = 0;
    std::size_t neurons = 0;
    std::size_t params = 0;
    std::size_t synapses = 0;
    std::size_t bias_sources = 0;
    std::size_t bias_synapses = 0;

    bool operator==(const StructuralReport&) const = default;
};

struct Conversion {
    Network network;
    StructuralReport report;
    std::vector<double> scales; ///< quantization scale per layer (1 for pooling)
    std::vector<Shape3> shapes; ///< output shape per layer
};

/// Maps a layer stack onto a network. Input cells become axons, the last
/// layer's neurons become outputs. Errors name the offending layer.
Conversion convert_model(const Shape3& input, const std::vector<LayerSpec>& layers, const ConvertOptions& options = {});

/// Counts derived from shapes alone, without building the network (bias
/// fields are zero).
StructuralReport closed_form_report(const Shape3& input, const std::vector<LayerSpec>& layers);

/// Layered-model archive: a directory holding manifest.json and raw
/// little-endian float32 tensor files.
///
///   {"format": "spikecore-model", "version": 1, "input_shape": [c, h, w],
///    "layers": [{"kind": "conv", "out_channels": 6, "kernel": [5, 5], "stride": 2, "padding": 0,
///                "weights": "l0.w.f32", "bias": "l0.b.f32",
///                "neuron": {"kind": "ANN", "threshold": 0.0, "nu": -17, "lambda": 63}, "alpha": 1.0},
///               {"kind": "maxpool", "kernel": [2, 2], "stride": 2},
///               {"kind": "fc", "out_units": 10, "weights": "l2.w.f32"}]}
struct ModelArchive {
    Shape3 input;
    std::vector<LayerSpec> layers;
};

ModelArchive load_archive(const std::string& dir);
/// Writes manifest.json and tensors (weights rounded to float32).
void save_archive(const std::string& dir, const ModelArchive& model);

} // namespace spikecore::convert
