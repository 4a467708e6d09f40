#include "spikecore/converter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "spikecore/error.hpp"

namespace spikecore::convert {

namespace {

std::string layer_name(std::size_t layer) { return "layer " + std::to_string(layer); }

std::size_t kernel_volume(const LayerSpec& l) { return std::size_t{l.kh} * l.kw; }

// Output extent of a sliding window along one axis; 0 when it does not fit.
std::uint32_t window_extent(std::uint32_t in, std::uint32_t k, std::uint32_t stride, std::uint32_t pad)
{
    const std::uint64_t padded = std::uint64_t{in} + 2ull * pad;
    if (k == 0 || stride == 0 || padded < k) {
        return 0;
    }
    return static_cast<std::uint32_t>((padded - k) / stride + 1);
}

std::size_t channel_of(const Shape3& shape, std::size_t cell) { return cell / (std::size_t{shape.h} * shape.w); }

const std::string& model_for(std::span<const std::string> models, std::size_t channel)
{
    return models.size() == 1 ? models[0] : models[channel];
}

void check_models(std::span<const std::string> models, std::size_t channels, const char* what)
{
    if (models.size() != 1 && models.size() != channels) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": expected 1 or " + std::to_string(channels) +
                                                    " model names, got " + std::to_string(models.size()));
    }
}

NeuronModel make_model(const NeuronSpec& n, std::int64_t theta)
{
    return n.kind == NeuronKind::LIF ? NeuronModel::lif(theta, n.nu, n.lambda) : NeuronModel::ann(theta, n.nu);
}

// Cells of a layer whose window lies (at least partly) inside the input, per
// output position along one axis: number of kernel taps that hit the input.
std::size_t taps_along(std::uint32_t out_pos, std::uint32_t in, std::uint32_t k, std::uint32_t stride,
                       std::uint32_t pad)
{
    std::size_t n = 0;
    for (std::uint32_t i = 0; i < k; ++i) {
        const std::int64_t p = std::int64_t{out_pos} * stride + i - pad;
        n += p >= 0 && p < in;
    }
    return n;
}

std::size_t window_synapses(const Shape3& in, const Shape3& out, const LayerSpec& l)
{
    std::size_t rows = 0, cols = 0;
    for (std::uint32_t r = 0; r < out.h; ++r) {
        rows += taps_along(r, in.h, l.kh, l.stride, l.padding);
    }
    for (std::uint32_t c = 0; c < out.w; ++c) {
        cols += taps_along(c, in.w, l.kw, l.stride, l.padding);
    }
    return rows * cols;
}

} // namespace

std::string to_string(const Shape3& s)
{
    return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

Shape3 output_shape(const Shape3& in, const LayerSpec& layer)
{
    if (in.size() == 0) {
        throw Error(ErrorCode::ShapeMismatch, "empty input shape " + to_string(in));
    }
    switch (layer.kind) {
    case LayerKind::FC: {
        if (layer.out == 0) {
            throw Error(ErrorCode::ShapeMismatch, "fc layer with zero units");
        }
        const std::size_t want = std::size_t{layer.out} * in.size();
        if (layer.weights.size() != want) {
            throw Error(ErrorCode::ShapeMismatch, "fc weights: expected " + std::to_string(want) + " values for " +
                                                      std::to_string(layer.out) + "x" + std::to_string(in.size()) +
                                                      ", got " + std::to_string(layer.weights.size()));
        }
        return {layer.out, 1, 1};
    }
    case LayerKind::Conv:
    case LayerKind::MaxPool: {
        const bool conv = layer.kind == LayerKind::Conv;
        const std::uint32_t h = window_extent(in.h, layer.kh, layer.stride, layer.padding);
        const std::uint32_t w = window_extent(in.w, layer.kw, layer.stride, layer.padding);
        if (h == 0 || w == 0) {
            throw Error(ErrorCode::ShapeMismatch, std::string(conv ? "conv" : "pool") + " window " +
                                                      std::to_string(layer.kh) + "x" + std::to_string(layer.kw) +
                                                      " stride " + std::to_string(layer.stride) +
                                                      " does not fit input " + to_string(in));
        }
        if (!conv) {
            return {in.c, h, w};
        }
        if (layer.out == 0) {
            throw Error(ErrorCode::ShapeMismatch, "conv layer with zero output channels");
        }
        const std::size_t want = std::size_t{layer.out} * in.c * kernel_volume(layer);
        if (layer.weights.size() != want) {
            throw Error(ErrorCode::ShapeMismatch,
                        "conv weights: expected " + std::to_string(want) + " values for (" + std::to_string(layer.out) +
                            "," + std::to_string(in.c) + "," + std::to_string(layer.kh) + "," +
                            std::to_string(layer.kw) + "), got " + std::to_string(layer.weights.size()));
        }
        return {layer.out, h, w};
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown layer kind");
}

std::size_t parameter_count(const Shape3& in, const LayerSpec& layer)
{
    switch (layer.kind) {
    case LayerKind::FC:
        return std::size_t{layer.out} * in.size();
    case LayerKind::Conv:
        return std::size_t{layer.out} * in.c * kernel_volume(layer);
    case LayerKind::MaxPool:
        return 0;
    }
    return 0;
}

Quantized quantize(std::span<const double> weights, std::optional<double> alpha)
{
    double max_abs = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w)) {
            throw Error(ErrorCode::InvalidArgument, "non-finite weight");
        }
        max_abs = std::max(max_abs, std::abs(w));
    }
    if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha))) {
        throw Error(ErrorCode::InvalidArgument, "quantization alpha must be positive and finite");
    }
    Quantized q;
    q.values.assign(weights.size(), 0);
    if (!alpha && max_abs == 0.0) {
        q.all_zero = true;
        return q;
    }
    q.scale = alpha ? *alpha : 32767.0 / max_abs;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        // nearbyint honours the default round-to-nearest-even mode.
        const double r = std::clamp(std::nearbyint(weights[i] * q.scale), -32768.0, 32767.0);
        q.values[i] = static_cast<std::int16_t>(r);
    }
    return q;
}

std::int64_t quantize_scalar(double value, double scale)
{
    const double r = std::nearbyint(value * scale);
    if (!std::isfinite(r)) {
        throw Error(ErrorCode::InvalidArgument, "non-finite value after scaling");
    }
    constexpr double lim = 4611686018427387904.0; // 2^62
    return static_cast<std::int64_t>(std::clamp(r, -lim, lim));
}

std::vector<std::string> binarize_input(std::span<const double> frame, const Shape3& frame_shape,
                                        const Shape3& model_input, const BinarizePolicy& policy)
{
    if (frame.size() != frame_shape.size()) {
        throw Error(ErrorCode::ShapeMismatch, "frame holds " + std::to_string(frame.size()) + " values, shape " +
                                                  to_string(frame_shape) + " needs " +
                                                  std::to_string(frame_shape.size()));
    }
    std::vector<std::string> keys;
    if (const auto* t = std::get_if<ThresholdPolicy>(&policy)) {
        if (!(frame_shape == model_input)) {
            throw Error(ErrorCode::ShapeMismatch,
                        "frame shape " + to_string(frame_shape) + " != model input " + to_string(model_input));
        }
        for (std::size_t i = 0; i < frame.size(); ++i) {
            if (frame[i] > t->threshold) {
                keys.push_back(axon_key(i));
            }
        }
        return keys;
    }
    const unsigned bits = std::get<BitSlicePolicy>(policy).bits;
    if (bits == 0 || bits > 31) {
        throw Error(ErrorCode::InvalidArgument, "bit-slice width must be in [1, 31]");
    }
    const Shape3 sliced{frame_shape.c * bits, frame_shape.h, frame_shape.w};
    if (!(sliced == model_input)) {
        throw Error(ErrorCode::ShapeMismatch, "bit-sliced frame shape " + to_string(sliced) + " != model input " +
                                                  to_string(model_input));
    }
    const double top = std::ldexp(1.0, static_cast<int>(bits)) - 1;
    const std::size_t plane = std::size_t{frame_shape.h} * frame_shape.w;
    for (std::uint32_t c = 0; c < frame_shape.c; ++c) {
        for (unsigned b = 0; b < bits; ++b) {
            const unsigned shift = bits - 1 - b;
            for (std::size_t p = 0; p < plane; ++p) {
                const double v = frame[c * plane + p];
                if (!std::isfinite(v)) {
                    throw Error(ErrorCode::InvalidArgument, "non-finite frame value");
                }
                const auto level = static_cast<std::uint32_t>(std::clamp(std::floor(v), 0.0, top));
                if ((level >> shift) & 1u) {
                    keys.push_back(axon_key((std::size_t{c} * bits + b) * plane + p));
                }
            }
        }
    }
    return keys;
}

std::string axon_key(std::size_t index) { return "in_" + std::to_string(index); }

std::string neuron_key(std::size_t layer, const Shape3& shape, std::size_t cell, LayerKind kind)
{
    if (kind == LayerKind::FC) {
        return "L" + std::to_string(layer) + "_" + std::to_string(cell);
    }
    const std::size_t plane = std::size_t{shape.h} * shape.w;
    return "L" + std::to_string(layer) + "_" + std::to_string(cell / plane) + "_" + std::to_string(cell % plane);
}

std::string_view to_string(BiasStrategy s) noexcept
{
    switch (s) {
    case BiasStrategy::ThresholdShift:
        return "threshold_shift";
    case BiasStrategy::BiasAxon:
        return "bias_axon";
    case BiasStrategy::AlwaysOnNeuron:
        return "always_on_neuron";
    }
    return "?";
}

BiasStrategy parse_bias_strategy(std::string_view name)
{
    for (auto s : {BiasStrategy::ThresholdShift, BiasStrategy::BiasAxon, BiasStrategy::AlwaysOnNeuron}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown bias strategy '" + std::string(name) +
                                                "' (threshold_shift, bias_axon, always_on_neuron)");
}

LayerCells map_conv_layer(NetworkBuilder& b, const LayerCells& in, const LayerSpec& spec,
                          std::span<const std::int16_t> weights, std::size_t layer,
                          std::span<const std::string> models)
{
    const Shape3 out = output_shape(in.shape, spec);
    check_models(models, out.c, "conv layer");
    if (weights.size() != spec.weights.size() || in.keys.size() != in.shape.size()) {
        throw Error(ErrorCode::ShapeMismatch, "conv layer: quantized weights or input keys do not match shapes");
    }
    LayerCells cells{out, {}};
    cells.keys.reserve(out.size());
    for (std::size_t cell = 0; cell < out.size(); ++cell) {
        cells.keys.push_back(neuron_key(layer, out, cell, LayerKind::Conv));
        b.add_neuron(cells.keys.back(), model_for(models, channel_of(out, cell)));
    }
    const std::int64_t pad = spec.padding;
    for (std::uint32_t oc = 0; oc < out.c; ++oc) {
        for (std::uint32_t orow = 0; orow < out.h; ++orow) {
            for (std::uint32_t ocol = 0; ocol < out.w; ++ocol) {
                const std::string& post = cells.keys[out.index(oc, orow, ocol)];
                for (std::uint32_t ic = 0; ic < in.shape.c; ++ic) {
                    for (std::uint32_t ki = 0; ki < spec.kh; ++ki) {
                        const std::int64_t r = std::int64_t{orow} * spec.stride + ki - pad;
                        if (r < 0 || r >= in.shape.h) {
                            continue; // zero padding contributes nothing
                        }
                        for (std::uint32_t kj = 0; kj < spec.kw; ++kj) {
                            const std::int64_t c = std::int64_t{ocol} * spec.stride + kj - pad;
                            if (c < 0 || c >= in.shape.w) {
                                continue;
                            }
                            const std::size_t wi = ((std::size_t{oc} * in.shape.c + ic) * spec.kh + ki) * spec.kw + kj;
                            const auto& pre = in.keys[in.shape.index(ic, static_cast<std::uint32_t>(r),
                                                                     static_cast<std::uint32_t>(c))];
                            b.connect(pre, post, weights[wi]);
                        }
                    }
                }
            }
        }
    }
    return cells;
}

LayerCells map_pool_layer(NetworkBuilder& b, const LayerCells& in, const LayerSpec& spec, std::size_t layer,
                          const std::string& model)
{
    const Shape3 out = output_shape(in.shape, spec);
    if (in.keys.size() != in.shape.size()) {
        throw Error(ErrorCode::ShapeMismatch, "pool layer: input keys do not match shape");
    }
    LayerCells cells{out, {}};
    cells.keys.reserve(out.size());
    for (std::size_t cell = 0; cell < out.size(); ++cell) {
        cells.keys.push_back(neuron_key(layer, out, cell, LayerKind::MaxPool));
        b.add_neuron(cells.keys.back(), model);
    }
    const std::int64_t pad = spec.padding;
    for (std::uint32_t ch = 0; ch < out.c; ++ch) {
        for (std::uint32_t orow = 0; orow < out.h; ++orow) {
            for (std::uint32_t ocol = 0; ocol < out.w; ++ocol) {
                const std::string& post = cells.keys[out.index(ch, orow, ocol)];
                for (std::uint32_t ki = 0; ki < spec.kh; ++ki) {
                    const std::int64_t r = std::int64_t{orow} * spec.stride + ki - pad;
                    if (r < 0 || r >= in.shape.h) {
                        continue;
                    }
                    for (std::uint32_t kj = 0; kj < spec.kw; ++kj) {
                        const std::int64_t c = std::int64_t{ocol} * spec.stride + kj - pad;
                        if (c < 0 || c >= in.shape.w) {
                            continue;
                        }
                        b.connect(in.keys[in.shape.index(ch, static_cast<std::uint32_t>(r),
                                                         static_cast<std::uint32_t>(c))],
                                  post, 1);
                    }
                }
            }
        }
    }
    return cells;
}

LayerCells map_fc_layer(NetworkBuilder& b, const LayerCells& in, const LayerSpec& spec,
                        std::span<const std::int16_t> weights, std::size_t layer,
                        std::span<const std::string> models)
{
    const Shape3 out = output_shape(in.shape, spec);
    check_models(models, out.c, "fc layer");
    const std::size_t n_in = in.shape.size();
    if (weights.size() != spec.weights.size() || in.keys.size() != n_in) {
        throw Error(ErrorCode::ShapeMismatch, "fc layer: quantized weights or input keys do not match shapes");
    }
    LayerCells cells{out, {}};
    cells.keys.reserve(out.size());
    for (std::size_t u = 0; u < out.size(); ++u) {
        cells.keys.push_back(neuron_key(layer, out, u, LayerKind::FC));
        b.add_neuron(cells.keys.back(), model_for(models, u));
    }
    // Source-major so each presynaptic list is appended in one pass.
    for (std::size_t i = 0; i < n_in; ++i) {
        for (std::size_t u = 0; u < out.size(); ++u) {
            b.connect(in.keys[i], cells.keys[u], weights[u * n_in + i]);
        }
    }
    return cells;
}

std::vector<std::int64_t> shifted_thresholds(std::int64_t theta, std::span<const std::int64_t> bias)
{
    std::vector<std::int64_t> out;
    out.reserve(bias.size());
    for (auto b : bias) {
        out.push_back(theta - b);
    }
    return out;
}

bool apply_bias_source(NetworkBuilder& b, const LayerCells& cells, std::span<const std::int64_t> bias,
                       BiasStrategy strategy, std::size_t layer, const std::string& always_on_model)
{
    if (strategy == BiasStrategy::ThresholdShift) {
        throw Error(ErrorCode::InvalidArgument, "threshold_shift adds no bias source");
    }
    if (bias.size() != cells.shape.c) {
        throw Error(ErrorCode::ShapeMismatch, layer_name(layer) + ": " + std::to_string(bias.size()) +
                                                  " biases for " + std::to_string(cells.shape.c) + " channels");
    }
    for (std::size_t ch = 0; ch < bias.size(); ++ch) {
        if (!fits_int16(bias[ch])) {
            throw Error(ErrorCode::WeightOverflow, layer_name(layer) + ": quantized bias " + std::to_string(bias[ch]) +
                                                       " of channel " + std::to_string(ch) + " exceeds 16 bits");
        }
    }
    if (std::all_of(bias.begin(), bias.end(), [](std::int64_t v) { return v == 0; })) {
        return false;
    }
    const std::string key = "bias_L" + std::to_string(layer);
    if (strategy == BiasStrategy::BiasAxon) {
        b.add_axon(key);
        b.add_bias_axon(key);
    } else {
        b.add_neuron(key, always_on_model);
    }
    for (std::size_t cell = 0; cell < cells.keys.size(); ++cell) {
        const std::int64_t w = bias[channel_of(cells.shape, cell)];
        if (w != 0) {
            b.connect(key, cells.keys[cell], w);
        }
    }
    return true;
}

StructuralReport closed_form_report(const Shape3& input, const std::vector<LayerSpec>& layers)
{
    StructuralReport r;
    r.axons = input.size();
    Shape3 in = input;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& spec = layers[l];
        Shape3 out;
        try {
            out = output_shape(in, spec);
        } catch (const Error& e) {
            throw Error(e.code(), layer_name(l) + ": " + e.detail());
        }
        r.neurons += out.size();
        r.params += parameter_count(in, spec);
        switch (spec.kind) {
        case LayerKind::FC:
            r.synapses += out.size() * in.size();
            break;
        case LayerKind::Conv:
            r.synapses += window_synapses(in, out, spec) * in.c * out.c;
            break;
        case LayerKind::MaxPool:
            r.synapses += window_synapses(in, out, spec) * in.c;
            break;
        }
        in = out;
    }
    return r;
}

Conversion convert_model(const Shape3& input, const std::vector<LayerSpec>& layers, const ConvertOptions& options)
{
    if (layers.empty()) {
        throw Error(ErrorCode::InvalidArgument, "model has no layers");
    }
    const StructuralReport expected = closed_form_report(input, layers);

    NetworkBuilder b;
    b.config(options.config);
    Conversion conv;
    LayerCells cells{input, {}};
    cells.keys.reserve(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        cells.keys.push_back(axon_key(i));
        b.add_axon(cells.keys.back());
    }

    bool have_pool_model = false, have_on_model = false;
    const std::string pool_model = "pool", on_model = "bias_on";
    StructuralReport report;
    report.axons = input.size();

    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& spec = layers[l];
        try {
            if (spec.kind == LayerKind::MaxPool) {
                if (!have_pool_model) {
                    b.add_model(pool_model, NeuronModel::ann(0, kNoiseDisabledNu));
                    have_pool_model = true;
                }
                cells = map_pool_layer(b, cells, spec, l, pool_model);
                conv.scales.push_back(1.0);
                conv.shapes.push_back(cells.shape);
                continue;
            }
            const Shape3 out = output_shape(cells.shape, spec);
            if (!spec.bias.empty() && spec.bias.size() != out.c) {
                throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(out.c) + " biases, got " +
                                                          std::to_string(spec.bias.size()));
            }
            const auto q = quantize(spec.weights, options.alpha ? options.alpha : spec.alpha);
            conv.scales.push_back(q.scale);
            const std::int64_t theta = quantize_scalar(spec.neuron.threshold, q.scale);
            std::vector<std::int64_t> bias(out.c, 0);
            for (std::size_t ch = 0; ch < spec.bias.size(); ++ch) {
                if (!std::isfinite(spec.bias[ch])) {
                    throw Error(ErrorCode::InvalidArgument, "non-finite bias");
                }
                bias[ch] = quantize_scalar(spec.bias[ch], q.scale);
            }

            // One model per distinct threshold; without shifting that is one per layer.
            const std::string base = "L" + std::to_string(l);
            std::vector<std::string> models;
            if (options.bias == BiasStrategy::ThresholdShift) {
                std::map<std::int64_t, std::string> by_theta;
                for (auto t : shifted_thresholds(theta, bias)) {
                    auto [it, fresh] = by_theta.try_emplace(t, base + "_t" + std::to_string(t));
                    if (fresh) {
                        b.add_model(it->second, make_model(spec.neuron, t));
                    }
                    models.push_back(it->second);
                }
            } else {
                b.add_model(base, make_model(spec.neuron, theta));
                models.push_back(base);
            }

            cells = spec.kind == LayerKind::Conv ? map_conv_layer(b, cells, spec, q.values, l, models)
                                                 : map_fc_layer(b, cells, spec, q.values, l, models);
            conv.shapes.push_back(cells.shape);

            if (options.bias != BiasStrategy::ThresholdShift) {
                if (options.bias == BiasStrategy::AlwaysOnNeuron && !have_on_model) {
                    b.add_model(on_model, NeuronModel::ann(-1, kNoiseDisabledNu));
                    have_on_model = true;
                }
                if (apply_bias_source(b, cells, bias, options.bias, l, on_model)) {
                    ++report.bias_sources;
                    for (std::size_t cell = 0; cell < cells.keys.size(); ++cell) {
                        report.bias_synapses += bias[channel_of(cells.shape, cell)] != 0;
                    }
                }
            }
        } catch (const Error& e) {
            if (e.detail().rfind("layer ", 0) == 0) {
                throw;
            }
            throw Error(e.code(), layer_name(l) + ": " + e.detail());
        }
    }
    for (const auto& k : cells.keys) {
        b.add_output(k);
    }
    conv.network = b.build();

    const Network& net = conv.network;
    const std::size_t always_on = options.bias == BiasStrategy::AlwaysOnNeuron ? report.bias_sources : 0;
    const std::size_t bias_axons = options.bias == BiasStrategy::BiasAxon ? report.bias_sources : 0;
    report.neurons = net.num_neurons() - always_on;
    report.params = expected.params;
    report.synapses = net.num_synapses() - report.bias_synapses;
    if (net.num_axons() - bias_axons != expected.axons || report.neurons != expected.neurons ||
        report.synapses != expected.synapses) {
        throw Error(ErrorCode::ShapeMismatch, "mapped network disagrees with closed-form counts");
    }
    conv.report = report;
    return conv;
}

// --- archive -----------------------------------------------------------------

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::vector<double> read_f32(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open tensor file " + p.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0) {
        throw Error(ErrorCode::ParseError, p.string() + ": size " + std::to_string(bytes.size()) +
                                               " is not a multiple of 4");
    }
    std::vector<double> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) {
            u |= std::uint32_t{static_cast<unsigned char>(bytes[i * 4 + k])} << (8 * k);
        }
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

void write_f32(const fs::path& p, const std::vector<double>& values)
{
    std::string bytes(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
        for (int k = 0; k < 4; ++k) {
            bytes[i * 4 + k] = static_cast<char>((u >> (8 * k)) & 0xFF);
        }
    }
    std::ofstream out(p, std::ios::binary);
    if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
        throw Error(ErrorCode::IoError, "cannot write tensor file " + p.string());
    }
}

std::uint32_t as_u32(const Json& j, const std::string& path)
{
    if (!j.is_number_unsigned() || j.get<std::uint64_t>() > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(ErrorCode::ParseError, path + ": expected a non-negative integer");
    }
    return j.get<std::uint32_t>();
}

std::string kind_name(LayerKind k)
{
    switch (k) {
    case LayerKind::Conv:
        return "conv";
    case LayerKind::MaxPool:
        return "maxpool";
    case LayerKind::FC:
        return "fc";
    }
    return "?";
}

} // namespace

ModelArchive load_archive(const std::string& dir)
{
    const fs::path root(dir);
    std::ifstream in(root / "manifest.json");
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + (root / "manifest.json").string());
    }
    Json m;
    try {
        m = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "manifest.json: " + std::string(e.what()));
    }
    try {
        if (m.value("format", "") != "spikecore-model" || m.value("version", 0) != 1) {
            throw Error(ErrorCode::ParseError, "manifest.json: expected format spikecore-model version 1");
        }
        const auto& shp = m.at("input_shape");
        if (!shp.is_array() || shp.size() != 3) {
            throw Error(ErrorCode::ParseError, "input_shape: expected [c, h, w]");
        }
        ModelArchive a;
        a.input = {as_u32(shp[0], "input_shape[0]"), as_u32(shp[1], "input_shape[1]"),
                   as_u32(shp[2], "input_shape[2]")};
        const auto& layers = m.at("layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& j = layers[i];
            const std::string path = "layers[" + std::to_string(i) + "]";
            LayerSpec l;
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "conv") {
                l.kind = LayerKind::Conv;
                l.out = as_u32(j.at("out_channels"), path + ".out_channels");
            } else if (kind == "maxpool") {
                l.kind = LayerKind::MaxPool;
            } else if (kind == "fc") {
                l.kind = LayerKind::FC;
                l.out = as_u32(j.at("out_units"), path + ".out_units");
            } else {
                throw Error(ErrorCode::ParseError, path + ".kind: unknown layer kind '" + kind + "'");
            }
            if (l.kind != LayerKind::FC) {
                const auto& k = j.at("kernel");
                if (!k.is_array() || k.size() != 2) {
                    throw Error(ErrorCode::ParseError, path + ".kernel: expected [kh, kw]");
                }
                l.kh = as_u32(k[0], path + ".kernel[0]");
                l.kw = as_u32(k[1], path + ".kernel[1]");
                l.stride = j.contains("stride") ? as_u32(j["stride"], path + ".stride") : 1;
                l.padding = j.contains("padding") ? as_u32(j["padding"], path + ".padding") : 0;
            }
            if (l.kind != LayerKind::MaxPool) {
                l.weights = read_f32(root / j.at("weights").get<std::string>());
                if (j.contains("bias")) {
                    l.bias = read_f32(root / j["bias"].get<std::string>());
                }
                if (j.contains("neuron")) {
                    const auto& n = j["neuron"];
                    const std::string nk = n.value("kind", "ANN");
                    if (nk != "ANN" && nk != "LIF") {
                        throw Error(ErrorCode::ParseError, path + ".neuron.kind: expected ANN or LIF");
                    }
                    l.neuron.kind = nk == "LIF" ? NeuronKind::LIF : NeuronKind::ANN;
                    l.neuron.threshold = n.value("threshold", 0.0);
                    l.neuron.nu = n.value("nu", -17);
                    l.neuron.lambda = n.value("lambda", 63);
                }
                if (j.contains("alpha")) {
                    l.alpha = j["alpha"].get<double>();
                }
            }
            a.layers.push_back(std::move(l));
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, "manifest.json: " + std::string(e.what()));
    }
}

void save_archive(const std::string& dir, const ModelArchive& model)
{
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());
    }
    Json m;
    m["format"] = "spikecore-model";
    m["version"] = 1;
    m["input_shape"] = {model.input.c, model.input.h, model.input.w};
    m["layers"] = Json::array();
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& l = model.layers[i];
        Json j;
        j["kind"] = kind_name(l.kind);
        if (l.kind == LayerKind::Conv) {
            j["out_channels"] = l.out;
        } else if (l.kind == LayerKind::FC) {
            j["out_units"] = l.out;
        }
        if (l.kind != LayerKind::FC) {
            j["kernel"] = {l.kh, l.kw};
            j["stride"] = l.stride;
            j["padding"] = l.padding;
        }
        if (l.kind != LayerKind::MaxPool) {
            const std::string w = "l" + std::to_string(i) + ".w.f32";
            write_f32(root / w, l.weights);
            j["weights"] = w;
            if (!l.bias.empty()) {
                const std::string bname = "l" + std::to_string(i) + ".b.f32";
                write_f32(root / bname, l.bias);
                j["bias"] = bname;
            }
            j["neuron"] = {{"kind", l.neuron.kind == NeuronKind::LIF ? "LIF" : "ANN"},
                           {"threshold", l.neuron.threshold},
                           {"nu", l.neuron.nu},
                           {"lambda", l.neuron.lambda}};
            if (l.alpha) {
                j["alpha"] = *l.alpha;
            }
        }
        m["layers"].push_back(std::move(j));
    }
    std::ofstream out(root / "manifest.json");
    if (!out || !(out << m.dump(2) << '\n')) {
        throw Error(ErrorCode::IoError, "cannot write manifest.json in " + dir);
    }
}

} // namespace spikecore::convert
