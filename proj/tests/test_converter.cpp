#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "support/models.hpp"
#include "spikecore/dense_oracle.hpp"
#include "spikecore/error.hpp"
#include "spikecore/runner.hpp"
#include "spikecore/simulator.hpp"

using namespace spikecore;
using namespace spikecore::convert;
using spikecore::testgen::conv;
using spikecore::testgen::fc;
using spikecore::testgen::pool;

namespace {

template <typename F>
ErrorCode code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

LayerSpec int_layer(std::mt19937_64& rng, LayerSpec l)
{
    std::uniform_int_distribution<int> d(-100, 100);
    for (auto& w : l.weights) {
        w = d(rng);
    }
    l.alpha = 1.0;
    l.neuron.threshold = 1e9; // keeps every neuron silent so membranes hold the sums
    return l;
}

std::vector<std::int16_t> as_int16(const std::vector<double>& v)
{
    std::vector<std::int16_t> out;
    for (double x : v) {
        out.push_back(static_cast<std::int16_t>(x));
    }
    return out;
}

// One step with the given input cells on, returning membranes of the last layer.
std::vector<std::int64_t> one_step(const Conversion& c, const std::vector<std::uint8_t>& bits,
                                   LayerKind kind = LayerKind::FC)
{
    const Network& net = c.network;
    DenseOracle oracle(net);
    SimState st(net.num_neurons(), net.num_axons(), 0);
    std::vector<std::uint32_t> active;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            active.push_back(net.axon_index(axon_key(i)));
        }
    }
    oracle.step(st, active);
    std::vector<std::int64_t> out;
    const Shape3 s = c.shapes.back();
    for (std::size_t cell = 0; cell < s.size(); ++cell) {
        out.push_back(st.membrane[net.neuron_index(neuron_key(c.shapes.size() - 1, s, cell, kind))]);
    }
    return out;
}

std::vector<std::uint8_t> random_bits(std::mt19937_64& rng, std::size_t n, double p)
{
    std::bernoulli_distribution on(p);
    std::vector<std::uint8_t> v(n);
    for (auto& b : v) {
        b = on(rng);
    }
    return v;
}

} // namespace

TEST_CASE("quantize: symmetric scaling with half-to-even rounding")
{
    const std::vector<double> w{-1.0, 0.5, 1.0};
    const auto q = quantize(w);
    CHECK(q.scale == doctest::Approx(32767.0));
    CHECK(q.values == std::vector<std::int16_t>{-32767, 16384, 32767});
    CHECK_FALSE(q.all_zero);

    const auto z = quantize(std::vector<double>{0.0, 0.0, -0.0});
    CHECK(z.all_zero);
    CHECK(z.scale == 1.0);
    CHECK(z.values == std::vector<std::int16_t>{0, 0, 0});

    std::vector<double> ints;
    for (int i = -100; i <= 100; ++i) {
        ints.push_back(i);
    }
    const auto id = quantize(ints, 1.0);
    for (std::size_t i = 0; i < ints.size(); ++i) {
        CHECK(id.values[i] == static_cast<int>(ints[i]));
    }

    // Ties go to even in both directions.
    CHECK(quantize(std::vector<double>{2.5, -2.5, 3.5}, 1.0).values == std::vector<std::int16_t>{2, -2, 4});
    // A user alpha may push values past int16; they clamp.
    CHECK(quantize(std::vector<double>{1.0, -1.0}, 1e6).values == std::vector<std::int16_t>{32767, -32768});

    CHECK(code_of([] { quantize(std::vector<double>{1.0, std::nan("")}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { quantize(std::vector<double>{1.0}, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("quantize: values always fit and preserve sign")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-50, 50);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> w(64);
        for (auto& x : w) {
            x = d(rng);
        }
        const auto q = quantize(w);
        CHECK(q.scale > 0);
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK(std::abs(int{q.values[i]}) <= 32767);
            CHECK((q.values[i] == 0 || (q.values[i] > 0) == (w[i] > 0)));
            CHECK(std::abs(q.values[i] - w[i] * q.scale) <= 0.5);
        }
    }
}

TEST_CASE("binarize_input")
{
    const Shape3 mnist{1, 28, 28};
    std::vector<double> frame(mnist.size(), 0.0);
    CHECK(binarize_input(frame, mnist, mnist, ThresholdPolicy{}).empty());

    frame[mnist.index(0, 0, 1)] = 1.0;
    CHECK(binarize_input(frame, mnist, mnist, ThresholdPolicy{}) == std::vector<std::string>{"in_1"});

    const Shape3 dvs{2, 63, 63};
    std::vector<double> full(dvs.size(), 1.0);
    const auto keys = binarize_input(full, dvs, dvs, ThresholdPolicy{});
    CHECK(keys.size() == 7938);
    CHECK(keys.size() <= dvs.size());

    // Threshold is strict.
    CHECK(binarize_input(std::vector<double>{0.5, 0.6}, Shape3{1, 1, 2}, Shape3{1, 1, 2}, ThresholdPolicy{0.5}) ==
          std::vector<std::string>{"in_1"});

    CHECK(code_of([&] { binarize_input(frame, mnist, Shape3{1, 28, 27}, ThresholdPolicy{}); }) ==
          ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { binarize_input(std::vector<double>(3), mnist, mnist, ThresholdPolicy{}); }) ==
          ErrorCode::ShapeMismatch);
}

TEST_CASE("binarize_input: bit slicing, most significant bit first")
{
    // Two pixels, 3 bits: 5 = 101b, 2 = 010b. Channel b holds bit (2 - b).
    const Shape3 fs{1, 1, 2}, ms{3, 1, 2};
    const auto keys = binarize_input(std::vector<double>{5, 2}, fs, ms, BitSlicePolicy{3});
    CHECK(keys == std::vector<std::string>{"in_0", "in_3", "in_4"});
    CHECK(code_of([&] { binarize_input(std::vector<double>{5, 2}, fs, fs, BitSlicePolicy{3}); }) ==
          ErrorCode::ShapeMismatch);
}

TEST_CASE("shapes and parameter counts")
{
    std::mt19937_64 rng(1);
    const auto c = conv(rng, 1, 6, 5, 2);
    CHECK(output_shape(Shape3{1, 28, 28}, c) == Shape3{6, 12, 12});
    CHECK(parameter_count(Shape3{1, 28, 28}, c) == 150);
    CHECK(output_shape(Shape3{6, 24, 24}, pool(2, 2)) == Shape3{6, 12, 12});
    CHECK(parameter_count(Shape3{6, 24, 24}, pool(2, 2)) == 0);
    CHECK(output_shape(Shape3{1, 28, 28}, fc(rng, 784, 10)) == Shape3{10, 1, 1});

    CHECK(code_of([&] { output_shape(Shape3{1, 4, 4}, conv(rng, 1, 1, 5, 1)); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([&] { output_shape(Shape3{2, 8, 8}, c); }) == ErrorCode::ShapeMismatch); // in_c mismatch
    CHECK(code_of([&] { output_shape(Shape3{1, 28, 28}, fc(rng, 783, 10)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("conv mapping: 28x28, 6 kernels 5x5 stride 2")
{
    std::mt19937_64 rng(2);
    const auto c = convert_model(Shape3{1, 28, 28}, {int_layer(rng, conv(rng, 1, 6, 5, 2))});
    const Network& net = c.network;
    CHECK(net.num_neurons() == 864);
    CHECK(c.shapes.back() == Shape3{6, 12, 12});
    // Fan-in per neuron: every 5x5 window lies inside the input.
    std::vector<std::size_t> fan_in(net.num_neurons(), 0);
    for (std::uint32_t a = 0; a < net.num_axons(); ++a) {
        for (const auto& s : net.axon_synapses(a)) {
            ++fan_in[s.post];
        }
    }
    CHECK(std::all_of(fan_in.begin(), fan_in.end(), [](std::size_t f) { return f == 25; }));
    CHECK(net.outputs().size() == 864);
}

TEST_CASE("conv mapping: 1x1 kernel is identity wiring")
{
    LayerSpec l;
    l.kind = LayerKind::Conv;
    l.out = 1;
    l.weights = {1.0};
    const auto c = convert_model(Shape3{1, 4, 5}, {l});
    const Network& net = c.network;
    for (std::uint32_t r = 0; r < 4; ++r) {
        for (std::uint32_t col = 0; col < 5; ++col) {
            const auto cell = r * 5 + col;
            const auto syn = net.axon_synapses(net.axon_index(axon_key(cell)));
            REQUIRE(syn.size() == 1);
            CHECK(net.neuron_keys()[syn[0].post] == "L0_0_" + std::to_string(cell));
        }
    }
}

TEST_CASE("fc mapping: 1 -> 1 carries the quantized weight")
{
    LayerSpec l;
    l.kind = LayerKind::FC;
    l.out = 1;
    l.weights = {0.25};
    const auto c = convert_model(Shape3{1, 1, 1}, {l});
    CHECK(c.network.read_synapse("in_0", "L0_0") == 32767);
    l.alpha = 8.0;
    CHECK(convert_model(Shape3{1, 1, 1}, {l}).network.read_synapse("in_0", "L0_0") == 2);
}

TEST_CASE("reference architectures: structural counts")
{
    std::mt19937_64 rng(3);
    for (const auto& m : testgen::reference_models(rng)) {
        CAPTURE(m.name);
        const auto closed = closed_form_report(m.input, m.layers);
        CHECK(closed.axons == m.axons);
        CHECK(closed.neurons == m.neurons);
        CHECK(closed.params == m.params);
        const auto c = convert_model(m.input, m.layers);
        CHECK(c.report == closed);
        CHECK(c.network.num_axons() == m.axons);
        CHECK(c.network.num_neurons() == m.neurons);
    }
}

TEST_CASE("conv fidelity against direct cross-correlation")
{
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::uint32_t> dim(3, 8), ch(1, 3), k(1, 3), st(1, 2), pad(0, 1);
    for (int rep = 0; rep < 40; ++rep) {
        const Shape3 in{ch(rng), dim(rng), dim(rng)};
        const std::uint32_t kk = std::min({k(rng), in.h, in.w});
        const auto l = int_layer(rng, conv(rng, in.c, ch(rng), kk, st(rng), pad(rng)));
        CAPTURE(rep);
        const auto c = convert_model(in, {l});
        const auto bits = random_bits(rng, in.size(), 0.5);
        CHECK(one_step(c, bits, LayerKind::Conv) == testgen::conv_oracle(bits, in, l, as_int16(l.weights)));
    }
}

TEST_CASE("fc fidelity against matrix-vector product")
{
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::uint32_t> n(1, 40);
    for (int rep = 0; rep < 40; ++rep) {
        const Shape3 in{1, 1, n(rng)};
        const auto l = int_layer(rng, fc(rng, in.size(), n(rng)));
        const auto c = convert_model(in, {l});
        const auto bits = random_bits(rng, in.size(), 0.5);
        CHECK(one_step(c, bits) == testgen::fc_oracle(bits, l.out, as_int16(l.weights)));
    }
}

TEST_CASE("pooling is an OR over the window, exhaustively")
{
    for (std::uint32_t kh = 1; kh <= 3; ++kh) {
        for (std::uint32_t kw = 1; kw <= 3; ++kw) {
            LayerSpec p = testgen::pool(1, 1);
            p.kh = kh;
            p.kw = kw;
            const Shape3 in{1, kh, kw};
            const auto c = convert_model(in, {p});
            const Network& net = c.network;
            REQUIRE(net.num_neurons() == 1);
            const std::uint32_t window = kh * kw;
            for (std::uint32_t pattern = 0; pattern < (1u << window); ++pattern) {
                DenseOracle oracle(net);
                SimState st(1, net.num_axons(), 0);
                std::vector<std::uint32_t> active;
                for (std::uint32_t i = 0; i < window; ++i) {
                    if (pattern >> i & 1u) {
                        active.push_back(net.axon_index(axon_key(i)));
                    }
                }
                oracle.step(st, active);
                // The pool neuron fires on the step after its inputs arrive.
                const auto fired = oracle.step(st, {});
                CHECK((fired.size() == 1) == (pattern != 0));
            }
        }
    }
}

TEST_CASE("pool neuron: 2x2 window, one input gives V = 1")
{
    const auto c = convert_model(Shape3{1, 2, 2}, {testgen::pool(2, 2)});
    CHECK(one_step(c, {0, 0, 1, 0}, LayerKind::MaxPool) == std::vector<std::int64_t>{1});
    CHECK(one_step(c, {0, 0, 0, 0}, LayerKind::MaxPool) == std::vector<std::int64_t>{0});
}

TEST_CASE("bias strategies")
{
    CHECK(shifted_thresholds(10, std::vector<std::int64_t>{4}) == std::vector<std::int64_t>{6});

    LayerSpec l;
    l.kind = LayerKind::FC;
    l.out = 2;
    l.weights = {3, -2};
    l.alpha = 1.0;
    l.neuron.threshold = 10;

    SUBCASE("zero bias leaves the network unchanged")
    {
        const auto plain = convert_model(Shape3{1, 1, 1}, {l});
        l.bias = {0.0, 0.0};
        for (auto s : {BiasStrategy::ThresholdShift, BiasStrategy::BiasAxon}) {
            ConvertOptions o;
            o.bias = s;
            const auto c = convert_model(Shape3{1, 1, 1}, {l}, o);
            CHECK(c.network.num_axons() == plain.network.num_axons());
            CHECK(c.network.num_neurons() == plain.network.num_neurons());
            CHECK(c.network.num_synapses() == plain.network.num_synapses());
            CHECK(c.report.bias_sources == 0);
        }
    }
    SUBCASE("threshold shift subtracts the quantized bias")
    {
        l.bias = {4.0, 0.0};
        const auto c = convert_model(Shape3{1, 1, 1}, {l});
        CHECK(c.network.model_of(c.network.neuron_index("L0_0")).theta == 6);
        CHECK(c.network.model_of(c.network.neuron_index("L0_1")).theta == 10);
    }
    SUBCASE("always-on neuron fires from the first step")
    {
        l.bias = {4.0, 0.0};
        ConvertOptions o;
        o.bias = BiasStrategy::AlwaysOnNeuron;
        const auto c = convert_model(Shape3{1, 1, 1}, {l}, o);
        const Network& net = c.network;
        const auto on = net.neuron_index("bias_L0");
        CHECK(net.model_of(on).theta == -1);
        CHECK(net.num_neurons() == 3);
        CHECK(c.report.neurons == 2);
        CHECK(c.report.bias_synapses == 1);
        DenseOracle oracle(net);
        SimState st(net.num_neurons(), net.num_axons(), 0);
        for (int t = 0; t < 4; ++t) {
            oracle.step(st, {});
            CHECK(st.fired_neurons[on] == 1);
        }
    }
    SUBCASE("bias beyond 16 bits overflows for source strategies")
    {
        l.bias = {40000.0, 0.0};
        ConvertOptions o;
        o.bias = BiasStrategy::BiasAxon;
        CHECK(code_of([&] { convert_model(Shape3{1, 1, 1}, {l}, o); }) == ErrorCode::WeightOverflow);
        o.bias = BiasStrategy::ThresholdShift;
        CHECK_NOTHROW(convert_model(Shape3{1, 1, 1}, {l}, o));
    }
}

TEST_CASE("bias strategies produce identical spike trains")
{
    std::mt19937_64 rng(8);
    // Biases stay at or below the threshold: on the fresh state (V = 0) a
    // shifted threshold below zero fires at step 0, before a bias source has
    // delivered anything.
    std::uniform_real_distribution<double> bd(-0.5, 0.3);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<LayerSpec> layers{testgen::conv(rng, 1, 3, 3, 1), testgen::fc(rng, 3 * 4 * 4, 8)};
        for (auto& l : layers) {
            l.bias.resize(l.out);
            for (auto& b : l.bias) {
                b = bd(rng);
            }
            l.neuron.threshold = 0.3;
        }
        const Shape3 in{1, 6, 6};
        std::vector<std::vector<std::string>> trains[3];
        int s = 0;
        for (auto strategy : {BiasStrategy::ThresholdShift, BiasStrategy::BiasAxon, BiasStrategy::AlwaysOnNeuron}) {
            ConvertOptions o;
            o.bias = strategy;
            const auto c = convert_model(in, layers, o);
            Simulator sim(c.network, Backend::Oracle, 1);
            std::mt19937_64 inputs(rep);
            for (int t = 0; t < 12; ++t) {
                std::vector<std::string> active;
                for (std::size_t i = 0; i < in.size(); ++i) {
                    if (inputs() & 1) {
                        active.push_back(axon_key(i));
                    }
                }
                if (strategy == BiasStrategy::BiasAxon) {
                    for (auto a : c.network.bias_axons()) {
                        active.push_back(c.network.axon_keys()[a]);
                    }
                }
                trains[s].push_back(sim.step(active).spikes);
            }
            ++s;
        }
        CHECK(trains[0] == trains[1]);
        CHECK(trains[0] == trains[2]);
    }
}

TEST_CASE("membrane argmax is invariant under a common positive scale")
{
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        auto l = int_layer(rng, testgen::fc(rng, 30, 10));
        for (auto& w : l.weights) {
            w = std::trunc(w / 4); // headroom for the scaled copy
        }
        l.neuron.threshold = 1e8;
        const Shape3 in{1, 1, 30};
        const auto bits = random_bits(rng, 30, 0.5);
        const auto base = one_step(convert_model(in, {l}), bits);
        auto scaled = l;
        scaled.alpha = 3.0;
        const auto big = one_step(convert_model(in, {scaled}), bits);
        std::vector<std::int32_t> b32(base.begin(), base.end()), g32(big.begin(), big.end());
        CHECK(membrane_argmax(b32) == membrane_argmax(g32));
    }
}

TEST_CASE("archive round trip and shape errors")
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "spikecore_archive_test";
    fs::remove_all(dir);
    std::mt19937_64 rng(10);
    ModelArchive m;
    m.input = {1, 8, 8};
    m.layers = {testgen::conv(rng, 1, 2, 3, 1), testgen::pool(2, 2), testgen::fc(rng, 2 * 3 * 3, 4)};
    m.layers[0].bias = {0.25, -0.5};
    m.layers[0].neuron = {NeuronKind::LIF, 0.5, -3, 4};
    m.layers[2].alpha = 100.0;
    for (auto& l : m.layers) {
        for (auto& w : l.weights) {
            w = static_cast<float>(w); // exact after the float32 round trip
        }
    }
    save_archive(dir.string(), m);
    const auto back = load_archive(dir.string());
    CHECK(back.input == m.input);
    REQUIRE(back.layers.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.layers[i].kind == m.layers[i].kind);
        CHECK(back.layers[i].weights == m.layers[i].weights);
        CHECK(back.layers[i].bias == m.layers[i].bias);
        CHECK(back.layers[i].alpha == m.layers[i].alpha);
        CHECK(back.layers[i].kh == m.layers[i].kh);
        CHECK(back.layers[i].stride == m.layers[i].stride);
    }
    CHECK(back.layers[0].neuron.kind == NeuronKind::LIF);
    CHECK(back.layers[0].neuron.nu == -3);
    CHECK(convert_model(back.input, back.layers).network == convert_model(m.input, m.layers).network);

    // A layer that does not chain names itself.
    auto bad = m.layers;
    bad[2] = testgen::fc(rng, 17, 4);
    try {
        convert_model(m.input, bad);
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
        CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
    }
    fs::remove_all(dir);
    CHECK(code_of([&] { load_archive(dir.string()); }) == ErrorCode::IoError);
}

TEST_CASE("bias strategy names")
{
    for (auto s : {BiasStrategy::ThresholdShift, BiasStrategy::BiasAxon, BiasStrategy::AlwaysOnNeuron}) {
        CHECK(parse_bias_strategy(to_string(s)) == s);
    }
    CHECK(code_of([] { parse_bias_strategy("shift"); }) == ErrorCode::InvalidArgument);
}
