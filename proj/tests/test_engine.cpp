#include <doctest.h>

#include <cmath>
#include <random>

#include "spikecore/dense_oracle.hpp"
#include "spikecore/engine.hpp"
#include "spikecore/error.hpp"
#include "spikecore/hbm/compiler.hpp"
#include "spikecore/simulator.hpp"
#include "support/gen.hpp"

using namespace spikecore;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::IoError;
}

/// Independent SplitMix64 for checking seeds.
std::uint64_t splitmix_draw(std::uint64_t seed, std::size_t index)
{
    std::uint64_t s = seed, z = 0;
    for (std::size_t i = 0; i <= index; ++i) {
        s += 0x9E3779B97F4A7C15ULL;
        z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
    }
    return z;
}

void check_trace(Simulator& sim)
{
    const std::vector<std::string> both = {"alpha", "beta"};
    const std::vector<std::string> none;
    const std::vector<std::string> all = {"a", "b", "c", "d"};

    auto r = sim.step(both, true);
    CHECK(r.spikes.empty());
    CHECK(*r.membranes == std::vector<std::int32_t>{3, 3, 2, 0});
    CHECK(sim.read_membrane(std::vector<std::string>{"a", "c"}) == std::vector<std::int32_t>{3, 2});
    r = sim.step(both, true);
    CHECK(r.spikes.empty());
    CHECK(*r.membranes == std::vector<std::int32_t>{6, 6, 4, 0});
    r = sim.step(none, true);
    CHECK(r.spikes == std::vector<std::string>{"a", "b"});
    CHECK(sim.read_membrane(all) == std::vector<std::int32_t>{0, 1, 3, 2});
}

} // namespace

TEST_CASE("example trace on both backends, d noise disabled")
{
    for (auto backend : {Backend::Oracle, Backend::Engine}) {
        Simulator sim(testgen::example_network(-17), backend, 0);
        CHECK(sim.read_membrane(std::vector<std::string>{"a"}) == std::vector<std::int32_t>{0});
        check_trace(sim);
    }
}

TEST_CASE("example trace with the published noisy d")
{
    // d is neuron 3 of 4, so its draw at step t is number 4t+3. The trace
    // needs d's noise (odd raw value << 2) to stay at or below theta = 5.
    const std::uint64_t seed = 33;
    for (std::size_t t = 0; t < 3; ++t) {
        const auto raw = static_cast<std::int64_t>(splitmix_draw(seed, 4 * t + 3) & 0x1FFFF) - 65536;
        CHECK((raw | 1) * 4 <= 5);
    }
    bool earlier_fails = false;
    for (std::uint64_t s = 0; s < seed; ++s) {
        bool ok = true;
        for (std::size_t t = 0; t < 3; ++t) {
            const auto raw = static_cast<std::int64_t>(splitmix_draw(s, 4 * t + 3) & 0x1FFFF) - 65536;
            ok = ok && (raw | 1) * 4 <= 5;
        }
        earlier_fails = earlier_fails || !ok;
        CHECK_FALSE(ok);
    }
    CHECK(earlier_fails);

    for (auto backend : {Backend::Oracle, Backend::Engine}) {
        Simulator sim(testgen::example_network(2), backend, seed);
        check_trace(sim);
    }

    // A seed whose first draw for d exceeds theta makes d fire on step one,
    // so c integrates alpha's 2 plus d's 1.
    std::uint64_t noisy = 0;
    while ((static_cast<std::int64_t>(splitmix_draw(noisy, 3) & 0x1FFFF) - 65536 | 1) * 4 <= 5) {
        ++noisy;
    }
    for (auto backend : {Backend::Oracle, Backend::Engine}) {
        Simulator sim(testgen::example_network(2), backend, noisy);
        sim.step(std::vector<std::string>{"alpha", "beta"});
        CHECK(sim.read_membrane(std::vector<std::string>{"c", "d"}) == std::vector<std::int32_t>{3, 0});
    }
}

TEST_CASE("engine counters on the example trace")
{
    const auto img = hbm::compile(testgen::example_network(-17));
    EventEngine engine(img);
    auto s = engine.make_state(0);
    const std::uint32_t both[] = {0, 1};
    StepCounters c;
    engine.step(s, both, &c);
    CHECK(c.pointer_row_reads == 2);
    CHECK(c.synapse_row_reads == 4);
    CHECK(c.neuron_scan_cycles == 1);
    CHECK(c.total_cycles == 1 + 6);
    engine.step(s, both, &c);
    CHECK(engine.step(s, {}, &c) == std::vector<std::uint32_t>{0, 1});
    // a and b fired: two pointers, a's region plus b's padding region.
    CHECK(c.pointer_row_reads == 2);
    CHECK(c.synapse_row_reads == img.neuron_pointer(0).row_count + img.neuron_pointer(1).row_count);
    CHECK(c.synapse_row_reads == 4);

    // Idle step: no HBM traffic.
    engine.step(s, {}, &c);
    engine.step(s, {}, &c);
    CHECK(c.hbm_accesses() == 0);
    CHECK(c.neuron_scan_cycles == 1);
}

TEST_CASE("idle networks read nothing regardless of size")
{
    NetworkBuilder b;
    b.add_model("m", NeuronModel::lif(100, -17, 0));
    for (int i = 0; i < 1000; ++i) {
        b.add_neuron("n" + std::to_string(i), "m", {{"n" + std::to_string((i * 7) % 1000), 5}});
    }
    b.add_axon("x", {{"n0", 1}});
    const auto img = hbm::compile(b.build());
    EventEngine engine(img);
    auto s = engine.make_state(0);
    StepCounters c;
    for (int t = 0; t < 5; ++t) {
        engine.step(s, {}, &c);
        CHECK(c.hbm_accesses() == 0);
        CHECK(c.neuron_scan_cycles == 63);
    }
}

TEST_CASE("engine matches the oracle on random networks with both kernel sets")
{
    std::vector<const kernels::KernelSet*> sets = {&kernels::scalar_kernels()};
    if (kernels::avx2_kernels() != nullptr) {
        sets.push_back(kernels::avx2_kernels());
    }
    std::mt19937_64 g(7);
    for (int trial = 0; trial < 30; ++trial) {
        testgen::NetSpec spec;
        spec.max_neurons = 200;
        spec.noisy = trial % 2 == 1;
        spec.max_weight = trial % 3 == 0 ? 32767 : 2000;
        const auto net = testgen::random_network(g, spec);
        const auto img = hbm::compile(net);
        const auto inputs = testgen::random_inputs(g, net.num_axons(), 60, 0.3);
        const std::uint64_t seed = g();
        for (const auto* ks : sets) {
            DenseOracle oracle(net);
            EventEngine engine(img, 1, *ks);
            SimState so(net.num_neurons(), net.num_axons(), seed);
            auto se = engine.make_state(seed);
            for (const auto& in : inputs) {
                REQUIRE(oracle.step(so, in) == engine.step(se, in));
                REQUIRE(so == se);
            }
        }
    }
}

TEST_CASE("wrapping arithmetic also matches")
{
    std::mt19937_64 g(8);
    for (int trial = 0; trial < 10; ++trial) {
        testgen::NetSpec spec;
        spec.max_neurons = 100;
        spec.max_fan_out = 30;
        auto base = testgen::random_network(g, spec);
        NetworkAssembler::Parts p;
        p.axon_keys = base.axon_keys();
        p.neuron_keys = base.neuron_keys();
        p.models = base.models();
        p.neuron_models = base.neuron_models();
        for (std::uint32_t a = 0; a < base.num_axons(); ++a) {
            p.axon_synapses.emplace_back(base.axon_synapses(a).begin(), base.axon_synapses(a).end());
        }
        for (std::uint32_t j = 0; j < base.num_neurons(); ++j) {
            p.neuron_synapses.emplace_back(base.neuron_synapses(j).begin(), base.neuron_synapses(j).end());
        }
        p.outputs = base.outputs();
        p.config.saturating = false;
        const auto net = NetworkAssembler::assemble(p);
        const auto img = hbm::compile(net);
        DenseOracle oracle(net);
        EventEngine engine(img);
        SimState so(net.num_neurons(), net.num_axons(), 1);
        auto se = engine.make_state(1);
        for (const auto& in : testgen::random_inputs(g, net.num_axons(), 50, 0.5)) {
            REQUIRE(oracle.step(so, in) == engine.step(se, in));
            REQUIRE(so == se);
        }
    }
}

TEST_CASE("accesses are affine in the fired sources")
{
    std::mt19937_64 g(9);
    testgen::NetSpec spec;
    spec.max_neurons = 300;
    spec.max_fan_out = 40;
    const auto net = testgen::random_network(g, spec);
    const auto img = hbm::compile(net);
    EventEngine engine(img);
    auto s = engine.make_state(0);
    for (const auto& in : testgen::random_inputs(g, net.num_axons(), 50, 0.3)) {
        StepCounters c;
        engine.step(s, in, &c);
        std::uint64_t sources = 0, rows = 0;
        for (std::uint32_t a = 0; a < net.num_axons(); ++a) {
            if (s.fired_axons[a]) {
                ++sources;
                rows += img.axon_pointer(a).row_count;
            }
        }
        for (std::uint32_t j = 0; j < net.num_neurons(); ++j) {
            if (s.fired_neurons[j]) {
                ++sources;
                rows += img.neuron_pointer(j).row_count;
            }
        }
        REQUIRE(c.pointer_row_reads == sources);
        REQUIRE(c.synapse_row_reads == rows);
        REQUIRE(c.total_cycles == c.neuron_scan_cycles + sources + rows);
    }
}

TEST_CASE("run and cost report")
{
    const auto img = hbm::compile(testgen::example_network(-17));
    const std::vector<std::vector<std::string>> sched = {{"alpha", "beta"}, {"alpha", "beta"}, {}};

    const auto empty = run(img, sched, 0, 0);
    CHECK(empty.trace.empty());
    CHECK(empty.cost.energy == 0.0);
    CHECK(empty.cost.latency == 0.0);
    CHECK(empty.cost.totals == StepCounters{});

    const CostConfig cfg{.energy_per_access = 0.25, .cycles_per_row = 3, .clock_period = 0.004};
    const auto r = run(img, sched, 3, 0, cfg);
    CHECK(r.trace == std::vector<std::vector<std::string>>{{}, {}, {"a", "b"}});
    REQUIRE(r.cost.per_step.size() == 3);
    StepCounters sum;
    for (const auto& c : r.cost.per_step) {
        sum += c;
        CHECK(c.total_cycles == c.neuron_scan_cycles + 3 * c.hbm_accesses());
    }
    CHECK(sum == r.cost.totals);
    CHECK(r.cost.totals.hbm_accesses() == 18);
    CHECK(r.cost.energy == 0.25 * 18);
    CHECK(r.cost.latency == 0.004 * static_cast<double>(3 + 3 * 18));

    const auto again = run(img, sched, 3, 0, cfg);
    CHECK(again.trace == r.trace);
    CHECK(again.cost.per_step == r.cost.per_step);
    CHECK(again.final_state == r.final_state);

    // Steps beyond the schedule are idle.
    CHECK(run(img, sched, 5, 0).trace.size() == 5);

    CHECK(code_of([&] { run(img, {{"nope"}}, 1, 0); }) == ErrorCode::UnknownAxonKey);
    CHECK(code_of([&] { run(img, sched, 1, 0, {.energy_per_access = 0.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("bias axons are driven on every step by run")
{
    NetworkBuilder b;
    b.add_model("m", NeuronModel::lif(2, -17, 63));
    b.add_axon("bias", {{"n", 1}}).add_neuron("n", "m").add_output("n").add_bias_axon("bias");
    const auto img = hbm::compile(b.build());
    const auto r = run(img, {}, 6, 0);
    // 1, 2, 3 -> fires on the step after reaching 3, then restarts.
    CHECK(r.trace == std::vector<std::vector<std::string>>{{}, {}, {}, {"n"}, {}, {}});
}

TEST_CASE("corrupt images raise IndexOutOfRange")
{
    const auto net = testgen::example_network(-17);
    auto img = hbm::compile(net);
    const auto [r, s] = img.axon_pointer_location(0);
    img.set_slot(r, s, hbm::PointerSlot{true, static_cast<std::uint32_t>(img.num_rows()), 2}.encode());
    EventEngine engine(img);
    auto st = engine.make_state(0);
    const std::uint32_t alpha[] = {0};
    CHECK(code_of([&] { engine.step(st, alpha); }) == ErrorCode::IndexOutOfRange);
    const std::uint32_t beyond[] = {7};
    CHECK(code_of([&] { engine.step(st, beyond); }) == ErrorCode::IndexOutOfRange);
    SimState wrong(2, 2, 0);
    CHECK(code_of([&] { engine.step(wrong, {}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("simulator synapse access on both backends")
{
    for (auto backend : {Backend::Oracle, Backend::Engine}) {
        Simulator sim(testgen::example_network(-17), backend, 0);
        CHECK(sim.read_synapse("alpha", "a") == 3);
        CHECK(sim.read_synapse("a", "b") == 1);
        CHECK(code_of([&] { (void)sim.read_synapse("b", "a"); }) == ErrorCode::NoSuchSynapse);
        sim.write_synapse("a", "b", 2);
        CHECK(sim.read_synapse("a", "b") == 2);
        sim.write_synapse("a", "b", 2);
        CHECK(sim.read_synapse("a", "b") == 2);
        CHECK(code_of([&] { sim.write_synapse("a", "b", 32768); }) == ErrorCode::WeightOverflow);
        CHECK(code_of([&] { sim.write_synapse("b", "a", 1); }) == ErrorCode::NoSuchSynapse);
        CHECK(sim.network().num_synapses() == 6);
        CHECK(code_of([&] { sim.read_membrane(std::vector<std::string>{"z"}); }) == ErrorCode::UnknownNeuronKey);
        CHECK(code_of([&] { sim.step(std::vector<std::string>{"gamma"}); }) == ErrorCode::UnknownAxonKey);
        // Duplicate inputs count once.
        sim.step(std::vector<std::string>{"alpha", "alpha"});
        CHECK(sim.read_membrane(std::vector<std::string>{"a"}) == std::vector<std::int32_t>{3});
    }
}

TEST_CASE("weight writes take effect identically on both backends")
{
    std::mt19937_64 g(10);
    for (int trial = 0; trial < 10; ++trial) {
        testgen::NetSpec spec;
        spec.max_neurons = 80;
        spec.noisy = true;
        const auto net = testgen::random_network(g, spec);
        const std::uint64_t seed = g();
        Simulator o(net, Backend::Oracle, seed), e(net, Backend::Engine, seed);
        const auto inputs = testgen::random_inputs(g, net.num_axons(), 40, 0.3);
        for (std::size_t t = 0; t < inputs.size(); ++t) {
            if (t % 7 == 3) {
                // Rewrite a random existing synapse.
                const auto a = static_cast<std::uint32_t>(g() % net.num_axons());
                const auto syn = net.axon_synapses(a);
                if (!syn.empty()) {
                    const auto& pick = syn[g() % syn.size()];
                    const auto w = static_cast<std::int16_t>(g());
                    o.write_synapse(net.axon_keys()[a], net.neuron_keys()[pick.post], w);
                    e.write_synapse(net.axon_keys()[a], net.neuron_keys()[pick.post], w);
                    REQUIRE(e.read_synapse(net.axon_keys()[a], net.neuron_keys()[pick.post]) == w);
                }
            }
            REQUIRE(o.step_indices(inputs[t]) == e.step_indices(inputs[t]));
            REQUIRE(o.state() == e.state());
        }
        REQUIRE(hbm::decompile(*e.image()) == e.network());
        REQUIRE(o.network() == e.network());
    }
}

TEST_CASE("least-squares regression")
{
    const std::vector<std::pair<double, double>> line = {{0, 1}, {1, 3}, {2, 5}, {10, 21}};
    auto fit = scaling_regression(line);
    CHECK(fit.slope == doctest::Approx(2.0));
    CHECK(fit.intercept == doctest::Approx(1.0));
    REQUIRE(fit.r_squared.has_value());
    CHECK(*fit.r_squared == doctest::Approx(1.0));

    const std::vector<std::pair<double, double>> two = {{1, 2}, {2, 3}};
    CHECK(code_of([&] { scaling_regression(two); }) == ErrorCode::DegenerateInput);
    const std::vector<std::pair<double, double>> same_x = {{3, 1}, {3, 2}, {3, 5}};
    CHECK(code_of([&] { scaling_regression(same_x); }) == ErrorCode::DegenerateInput);
    const std::vector<std::pair<double, double>> flat = {{1, 4}, {2, 4}, {3, 4}};
    fit = scaling_regression(flat);
    CHECK(fit.slope == 0.0);
    CHECK_FALSE(fit.r_squared.has_value());
}

TEST_CASE("regression over the published spiking-CNN gesture rows")
{
    // Neurons vs energy (uJ) and latency (us) of the three (2,63,63) / (2,90,90)
    // gesture models. Expected values come from numpy.polyfit on the same rows.
    const std::vector<std::pair<double, double>> energy = {{1115, 79.8}, {109615, 3268.1}, {17709, 510.7}};
    const std::vector<std::pair<double, double>> latency = {{1115, 184.9}, {109615, 7326.4}, {17709, 1156.2}};
    const auto fe = scaling_regression(energy);
    const auto fl = scaling_regression(latency);
    CHECK(fe.slope == doctest::Approx(0.02959368).epsilon(1e-6));
    CHECK(fe.intercept == doctest::Approx(19.20566862).epsilon(1e-6));
    CHECK(*fe.r_squared == doctest::Approx(0.9996912287).epsilon(1e-9));
    CHECK(fl.slope == doctest::Approx(0.06626464).epsilon(1e-6));
    CHECK(fl.intercept == doctest::Approx(52.17879472).epsilon(1e-6));
    CHECK(*fl.r_squared == doctest::Approx(0.9997200783).epsilon(1e-9));
    // The five-point fit published alongside has slopes 0.0294 and 0.0658.
    CHECK(std::abs(fe.slope - 0.0294) / 0.0294 < 0.01);
    CHECK(std::abs(fl.slope - 0.0658) / 0.0658 < 0.01);
    CHECK(*fe.r_squared >= 0.994);
    CHECK(*fl.r_squared >= 0.995);
}
