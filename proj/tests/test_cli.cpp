#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "support/gen.hpp"
#include "support/models.hpp"
#include "spikecore/converter.hpp"
#include "spikecore/hbm/compiler.hpp"
#include "spikecore/io/netlist.hpp"
#include "spikecore/io/schedule.hpp"

using namespace spikecore;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "spikecore");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = spikecore::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

bool contains(const std::string& s, std::string_view needle) { return s.find(needle) != std::string::npos; }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name)
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

/// Example network netlist plus its three-step schedule.
void write_example(const TempDir& d)
{
    io::save_netlist(d / "ex.json", testgen::example_network(-17));
    io::Schedule s;
    s.steps = {{"alpha", "beta"}, {"alpha", "beta"}, {}};
    s.blocks = {3};
    io::write_text_file(d / "sched.json", io::to_schedule_json(s));
}

} // namespace

TEST_CASE("cli compile")
{
    TempDir d("spikecore_cli_compile");
    write_example(d);
    const auto r = invoke({"compile", "--netlist", d / "ex.json", "--image", d / "ex.img"});
    CHECK(r.code == spikecore::cli::kExitOk);
    CHECK(contains(r.out, "axon_pointers 2\n"));
    CHECK(contains(r.out, "neuron_pointers 4\n"));
    CHECK(fs::exists(d / "ex.img"));

    io::save_netlist(d / "empty.json", NetworkBuilder{}.build());
    const auto e = invoke({"compile", "--netlist", d / "empty.json", "--image", d / "empty.img"});
    CHECK(e.code == spikecore::cli::kExitOk);
    CHECK(contains(e.out, "axon_pointers 0\n"));
    CHECK(contains(e.out, "real_synapses 0\n"));

    io::write_text_file(d / "bad.json", R"({"format": "spikecore-netlist", "version": 1,
  "axons": {"x": [["nowhere", 1]]}})");
    const auto bad = invoke({"compile", "--netlist", d / "bad.json", "--image", d / "bad.img"});
    CHECK(bad.code == spikecore::cli::kExitError);
    CHECK(contains(bad.err, "DanglingTarget"));
    CHECK(contains(bad.err, "line 2"));
}

TEST_CASE("cli run")
{
    TempDir d("spikecore_cli_run");
    write_example(d);
    for (std::string backend : {"oracle", "engine"}) {
        const auto r = invoke({"run", "--netlist", d / "ex.json", "--schedule", d / "sched.json", "--backend", backend});
        CHECK(r.code == spikecore::cli::kExitOk);
        CHECK(contains(r.out, "step 0 spikes=\n") != (backend == "engine"));
        CHECK(contains(r.out, "step 2 spikes=a,b"));
        CHECK(contains(r.out, "membranes a=0 b=1 c=3 d=2\n"));
    }

    // From an image, into a report file, with cost constants.
    REQUIRE(invoke({"compile", "--netlist", d / "ex.json", "--image", d / "ex.img"}).code == 0);
    const auto r = invoke({"run", "--image", d / "ex.img", "--schedule", d / "sched.json", "--energy-per-access", "2",
                        "--cycles-per-row", "3", "--clock-ns", "0.5", "--report", d / "r.txt"});
    CHECK(r.code == spikecore::cli::kExitOk);
    CHECK(r.out.empty());
    const auto text = io::read_text_file(d / "r.txt");
    // 6 pointer reads + 12 synapse rows, 3 scan cycles: 3 + 3 * 18 = 57 cycles.
    CHECK(contains(text, "accesses=18 cycles=57 energy=36 latency=28.5"));

    const auto zero = invoke({"run", "--netlist", d / "ex.json", "--steps", "0"});
    CHECK(zero.code == spikecore::cli::kExitOk);
    CHECK(contains(zero.out, "total steps=0"));
    CHECK_FALSE(contains(zero.out, "\nstep "));

    CHECK(invoke({"run", "--netlist", d / "ex.json", "--image", d / "ex.img"}).code == spikecore::cli::kExitError);
    CHECK(invoke({"run", "--netlist", d / "ex.json", "--backend", "fpga"}).code == spikecore::cli::kExitError);
    CHECK(invoke({"run", "--netlist", d / "ex.json", "--cycles-per-row", "0"}).code == spikecore::cli::kExitError);
    CHECK(invoke({"run", "--bogus"}).code == spikecore::cli::kExitError);
}

TEST_CASE("cli run is deterministic")
{
    TempDir d("spikecore_cli_det");
    std::mt19937_64 rng(31);
    testgen::NetSpec spec;
    spec.max_neurons = 128;
    spec.noisy = true;
    const auto net = testgen::random_network(rng, spec);
    io::save_netlist(d / "n.json", net);
    io::Schedule s;
    for (const auto& step : testgen::random_inputs(rng, net.num_axons(), 30, 0.3)) {
        auto& keys = s.steps.emplace_back();
        for (auto a : step) {
            keys.push_back(net.axon_keys()[a]);
        }
    }
    s.blocks = {10, 10, 10};
    io::write_text_file(d / "s.json", io::to_schedule_json(s));
    for (std::string backend : {"oracle", "engine"}) {
        const std::vector<std::string> args{"run",    "--netlist", d / "n.json", "--schedule", d / "s.json",
                                            "--seed", "99",        "--backend",  backend};
        const auto a = invoke(args), b = invoke(args);
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
    }
}

TEST_CASE("cli diff")
{
    TempDir d("spikecore_cli_diff");
    write_example(d);
    const auto ok = invoke({"diff", "--netlist", d / "ex.json", "--schedule", d / "sched.json"});
    CHECK(ok.code == spikecore::cli::kExitOk);
    CHECK(ok.out == "PASS steps=3\n");

    auto image = hbm::compile(testgen::example_network(-17));
    hbm::patch_weight(image, "beta", "b", -5);
    hbm::save_image(d / "bad.img", image);
    const auto bad = invoke({"diff", "--netlist", d / "ex.json", "--image", d / "bad.img", "--schedule", d / "sched.json"});
    CHECK(bad.code == spikecore::cli::kExitDiverged);
    CHECK(contains(bad.out, "FAIL step=0 neuron=b"));

    io::save_netlist(d / "empty.json", NetworkBuilder{}.build());
    const auto empty = invoke({"diff", "--netlist", d / "empty.json", "--steps", "3"});
    CHECK(empty.code == spikecore::cli::kExitOk);
    CHECK(empty.out == "PASS steps=3\n");
}

TEST_CASE("cli convert")
{
    TempDir d("spikecore_cli_convert");
    std::mt19937_64 rng(32);
    const auto models = testgen::reference_models(rng);
    for (std::size_t i : {std::size_t{0}, std::size_t{3}}) {
        const auto& m = models[i];
        const std::string dir = d / ("m" + std::to_string(i));
        convert::save_archive(dir, {m.input, m.layers});
        const auto r = invoke({"convert", "--archive", dir, "--netlist", d / "out.json"});
        CAPTURE(m.name);
        CHECK(r.code == spikecore::cli::kExitOk);
        CHECK(contains(r.out, "axons " + std::to_string(m.axons) + "\n"));
        CHECK(contains(r.out, "neurons " + std::to_string(m.neurons) + "\n"));
        CHECK(contains(r.out, "params " + std::to_string(m.params) + "\n"));
        CHECK(contains(r.out, "closed_form match\n"));
        CHECK(io::load_netlist(d / "out.json").num_neurons() == m.neurons);
    }

    // Biased layer with a bias axon, fixed alpha.
    auto small = models[0];
    small.layers[0].bias.assign(128, 0.25);
    convert::save_archive(d / "biased", {small.input, small.layers});
    const auto b = invoke({"convert", "--archive", d / "biased", "--netlist", d / "b.json", "--bias-strategy",
                        "bias_axon", "--quant-alpha", "1000"});
    CHECK(b.code == spikecore::cli::kExitOk);
    CHECK(contains(b.out, "bias_sources 1\n"));
    CHECK(contains(b.out, "scale=1000\n"));
    CHECK(io::load_netlist(d / "b.json").bias_axons().size() == 1);

    auto broken = models[0];
    broken.layers[1] = testgen::fc(rng, 127, 10);
    convert::save_archive(d / "broken", {broken.input, broken.layers});
    const auto e = invoke({"convert", "--archive", d / "broken", "--netlist", d / "x.json"});
    CHECK(e.code == spikecore::cli::kExitError);
    CHECK(contains(e.err, "ShapeMismatch"));
    CHECK(contains(e.err, "layer 1"));
}

TEST_CASE("cli scaling")
{
    TempDir d("spikecore_cli_scaling");
    const auto r = invoke({"scaling", "--scales", "1,2,3", "--hidden", "16", "--inferences", "2"});
    CHECK(r.code == spikecore::cli::kExitOk);
    CHECK(contains(r.out, "points 3\n"));
    CHECK(contains(r.out, "fit accesses slope="));
    CHECK(contains(r.out, "scale,neurons,"));
    CHECK(r.out == invoke({"scaling", "--scales", "1,2,3", "--hidden", "16", "--inferences", "2"}).out);

    CHECK(invoke({"scaling", "--scales", "1,2"}).code == spikecore::cli::kExitError);

    write_example(d);
    const auto same = invoke({"scaling", "--netlist", d / "ex.json", "--schedule", d / "sched.json", "--scales", "1,1,1"});
    CHECK(same.code == spikecore::cli::kExitOk);
    CHECK(contains(same.out, "fit accesses degenerate"));

    const auto rep = invoke({"scaling", "--netlist", d / "ex.json", "--schedule", d / "sched.json", "--scales", "1,2,3"});
    CHECK(rep.code == spikecore::cli::kExitOk);
    // Replication scales every counter exactly: 18 accesses per copy.
    CHECK(contains(rep.out, "fit accesses slope=4.5 intercept=0 r2=1\n"));
}

TEST_CASE("cli defaults file")
{
    TempDir d("spikecore_cli_config");
    write_example(d);
    io::write_text_file(d / "cfg.json", R"({"backend": "oracle", "seed": 5})");
    ::setenv("SPIKECORE_CONFIG", (d / "cfg.json").c_str(), 1);
    const auto r = invoke({"run", "--netlist", d / "ex.json", "--steps", "1"});
    const auto flag = invoke({"run", "--netlist", d / "ex.json", "--steps", "1", "--seed", "6"});
    io::write_text_file(d / "cfg.json", R"({"colour": "red"})");
    const auto bad = invoke({"run", "--netlist", d / "ex.json"});
    ::unsetenv("SPIKECORE_CONFIG");
    CHECK(contains(r.out, "backend oracle\nseed 5\n"));
    CHECK(contains(flag.out, "seed 6\n"));
    CHECK(bad.code == spikecore::cli::kExitError);
    CHECK(contains(bad.err, "colour"));
}
