#include "cli.hpp"

#include <cstdlib>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "scaling.hpp"
#include "spikecore/converter.hpp"
#include "spikecore/error.hpp"
#include "spikecore/hbm/compiler.hpp"
#include "spikecore/io/netlist.hpp"
#include "spikecore/io/report.hpp"
#include "spikecore/io/schedule.hpp"
#include "spikecore/runner.hpp"

namespace spikecore::cli {

namespace {

struct Options {
    std::string netlist, image, schedule, report, archive;
    std::optional<std::size_t> steps;
    std::uint64_t seed = 0;
    std::string backend = "engine";
    double energy_per_access = 1.0;
    std::uint32_t cycles_per_row = 1;
    double clock_ns = 1.0;
    std::optional<double> quant_alpha;
    std::string bias_strategy = "threshold_shift";
    std::uint64_t capacity_rows = hbm::kDefaultCapacityRows;
    // scaling
    std::vector<double> scales{1, 2, 3, 4, 5};
    std::uint32_t hidden = 64;
    std::size_t inferences = 4;
    double density = 0.2;
};

/// Applies the defaults file named by SPIKECORE_CONFIG, if any.
void load_defaults(Options& o)
{
    const char* path = std::getenv("SPIKECORE_CONFIG");
    if (path == nullptr || *path == '\0') {
        return;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string(path) + ": " + e.what());
    }
    if (!j.is_object()) {
        throw Error(ErrorCode::ParseError, std::string(path) + ": expected a JSON object");
    }
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "seed") {
                o.seed = v.get<std::uint64_t>();
            } else if (key == "backend") {
                o.backend = v.get<std::string>();
            } else if (key == "steps") {
                o.steps = v.get<std::size_t>();
            } else if (key == "energy_per_access") {
                o.energy_per_access = v.get<double>();
            } else if (key == "cycles_per_row") {
                o.cycles_per_row = v.get<std::uint32_t>();
            } else if (key == "clock_ns") {
                o.clock_ns = v.get<double>();
            } else if (key == "quant_alpha") {
                o.quant_alpha = v.get<double>();
            } else if (key == "bias_strategy") {
                o.bias_strategy = v.get<std::string>();
            } else {
                throw Error(ErrorCode::ParseError, std::string(path) + ": unknown setting '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string(path) + ": " + e.what());
    }
}

CostConfig cost_of(const Options& o)
{
    CostConfig c{o.energy_per_access, o.cycles_per_row, o.clock_ns};
    c.validate();
    return c;
}

/// Schedule from --schedule (or none), fitted to --steps when given.
io::Schedule schedule_of(const Options& o)
{
    io::Schedule s;
    if (!o.schedule.empty()) {
        s = io::load_schedule(o.schedule);
    }
    if (o.steps) {
        s = io::fit_steps(std::move(s), *o.steps);
    }
    return s;
}

void emit(const Options& o, std::ostream& out, const std::string& text)
{
    if (o.report.empty()) {
        out << text;
    } else {
        io::write_text_file(o.report, text);
    }
}

int cmd_compile(const Options& o, std::ostream& out)
{
    const auto net = io::load_netlist(o.netlist);
    const auto image = hbm::compile(net, {o.capacity_rows});
    hbm::save_image(o.image, image);
    const auto s = hbm::summarize(image);
    out << fmt::format("image {}\nmodels {}\naxon_pointers {}\nneuron_pointers {}\nsynapse_rows {}\n"
                       "real_synapses {}\ndummy_synapses {}\ntotal_rows {}\n",
                       o.image, s.models, s.axon_pointers, s.neuron_pointers, s.synapse_rows, s.real_synapses,
                       s.dummy_synapses, s.total_rows);
    return kExitOk;
}

int cmd_run(const Options& o, std::ostream& out)
{
    if (o.netlist.empty() == o.image.empty()) {
        throw Error(ErrorCode::InvalidArgument, "run needs exactly one of --netlist or --image");
    }
    RunOptions ro;
    ro.backend = parse_backend(o.backend);
    ro.seed = o.seed;
    ro.cost = cost_of(o);
    const auto schedule = schedule_of(o);
    const auto rec = o.netlist.empty() ? run_image(hbm::load_image(o.image), schedule, ro)
                                       : run_network(io::load_netlist(o.netlist), schedule, ro);
    emit(o, out, io::format_report(rec));
    return kExitOk;
}

int cmd_diff(const Options& o, std::ostream& out)
{
    const auto net = io::load_netlist(o.netlist);
    const auto image = o.image.empty() ? hbm::compile(net) : hbm::load_image(o.image);
    const auto r = diff_backends(net, image, schedule_of(o), o.seed);
    if (r.pass) {
        out << fmt::format("PASS steps={}\n", r.steps);
        return kExitOk;
    }
    out << fmt::format("FAIL step={} neuron={} {}\n", r.first->step, io::encode_key(r.first->neuron),
                       r.first->what);
    return kExitDiverged;
}

std::string_view kind_name(convert::LayerKind k)
{
    switch (k) {
    case convert::LayerKind::Conv:
        return "conv";
    case convert::LayerKind::MaxPool:
        return "maxpool";
    case convert::LayerKind::FC:
        return "fc";
    }
    return "?";
}

int cmd_convert(const Options& o, std::ostream& out)
{
    const auto model = convert::load_archive(o.archive);
    convert::ConvertOptions co;
    co.bias = convert::parse_bias_strategy(o.bias_strategy);
    co.alpha = o.quant_alpha;
    const auto c = convert::convert_model(model.input, model.layers, co);
    io::save_netlist(o.netlist, c.network);

    const auto closed = convert::closed_form_report(model.input, model.layers);
    const auto& r = c.report;
    const bool match = closed.axons == r.axons && closed.neurons == r.neurons && closed.params == r.params &&
                       closed.synapses == r.synapses;
    std::string text = fmt::format("spikecore-convert 1\ninput {}\n", convert::to_string(model.input));
    convert::Shape3 in = model.input;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        text += fmt::format("layer {} kind={} shape={} params={} scale={}\n", l, kind_name(model.layers[l].kind),
                            convert::to_string(c.shapes[l]), convert::parameter_count(in, model.layers[l]),
                            c.scales[l]);
        in = c.shapes[l];
    }
    text += fmt::format("axons {}\nneurons {}\nparams {}\nsynapses {}\nbias_strategy {}\nbias_sources {}\n"
                        "bias_synapses {}\nclosed_form {}\nnetlist {}\nend\n",
                        r.axons, r.neurons, r.params, r.synapses, convert::to_string(co.bias), r.bias_sources,
                        r.bias_synapses, match ? "match" : "mismatch", o.netlist);
    emit(o, out, text);
    return match ? kExitOk : kExitError;
}

int cmd_scaling(const Options& o, std::ostream& out)
{
    std::vector<FamilyMember> family;
    if (o.netlist.empty()) {
        const auto schedule = o.schedule.empty() ? frame_schedule(784, o.inferences, o.density, o.seed)
                                                 : io::load_schedule(o.schedule);
        for (double s : o.scales) {
            const double hidden = s * o.hidden;
            if (!(hidden >= 1.0) || hidden > 1e6) {
                throw Error(ErrorCode::InvalidArgument, fmt::format("scale {} gives an invalid hidden width", s));
            }
            const auto h = static_cast<std::uint32_t>(std::llround(hidden));
            auto sched = o.steps ? io::fit_steps(schedule, *o.steps) : schedule;
            family.push_back({s, mlp_member(h, o.seed + h), std::move(sched)});
        }
    } else {
        const auto base = io::load_netlist(o.netlist);
        const auto schedule = schedule_of(o);
        for (double s : o.scales) {
            if (s < 1.0 || s != std::floor(s)) {
                throw Error(ErrorCode::InvalidArgument,
                            fmt::format("replication scale {} must be a positive integer", s));
            }
            const auto k = static_cast<std::size_t>(s);
            family.push_back({s, replicate(base, k), replicate_schedule(schedule, k)});
        }
    }
    emit(o, out, format_scaling(run_scaling(family, o.seed, cost_of(o))));
    return kExitOk;
}

void add_cost(CLI::App* c, Options& o)
{
    c->add_option("--energy-per-access", o.energy_per_access, "Energy per HBM row access")->capture_default_str();
    c->add_option("--cycles-per-row", o.cycles_per_row, "Cycles charged per row access")->capture_default_str();
    c->add_option("--clock-ns", o.clock_ns, "Clock period in ns; latency is reported in ns")->capture_default_str();
}

void add_steps(CLI::App* c, Options& o)
{
    c->add_option("--schedule", o.schedule, "Input schedule (JSON)");
    c->add_option("--steps", o.steps, "Pad or truncate the schedule to this many steps");
    c->add_option("--seed", o.seed, "Noise seed")->capture_default_str();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    Options o;
    try {
        load_defaults(o);
    } catch (const Error& e) {
        err << "error: SPIKECORE_CONFIG: " << e.what() << '\n';
        return kExitError;
    }

    CLI::App app("Event-driven spiking network compiler and simulator", "spikecore");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");

    auto* compile = app.add_subcommand("compile", "Compile a netlist into a memory image");
    compile->add_option("--netlist", o.netlist, "Input netlist")->required();
    compile->add_option("--image", o.image, "Output image file")->required();
    compile->add_option("--capacity-rows", o.capacity_rows, "Image capacity in rows")->capture_default_str();

    auto* run = app.add_subcommand("run", "Run a schedule and write a report");
    run->add_option("--netlist", o.netlist, "Input netlist");
    run->add_option("--image", o.image, "Input image");
    add_steps(run, o);
    run->add_option("--backend", o.backend, "oracle or engine")->capture_default_str();
    add_cost(run, o);
    run->add_option("--report", o.report, "Report path (default stdout)");

    auto* diff = app.add_subcommand("diff", "Cross-check the oracle against the engine");
    diff->add_option("--netlist", o.netlist, "Reference netlist")->required();
    diff->add_option("--image", o.image, "Image to check (default: compile the netlist)");
    add_steps(diff, o);

    auto* conv = app.add_subcommand("convert", "Convert a layered model archive into a netlist");
    conv->add_option("--archive", o.archive, "Model archive directory")->required();
    conv->add_option("--netlist", o.netlist, "Output netlist")->required();
    conv->add_option("--quant-alpha", o.quant_alpha, "Fixed quantization scale for every layer");
    conv->add_option("--bias-strategy", o.bias_strategy, "threshold_shift, bias_axon or always_on_neuron")
        ->capture_default_str();
    conv->add_option("--report", o.report, "Structural report path (default stdout)");

    auto* scaling = app.add_subcommand("scaling", "Fit memory accesses and cycles against network size");
    scaling->add_option("--netlist", o.netlist, "Base netlist replicated per scale (default: generated MLP family)");
    add_steps(scaling, o);
    scaling->add_option("--scales", o.scales, "Scale factors")->delimiter(',')->capture_default_str();
    scaling->add_option("--hidden", o.hidden, "Hidden width at scale 1 of the generated family")
        ->capture_default_str();
    scaling->add_option("--inferences", o.inferences, "Generated three-step inference blocks")->capture_default_str();
    scaling->add_option("--density", o.density, "Generated input density")->capture_default_str();
    add_cost(scaling, o);
    scaling->add_option("--report", o.report, "Report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (compile->parsed()) {
            return cmd_compile(o, out);
        }
        if (run->parsed()) {
            return cmd_run(o, out);
        }
        if (diff->parsed()) {
            return cmd_diff(o, out);
        }
        if (conv->parsed()) {
            return cmd_convert(o, out);
        }
        return cmd_scaling(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

} // namespace spikecore::cli
