#include "sm/codec.hpp"
#include "sm/diagram_log.hpp"
#include "sm/dsl.hpp"
#include "sm/engine.hpp"
#include "sm/render.hpp"
#include "sm/universal.hpp"
#include "sm/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sm::Error(sm::ErrorKind::ValidationError, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sm::Error(sm::ErrorKind::ValidationError, "cannot write '" + path + "'");
    out << text;
}

sm::Rat parse_rat_arg(const std::string& text, const char* what) {
    auto r = sm::Rat::parse(text);
    if (!r)
        throw sm::Error(sm::ErrorKind::ValidationError,
                        std::string(what) + " is not a rational: '" + text + "'");
    return *r;
}

std::vector<sm::Rat> parse_speed_list(const std::string& text) {
    std::vector<sm::Rat> speeds;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        size_t b = item.find_first_not_of(" \t");
        size_t e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        speeds.push_back(parse_rat_arg(item.substr(b, e - b + 1), "speed"));
    }
    std::sort(speeds.begin(), speeds.end());
    speeds.erase(std::unique(speeds.begin(), speeds.end()), speeds.end());
    return speeds;
}

/// Speed set for a simulated machine: explicit --speeds or the machine's own.
sm::SpeedSet speed_set_for(const sm::SignalMachine& m, const std::string& speeds_arg) {
    if (!speeds_arg.empty()) return sm::SpeedSet(parse_speed_list(speeds_arg));
    std::vector<sm::Rat> speeds;
    for (const auto& s : m.signals) speeds.push_back(s.speed);
    std::sort(speeds.begin(), speeds.end());
    speeds.erase(std::unique(speeds.begin(), speeds.end()), speeds.end());
    return sm::SpeedSet(speeds);
}

struct MachineConfig {
    std::shared_ptr<const sm::SignalMachine> machine;
    sm::Configuration config;
};

MachineConfig load_machine_config(const std::string& path, const std::string& config_name) {
    sm::SourceDocument doc = sm::parse_document(slurp(path));
    const auto* cfg = doc.find_config(config_name);
    if (!cfg)
        throw sm::Error(sm::ErrorKind::ValidationError,
                        "no config '" + config_name + "' in " + path);
    const auto* m = doc.find_machine(cfg->machine);
    auto machine = std::make_shared<sm::SignalMachine>(*m);
    machine->rebuild_index();
    return {machine, cfg->config};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"signal machine toolkit: exact simulation, simulator compilation, "
                 "encoding/decoding and simulation checking"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a machine and write the diagram log");
    std::string sim_machine, sim_config, sim_until, sim_out;
    size_t sim_events = 100000;
    sim->add_option("--machine", sim_machine, ".sm file")->required();
    sim->add_option("--config", sim_config, "configuration name")->required();
    sim->add_option("--until", sim_until, "time horizon p/q");
    sim->add_option("--events", sim_events, "event cap");
    sim->add_option("--out", sim_out, "output log path (default stdout)");

    // compile-universal
    auto* comp = app.add_subcommand("compile-universal",
                                    "generate the simulator machine for a speed set");
    std::string comp_speeds, comp_out, comp_tags;
    comp->add_option("--speeds", comp_speeds, "comma-separated rationals")->required();
    comp->add_option("--out", comp_out, "output .sm path")->required();
    comp->add_option("--tags", comp_tags, "sidecar tag map path");

    // encode
    auto* enc = app.add_subcommand("encode", "represent a configuration for the simulator");
    std::string enc_machine, enc_config, enc_speeds, enc_out;
    enc->add_option("--machine", enc_machine, ".sm file")->required();
    enc->add_option("--config", enc_config, "configuration name")->required();
    enc->add_option("--speeds", enc_speeds, "speed set (default: the machine's)");
    enc->add_option("--out", enc_out, "output .sm path (simulator machine + config)");

    // decode
    auto* dec = app.add_subcommand("decode", "decode a simulator diagram log");
    std::string dec_machine, dec_log, dec_at = "0", dec_speeds;
    dec->add_option("--machine", dec_machine, "simulated .sm file")->required();
    dec->add_option("--log", dec_log, "simulator diagram log")->required();
    dec->add_option("--at", dec_at, "time p/q to reconstruct and decode");
    dec->add_option("--speeds", dec_speeds, "speed set (default: the machine's)");

    // verify
    auto* ver = app.add_subcommand("verify", "check the simulation relation");
    std::string ver_machine, ver_config, ver_speeds;
    size_t ver_samples = 0;
    uint64_t ver_seed = 0;
    ver->add_option("--machine", ver_machine, ".sm file")->required();
    ver->add_option("--config", ver_config, "configuration name")->required();
    ver->add_option("--samples", ver_samples, "extra random sample times");
    ver->add_option("--seed", ver_seed, "sampling seed");
    ver->add_option("--speeds", ver_speeds, "speed set (default: the machine's)");

    // render
    auto* ren = app.add_subcommand("render", "emit a space-time diagram as SVG");
    std::string ren_machine, ren_log, ren_svg, ren_viewport;
    bool ren_labels = false;
    ren->add_option("--machine", ren_machine, ".sm file declaring the log's machine")->required();
    ren->add_option("--log", ren_log, "diagram log")->required();
    ren->add_option("--svg", ren_svg, "output SVG path")->required();
    ren->add_option("--viewport", ren_viewport, "x0:x1,t0:t1");
    ren->add_flag("--labels", ren_labels, "draw signal names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) {
            auto [machine, config] = load_machine_config(sim_machine, sim_config);
            sm::RunLimits limits;
            limits.event_cap = sim_events;
            if (!sim_until.empty()) limits.horizon = parse_rat_arg(sim_until, "--until");
            sm::SpaceTimeDiagram d = sm::run(machine, config, limits);
            std::string log = sm::write_diagram_log(d);
            if (sim_out.empty())
                std::cout << log;
            else
                spit(sim_out, log);
            std::cerr << d.events.size() << " collisions, termination: "
                      << sm::termination_name(d.termination) << "\n";
        } else if (*comp) {
            sm::SpeedSet set(parse_speed_list(comp_speeds));
            sm::UniversalMachine u = sm::generate_universal(set);
            sm::SourceDocument doc;
            doc.machines.push_back(*u.machine);
            spit(comp_out, sm::serialize_document(doc));
            if (!comp_tags.empty()) spit(comp_tags, sm::write_tags_json(u));
            std::cerr << u.machine->signals.size() << " meta-signals, "
                      << u.machine->rules.size() << " rules\n";
        } else if (*enc) {
            auto [machine, config] = load_machine_config(enc_machine, enc_config);
            auto u = std::make_shared<sm::UniversalMachine>(
                sm::generate_universal(speed_set_for(*machine, enc_speeds)));
            sm::Codec codec(machine, u);
            sm::SourceDocument doc;
            doc.machines.push_back(*u->machine);
            doc.configs.push_back({"encoded", u->machine->name, codec.repr_config(config)});
            if (enc_out.empty())
                std::cout << sm::serialize_document(doc);
            else
                spit(enc_out, sm::serialize_document(doc));
        } else if (*dec) {
            sm::SourceDocument doc = sm::parse_document(slurp(dec_machine));
            if (doc.machines.empty())
                throw sm::Error(sm::ErrorKind::ValidationError, "no machine in " + dec_machine);
            auto machine = std::make_shared<sm::SignalMachine>(doc.machines.front());
            machine->rebuild_index();
            auto u = std::make_shared<sm::UniversalMachine>(
                sm::generate_universal(speed_set_for(*machine, dec_speeds)));
            sm::Codec codec(machine, u);
            sm::SpaceTimeDiagram d = sm::read_diagram_log(slurp(dec_log), u->machine);
            sm::Configuration at = sm::config_at(d, parse_rat_arg(dec_at, "--at"));
            sm::SourceDocument out;
            out.machines.push_back(*machine);
            out.configs.push_back({"decoded", machine->name, codec.decode_config(at)});
            std::cout << sm::serialize_document(out);
        } else if (*ver) {
            auto [machine, config] = load_machine_config(ver_machine, ver_config);
            auto u = std::make_shared<sm::UniversalMachine>(
                sm::generate_universal(speed_set_for(*machine, ver_speeds)));
            auto codec = std::make_shared<sm::Codec>(machine, u);
            sm::UniversalTranslation tr(codec);
            sm::CheckOptions options;
            options.tags = u.get();
            if (ver_samples > 0) {
                sm::TestGen gen(ver_seed);
                sm::RunLimits probe;
                probe.event_cap = 100000;
                sm::SpaceTimeDiagram d = sm::run(machine, config, probe);
                sm::Rat last = d.events.empty() ? sm::Rat(1) : d.events.back().time;
                for (size_t s = 0; s < ver_samples; ++s) {
                    sm::Rat fraction(gen.pick(0, 997), 997);
                    options.extra_samples.push_back(fraction * last);
                }
            }
            sm::EquivalenceReport report =
                sm::check_simulation(machine, config, u->machine, tr, options);
            std::cout << report.to_json() << "\n";
            return report.ok() ? 0 : 1;
        } else if (*ren) {
            sm::SourceDocument doc = sm::parse_document(slurp(ren_machine));
            if (doc.machines.empty())
                throw sm::Error(sm::ErrorKind::ValidationError, "no machine in " + ren_machine);
            auto machine = std::make_shared<sm::SignalMachine>(doc.machines.front());
            machine->rebuild_index();
            sm::SpaceTimeDiagram d = sm::read_diagram_log(slurp(ren_log), machine);
            sm::RenderStyle style;
            if (!ren_viewport.empty()) {
                size_t comma = ren_viewport.find(',');
                if (comma == std::string::npos)
                    throw sm::Error(sm::ErrorKind::ValidationError, "--viewport wants x0:x1,t0:t1");
                auto split = [](const std::string& s) {
                    size_t colon = s.find(':');
                    if (colon == std::string::npos)
                        throw sm::Error(sm::ErrorKind::ValidationError, "bad viewport range");
                    return std::pair{parse_rat_arg(s.substr(0, colon), "viewport"),
                                     parse_rat_arg(s.substr(colon + 1), "viewport")};
                };
                std::tie(style.x0, style.x1) = split(ren_viewport.substr(0, comma));
                std::tie(style.t0, style.t1) = split(ren_viewport.substr(comma + 1));
            } else {
                // Fit the initial configuration and the events.
                sm::Rat xmin(0), xmax(0), tmax(1);
                bool first = true;
                auto widen = [&](const sm::Rat& x) {
                    if (first || x < xmin) xmin = x;
                    if (first || xmax < x) xmax = x;
                    first = false;
                };
                for (const auto& e : d.initial.entries()) widen(e.pos);
                for (const auto& e : d.events) {
                    widen(e.pos);
                    if (tmax < e.time) tmax = e.time;
                }
                sm::Rat pad = (xmax - xmin + sm::Rat(1)) / sm::Rat(10);
                style.x0 = xmin - pad;
                style.x1 = xmax + pad;
                style.t0 = sm::Rat(0);
                style.t1 = tmax + pad;
            }
            style.labels = ren_labels;
            spit(ren_svg, sm::render_svg(d, style));
        }
    } catch (const sm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case sm::ErrorKind::SyntaxError:
            case sm::ErrorKind::ValidationError: return 2;
            default: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
