#include "sm/diagram_log.hpp"

#include "sm/errors.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace sm {
namespace {

using json = nlohmann::json;

Rat parse_rat(const json& j, const char* what) {
    if (!j.is_string()) throw Error(ErrorKind::SyntaxError, std::string(what) + " not a string");
    auto r = Rat::parse(j.get<std::string>());
    if (!r) throw Error(ErrorKind::SyntaxError, std::string(what) + " is not a rational");
    return *r;
}

json value_to_json(const ExtendedValue& v) {
    if (v.is_signal()) return v.signal_name();
    json rule;
    rule["in"] = v.rule().incoming;
    rule["out"] = v.rule().outgoing;
    return rule;
}

ExtendedValue value_from_json(const json& j) {
    if (j.is_string()) return ExtendedValue::signal(j.get<std::string>());
    CollisionRule r;
    r.incoming = CollisionRule::canon(j.at("in").get<std::vector<std::string>>());
    r.outgoing = CollisionRule::canon(j.at("out").get<std::vector<std::string>>());
    return ExtendedValue::collision(std::move(r));
}

}  // namespace

std::string write_diagram_log(const SpaceTimeDiagram& d) {
    std::ostringstream os;
    json header;
    header["type"] = "header";
    header["machine"] = d.machine->name;
    json cfg = json::array();
    for (const auto& e : d.initial.entries()) {
        json item;
        item["x"] = e.pos.str_pq();
        item["v"] = value_to_json(e.value);
        cfg.push_back(std::move(item));
    }
    header["config"] = std::move(cfg);
    os << header.dump() << "\n";

    for (const auto& e : d.events) {
        json line;
        line["type"] = "collision";
        line["t"] = e.time.str_pq();
        line["x"] = e.pos.str_pq();
        line["in"] = e.incoming;
        line["out"] = e.outgoing;
        os << line.dump() << "\n";
    }

    json end;
    end["type"] = "end";
    end["termination"] = termination_name(d.termination);
    if (d.horizon)
        end["horizon"] = d.horizon->str_pq();
    else
        end["horizon"] = "unbounded";
    os << end.dump() << "\n";
    return os.str();
}

SpaceTimeDiagram read_diagram_log(const std::string& text,
                                  std::shared_ptr<const SignalMachine> machine) {
    SpaceTimeDiagram d;
    d.machine = std::move(machine);
    std::istringstream is(text);
    std::string line;
    bool saw_header = false, saw_end = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorKind::SyntaxError, "malformed log line");
        const std::string type = j.value("type", "");
        if (type == "header") {
            saw_header = true;
            if (j.at("machine").get<std::string>() != d.machine->name)
                throw Error(ErrorKind::ValidationError,
                            "log is for machine '" + j.at("machine").get<std::string>() + "'");
            for (const auto& item : j.at("config"))
                d.initial.put(parse_rat(item.at("x"), "x"), value_from_json(item.at("v")));
        } else if (type == "collision") {
            CollisionEvent e;
            e.time = parse_rat(j.at("t"), "t");
            e.pos = parse_rat(j.at("x"), "x");
            e.incoming = CollisionRule::canon(j.at("in").get<std::vector<std::string>>());
            e.outgoing = CollisionRule::canon(j.at("out").get<std::vector<std::string>>());
            d.events.push_back(std::move(e));
        } else if (type == "end") {
            saw_end = true;
            std::string term = j.at("termination").get<std::string>();
            if (term == "quiescent")
                d.termination = Termination::Quiescent;
            else if (term == "horizon")
                d.termination = Termination::HorizonReached;
            else if (term == "accumulation-suspected")
                d.termination = Termination::AccumulationSuspected;
            else if (term == "event-cap")
                d.termination = Termination::EventCapReached;
            else
                throw Error(ErrorKind::SyntaxError, "unknown termination '" + term + "'");
            std::string h = j.at("horizon").get<std::string>();
            if (h != "unbounded") {
                auto r = Rat::parse(h);
                if (!r) throw Error(ErrorKind::SyntaxError, "bad horizon");
                d.horizon = *r;
            }
        } else {
            throw Error(ErrorKind::SyntaxError, "unknown log line type '" + type + "'");
        }
    }
    if (!saw_header || !saw_end)
        throw Error(ErrorKind::SyntaxError, "log missing header or end line");
    d.initial.validate_for(*d.machine);
    return d;
}

}  // namespace sm
