#pragma once

#include "sm/machine.hpp"

#include <string>
#include <vector>

namespace sm {

/// A parsed source file: named machines plus named configurations, each
/// configuration bound to a machine.
struct SourceDocument {
    struct NamedConfig {
        std::string name;
        std::string machine;  // name of the machine it belongs to
        Configuration config;
    };

    std::vector<SignalMachine> machines;
    std::vector<NamedConfig> configs;

    const SignalMachine* find_machine(const std::string& name) const {
        for (const auto& m : machines)
            if (m.name == name) return &m;
        return nullptr;
    }
    const NamedConfig* find_config(const std::string& name) const {
        for (const auto& c : configs)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Parses the textual machine/configuration format.
///
///   machine M
///     signal a speed -1
///     signal b speed 1
///     rule {a,b} -> {b}
///   config start for M
///     at 0: a
///     at 1/2: b
///     at 3: collision {a,b} -> {b}
///
/// Comments run from '#' to end of line. Rationals are "p", "p/q" or finite
/// decimals, parsed exactly. All machine and configuration invariants are
/// enforced here; errors carry line/column.
SourceDocument parse_document(const std::string& text);

/// Canonical serialization: machines by name, signals by name, rules by
/// sorted incoming set, configs by name with entries by position. LF endings.
/// parse(serialize(d)) is structurally equal to serialize-canonicalized d.
std::string serialize_document(const SourceDocument& doc);

}  // namespace sm
