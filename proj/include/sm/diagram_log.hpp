#pragma once

#include "sm/engine.hpp"

#include <iosfwd>
#include <string>

namespace sm {

/// JSON Lines diagram log. Line 1 is the header with the machine name and the
/// initial configuration, then one line per collision in event order, then an
/// end line with the termination tag and horizon. Rationals are serialized as
/// lowest-terms "p/q" strings and round-trip bit-exactly.
std::string write_diagram_log(const SpaceTimeDiagram& d);

/// Parses a diagram log. The machine is looked up by name through `machine`;
/// entries are validated against it.
SpaceTimeDiagram read_diagram_log(const std::string& text,
                                  std::shared_ptr<const SignalMachine> machine);

}  // namespace sm
