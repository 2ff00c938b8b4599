#pragma once

#include "sm/engine.hpp"

#include <optional>
#include <string>

namespace sm {

/// Rendering options. Coordinates stay exact until pixel emission; colors are
/// derived from a stable hash of the meta-signal's family prefix so related
/// signals share a hue.
struct RenderStyle {
    Rat x0{-10}, x1{10};
    Rat t0{0}, t1{10};
    double scale = 64.0;       // pixels per space/time unit
    bool labels = false;
    bool event_dots = true;
};

/// One SVG 1.1 document: a line segment per signal trace, time upward,
/// deterministic for fixed inputs.
std::string render_svg(const SpaceTimeDiagram& d, const RenderStyle& style);

}  // namespace sm
