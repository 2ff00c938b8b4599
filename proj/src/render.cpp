#include "sm/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace sm {
namespace {

/// Family prefix of a generated or user name: the longest leading run of
/// alphabetic/underscore characters, so id_2 and id_3 share a color.
std::string family_prefix(const std::string& name) {
    size_t end = 0;
    while (end < name.size() &&
           (std::isalpha(static_cast<unsigned char>(name[end])) || name[end] == '_'))
        ++end;
    while (end > 0 && name[end - 1] == '_') --end;
    return name.substr(0, end);
}

uint32_t fnv1a(const std::string& s) {
    uint32_t h = 2166136261u;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 16777619u;
    }
    return h;
}

std::string color_of(const std::string& name) {
    uint32_t h = fnv1a(family_prefix(name)) % 360u;
    std::ostringstream os;
    os << "hsl(" << h << ",65%,40%)";
    return os.str();
}

struct Segment {
    Rat x0, t0, x1, t1;
    std::string name;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << v;
    std::string s = os.str();
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s.empty() ? "0" : s;
}

}  // namespace

std::string render_svg(const SpaceTimeDiagram& d, const RenderStyle& style) {
    // Gather one segment per signal: birth to death (or to the top of the
    // viewport when it never dies).
    Rat top = style.t1;
    if (auto limit = d.valid_until(); limit && *limit < top) top = *limit;

    std::vector<Segment> segs;
    std::vector<std::pair<Rat, Rat>> dots;
    Replayer rp(d);
    {
        // Walk the events manually to record deaths.
        struct Live {
            std::string name;
            Rat bx, bt;
        };
        std::vector<Live> live;
        for (const auto& e : d.initial.entries()) {
            if (e.value.is_signal())
                live.push_back({e.value.signal_name(), e.pos, Rat(0)});
            else
                for (const auto& n : e.value.rule().outgoing) live.push_back({n, e.pos, Rat(0)});
        }
        for (const auto& e : d.events) {
            if (top < e.time) break;
            dots.push_back({e.pos, e.time});
            for (const auto& n : e.incoming) {
                for (size_t i = 0; i < live.size(); ++i) {
                    if (live[i].name != n) continue;
                    Rat pos = live[i].bx + (e.time - live[i].bt) * d.machine->speed_of(n);
                    if (pos == e.pos) {
                        segs.push_back({live[i].bx, live[i].bt, e.pos, e.time, n});
                        live.erase(live.begin() + static_cast<long>(i));
                        break;
                    }
                }
            }
            for (const auto& n : e.outgoing) live.push_back({n, e.pos, e.time});
        }
        for (const auto& s : live) {
            Rat x_end = s.bx + (top - s.bt) * d.machine->speed_of(s.name);
            segs.push_back({s.bx, s.bt, x_end, top, s.name});
        }
    }

    auto px = [&](const Rat& x) { return (x - style.x0).to_double() * style.scale; };
    auto py = [&](const Rat& t) { return (style.t1 - t).to_double() * style.scale; };
    double width = (style.x1 - style.x0).to_double() * style.scale;
    double height = (style.t1 - style.t0).to_double() * style.scale;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
       << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    size_t drawn = 0;
    for (const auto& s : segs) {
        // Skip segments fully outside the viewport (coarse test).
        if ((s.x0 < style.x0 && s.x1 < style.x0) || (style.x1 < s.x0 && style.x1 < s.x1)) continue;
        if (s.t1 < style.t0 || style.t1 < s.t0) continue;
        os << "<line x1=\"" << fmt(px(s.x0)) << "\" y1=\"" << fmt(py(s.t0)) << "\" x2=\""
           << fmt(px(s.x1)) << "\" y2=\"" << fmt(py(s.t1)) << "\" stroke=\"" << color_of(s.name)
           << "\" stroke-width=\"1\"/>\n";
        if (style.labels)
            os << "<text x=\"" << fmt(px(s.x0) + 2) << "\" y=\"" << fmt(py(s.t0) - 2)
               << "\" font-size=\"8\">" << s.name << "</text>\n";
        ++drawn;
    }
    if (style.event_dots)
        for (const auto& [x, t] : dots) {
            if (x < style.x0 || style.x1 < x || t < style.t0 || style.t1 < t) continue;
            os << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(t))
               << "\" r=\"1.5\" fill=\"black\"/>\n";
        }
    if (drawn == 0) os << "<!-- warning: empty intersection with the viewport -->\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace sm
