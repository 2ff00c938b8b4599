#include "sm/engine.hpp"

#include <algorithm>
#include <map>

namespace sm {

bool issued_from(const SignalMachine& m, const std::string& mu, const ExtendedValue& v) {
    if (!m.has_signal(mu))
        throw Error(ErrorKind::UndeclaredSignal, "meta-signal '" + mu + "' not declared");
    if (v.is_signal()) return v.signal_name() == mu;
    if (v.is_collision()) {
        const auto& out = v.rule().outgoing;
        return std::binary_search(out.begin(), out.end(), mu);
    }
    return false;
}

namespace {

struct Issued {
    Rat pos;
    const std::string* name;
    Rat speed;
};

std::vector<Issued> issued_signals(const SignalMachine& m, const Configuration& c) {
    std::vector<Issued> out;
    for (const auto& e : c.entries()) {
        if (e.value.is_signal()) {
            const std::string& n = e.value.signal_name();
            out.push_back({e.pos, &n, m.speed_of(n)});
        } else if (e.value.is_collision()) {
            for (const auto& n : e.value.rule().outgoing)
                out.push_back({e.pos, &n, m.speed_of(n)});
        }
    }
    return out;
}

}  // namespace

NextCollision time_to_next_collision(const SignalMachine& m, const Configuration& c) {
    std::vector<Issued> sig = issued_signals(m, c);
    std::optional<Rat> best;
    for (size_t a = 0; a < sig.size(); ++a) {
        for (size_t b = a + 1; b < sig.size(); ++b) {
            if (sig[a].speed == sig[b].speed) continue;
            // x_a + d*s_a = x_b + d*s_b
            Rat d = (sig[b].pos - sig[a].pos) / (sig[a].speed - sig[b].speed);
            if (d.sign() <= 0) continue;
            if (!best || d < *best) best = d;
        }
    }
    NextCollision result;
    if (!best) return result;
    result.dt = *best;

    // Gather every signal sitting on some coincidence point at d.
    std::map<Rat, std::vector<std::string>> sites;
    for (size_t a = 0; a < sig.size(); ++a) {
        for (size_t b = a + 1; b < sig.size(); ++b) {
            if (sig[a].speed == sig[b].speed) continue;
            Rat d = (sig[b].pos - sig[a].pos) / (sig[a].speed - sig[b].speed);
            if (!(d == *best)) continue;
            Rat p = sig[a].pos + d * sig[a].speed;
            auto& names = sites[p];
            names.push_back(*sig[a].name);
            names.push_back(*sig[b].name);
        }
    }
    for (auto& [pos, names] : sites)
        result.sites.push_back({pos, CollisionRule::canon(std::move(names))});
    return result;
}

Configuration advance(const SignalMachine& m, const Configuration& c, const Rat& dt) {
    if (dt.sign() <= 0) throw Error(ErrorKind::StepTooLarge, "dt must be positive");
    NextCollision next = time_to_next_collision(m, c);
    if (next.dt && !(dt < *next.dt))
        throw Error(ErrorKind::StepTooLarge,
                    "dt " + dt.str() + " reaches the next collision at " + next.dt->str());
    Configuration out;
    for (const auto& s : issued_signals(m, c))
        out.put(s.pos + dt * s.speed, ExtendedValue::signal(*s.name));
    return out;
}

std::pair<Configuration, std::vector<CollisionEvent>> step(const SignalMachine& m,
                                                           const RuleSynth& synth,
                                                           const Configuration& c,
                                                           const Rat& time) {
    return step(m, synth, c, time, time_to_next_collision(m, c));
}

std::pair<Configuration, std::vector<CollisionEvent>> step(const SignalMachine& m,
                                                           const RuleSynth& synth,
                                                           const Configuration& c,
                                                           const Rat& time,
                                                           const NextCollision& next) {
    if (!next.dt)
        throw Error(ErrorKind::StepTooLarge, "no collision ahead; step undefined");
    const Rat& d = *next.dt;

    Configuration out;
    std::vector<CollisionEvent> events;
    for (const auto& site : next.sites) {
        const RuleLookupResult& res = synth.lookup(site.incoming);
        if (!res.defined())
            throw Error(ErrorKind::UndefinedCollision,
                        "no rule for {" + SignalMachine::join(site.incoming) + "} at x=" +
                            site.pos.str() + ", t=" + (time + d).str());
        out.put(site.pos, ExtendedValue::collision(*res.rule));
        events.push_back({time + d, site.pos, res.rule->incoming, res.rule->outgoing});
    }
    // Surviving signals: issued signals not landing on a collision site.
    for (const auto& s : issued_signals(m, c)) {
        Rat p = s.pos + d * s.speed;
        bool consumed = false;
        for (const auto& site : next.sites)
            if (site.pos == p) {
                consumed = true;
                break;
            }
        if (!consumed) out.put(p, ExtendedValue::signal(*s.name));
    }
    std::sort(events.begin(), events.end(),
              [](const CollisionEvent& a, const CollisionEvent& b) { return a.pos < b.pos; });
    return {std::move(out), std::move(events)};
}

namespace {

/// Accumulation suspicion per the configured heuristic: among the last 64
/// inter-event gaps at least 60 strictly decrease, and the spatial window of
/// the later events is narrower than the earlier ones'.
bool looks_like_accumulation(const std::vector<CollisionEvent>& events) {
    constexpr size_t kGaps = 64;
    if (events.size() < kGaps + 1) return false;
    size_t first = events.size() - (kGaps + 1);
    size_t decreasing = 0;
    for (size_t i = first; i + 2 < events.size(); ++i) {
        Rat g0 = events[i + 1].time - events[i].time;
        Rat g1 = events[i + 2].time - events[i + 1].time;
        if (g1 < g0) ++decreasing;
    }
    if (decreasing < 60) return false;

    auto window = [&](size_t lo, size_t hi) {  // [lo, hi)
        Rat mn = events[lo].pos, mx = events[lo].pos;
        for (size_t i = lo + 1; i < hi; ++i) {
            if (events[i].pos < mn) mn = events[i].pos;
            if (events[i].pos > mx) mx = events[i].pos;
        }
        return mx - mn;
    };
    size_t mid = events.size() - 32;
    Rat early = window(events.size() - 64, mid);
    Rat late = window(mid, events.size());
    return late < early;
}

}  // namespace

SpaceTimeDiagram run(std::shared_ptr<const SignalMachine> machine, Configuration initial,
                     const RunLimits& limits) {
    initial.validate_for(*machine);
    SpaceTimeDiagram d;
    d.machine = machine;
    d.initial = std::move(initial);
    d.horizon = limits.horizon;

    RuleSynth synth(*machine);
    Configuration current = d.initial;
    Rat t(0);
    size_t consecutive_small = 0;

    for (;;) {
        NextCollision next = time_to_next_collision(*machine, current);
        if (!next.dt) {
            d.termination = Termination::Quiescent;
            return d;
        }
        if (limits.horizon && *limits.horizon < t + *next.dt) {
            d.termination = Termination::HorizonReached;
            return d;
        }
        if (d.events.size() + next.sites.size() > limits.event_cap) {
            d.termination = looks_like_accumulation(d.events)
                                ? Termination::AccumulationSuspected
                                : Termination::EventCapReached;
            return d;
        }
        if (limits.min_dt_guard) {
            if (*next.dt < *limits.min_dt_guard)
                ++consecutive_small;
            else
                consecutive_small = 0;
            if (consecutive_small >= 64) {
                d.termination = Termination::AccumulationSuspected;
                return d;
            }
        }
        auto [cfg, events] = step(*machine, synth, current, t, next);
        t = t + *next.dt;
        current = std::move(cfg);
        for (auto& e : events) d.events.push_back(std::move(e));
    }
}

Replayer::Replayer(const SpaceTimeDiagram& d) : diagram_(d) {
    for (const auto& e : d.initial.entries()) {
        if (e.value.is_signal()) {
            live_.push_back({e.value.signal_name(), e.pos, Rat(0), kInitial});
        } else if (e.value.is_collision()) {
            for (const auto& n : e.value.rule().outgoing)
                live_.push_back({n, e.pos, Rat(0), kInitial});
        }
    }
}

void Replayer::advance_to(std::optional<Rat> t) {
    const auto& events = diagram_.events;
    while (cursor_ < events.size() && (!t || !(*t < events[cursor_].time))) {
        const CollisionEvent& e = events[cursor_];
        std::vector<size_t> births;
        // Remove the incoming signals passing through (e.pos, e.time).
        for (const auto& name : e.incoming) {
            bool found = false;
            for (size_t i = 0; i < live_.size(); ++i) {
                const LiveSignal& s = live_[i];
                if (s.name != name) continue;
                Rat pos = s.birth_pos + (e.time - s.birth_time) * diagram_.machine->speed_of(s.name);
                if (pos == e.pos) {
                    births.push_back(s.birth_event);
                    live_.erase(live_.begin() + static_cast<long>(i));
                    found = true;
                    break;
                }
            }
            if (!found)
                throw Error(ErrorKind::OutOfRange,
                            "replay lost signal '" + name + "' for event at t=" + e.time.str());
        }
        for (const auto& name : e.outgoing)
            live_.push_back({name, e.pos, e.time, cursor_});
        incoming_births_.push_back(std::move(births));
        ++cursor_;
    }
}

Configuration Replayer::configuration_at(const Rat& t) const {
    Configuration out;
    // Pending collision values: events at exactly t.
    size_t i = cursor_;
    while (i > 0 && diagram_.events[i - 1].time == t) --i;
    std::vector<Rat> collision_positions;
    for (; i < cursor_; ++i) {
        const CollisionEvent& e = diagram_.events[i];
        out.put(e.pos, ExtendedValue::collision(CollisionRule{e.incoming, e.outgoing}));
        collision_positions.push_back(e.pos);
    }
    if (t.is_zero()) {
        for (const auto& entry : diagram_.initial.entries())
            if (entry.value.is_collision()) {
                out.put(entry.pos, entry.value);
                collision_positions.push_back(entry.pos);
            }
    }
    for (const auto& s : live_) {
        if (s.birth_time == t && s.birth_event != kInitial) continue;  // just consumed into birth
        if (t.is_zero() && s.birth_event == kInitial &&
            diagram_.initial.at(s.birth_pos).is_collision())
            continue;  // the collision value itself occupies t = 0
        Rat pos = s.birth_pos + (t - s.birth_time) * diagram_.machine->speed_of(s.name);
        bool at_collision = false;
        for (const auto& cp : collision_positions)
            if (cp == pos) {
                at_collision = true;
                break;
            }
        if (!at_collision) out.put(pos, ExtendedValue::signal(s.name));
    }
    return out;
}

Configuration config_at(const SpaceTimeDiagram& d, const Rat& t) {
    if (t.is_negative()) throw Error(ErrorKind::OutOfRange, "negative time " + t.str());
    if (auto limit = d.valid_until(); limit && *limit < t)
        throw Error(ErrorKind::OutOfRange,
                    "time " + t.str() + " beyond diagram validity " + limit->str());
    Replayer r(d);
    r.advance_to(t);
    return r.configuration_at(t);
}

}  // namespace sm
