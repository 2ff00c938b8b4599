#pragma once

#include "sm/machine.hpp"
#include "sm/rulesynth.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace sm {

/// One resolved collision: at `time`, at `pos`, the signals of `incoming`
/// were replaced by `outgoing` (both sorted by name).
struct CollisionEvent {
    Rat time;
    Rat pos;
    std::vector<std::string> incoming;
    std::vector<std::string> outgoing;
};

enum class Termination { Quiescent, HorizonReached, AccumulationSuspected, EventCapReached };

inline const char* termination_name(Termination t) {
    switch (t) {
        case Termination::Quiescent: return "quiescent";
        case Termination::HorizonReached: return "horizon";
        case Termination::AccumulationSuspected: return "accumulation-suspected";
        case Termination::EventCapReached: return "event-cap";
    }
    return "?";
}

/// Initial configuration plus the time-ordered collision log. Configurations
/// at any valid time reconstruct exactly from these.
struct SpaceTimeDiagram {
    std::shared_ptr<const SignalMachine> machine;
    Configuration initial;
    std::vector<CollisionEvent> events;
    std::optional<Rat> horizon;  // absent = unbounded
    Termination termination = Termination::Quiescent;

    /// Largest time at which config_at is defined; absent = unbounded.
    std::optional<Rat> valid_until() const {
        switch (termination) {
            case Termination::Quiescent: return std::nullopt;
            case Termination::HorizonReached: return horizon;
            default:
                return events.empty() ? std::optional<Rat>(Rat(0)) : std::optional<Rat>(events.back().time);
        }
    }
};

struct RunLimits {
    std::optional<Rat> horizon;
    size_t event_cap = 1024;
    std::optional<Rat> min_dt_guard;  // secondary accumulation trigger, off by default
};

/// mu ⊲ v: v is the signal mu itself, or a collision emitting mu.
bool issued_from(const SignalMachine& m, const std::string& mu, const ExtendedValue& v);

struct CollisionSite {
    Rat pos;
    std::vector<std::string> incoming;  // sorted
};

struct NextCollision {
    std::optional<Rat> dt;            // absent = +infinity (no collision ever)
    std::vector<CollisionSite> sites;  // all simultaneous earliest sites, by position
};

/// Minimum positive d at which two issued signals coincide, with every site
/// reaching that minimum. All-pairs exact search.
NextCollision time_to_next_collision(const SignalMachine& m, const Configuration& c);

/// Uniform motion for 0 < dt < time to next collision. Collision values are
/// consumed: their outgoing signals depart. The result holds signals only.
Configuration advance(const SignalMachine& m, const Configuration& c, const Rat& dt);

/// Configuration at t + Δ(c): collision values placed first at every site
/// (rule resolved through `synth`), surviving signals placed elsewhere.
/// `time` is the absolute time of `c`, used only to stamp the returned events.
std::pair<Configuration, std::vector<CollisionEvent>> step(const SignalMachine& m,
                                                           const RuleSynth& synth,
                                                           const Configuration& c,
                                                           const Rat& time);

/// Same, with the next-collision search already done.
std::pair<Configuration, std::vector<CollisionEvent>> step(const SignalMachine& m,
                                                           const RuleSynth& synth,
                                                           const Configuration& c,
                                                           const Rat& time,
                                                           const NextCollision& next);

SpaceTimeDiagram run(std::shared_ptr<const SignalMachine> machine, Configuration initial,
                     const RunLimits& limits = {});

/// Exact reconstruction at 0 <= t <= valid_until by replaying the event log.
Configuration config_at(const SpaceTimeDiagram& d, const Rat& t);

/// Event-log replayer with provenance: which event (or the initial
/// configuration) gave birth to each live signal. Used for reconstruction,
/// rendering and phase analysis.
class Replayer {
  public:
    static constexpr size_t kInitial = static_cast<size_t>(-1);

    struct LiveSignal {
        std::string name;
        Rat birth_pos;
        Rat birth_time;
        size_t birth_event;  // kInitial for signals of the initial configuration
    };

    explicit Replayer(const SpaceTimeDiagram& d);

    /// Applies events with time <= t (all of them if t is absent).
    void advance_to(std::optional<Rat> t);

    /// Signals alive after the events applied so far.
    const std::vector<LiveSignal>& live() const { return live_; }

    /// Index of the next unapplied event.
    size_t cursor() const { return cursor_; }

    /// For each applied event, the birth event of every incoming signal.
    const std::vector<std::vector<size_t>>& incoming_birth_events() const {
        return incoming_births_;
    }

    /// Configuration at time t; requires advance_to(t) (exactly) first.
    Configuration configuration_at(const Rat& t) const;

  private:
    const SpaceTimeDiagram& diagram_;
    std::vector<LiveSignal> live_;
    std::vector<std::vector<size_t>> incoming_births_;
    size_t cursor_ = 0;
};

}  // namespace sm
