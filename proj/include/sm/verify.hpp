#pragma once

#include "sm/codec.hpp"
#include "sm/engine.hpp"
#include "sm/universal.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sm {

/// A representation/decoding pair between a simulated machine and a
/// simulator. Everything is exact; there are no tolerances anywhere.
class Translation {
  public:
    virtual ~Translation() = default;
    virtual Configuration represent(const Configuration& c) const = 0;
    virtual Configuration decode(const Configuration& u) const = 0;
};

/// The self-simulation pair: every machine simulates itself through it.
class IdentityTranslation : public Translation {
  public:
    Configuration represent(const Configuration& c) const override { return c; }
    Configuration decode(const Configuration& u) const override { return u; }
};

/// Finite renaming of signals and rules, with point representations.
class MapTranslation : public Translation {
  public:
    std::map<std::string, std::string> signal_repr;                    // simulated -> simulator
    std::map<std::vector<std::string>, CollisionRule> rule_repr;       // by incoming set
    std::map<std::string, std::string> signal_decode;                  // simulator -> simulated
    std::map<std::vector<std::string>, CollisionRule> rule_decode;

    Configuration represent(const Configuration& c) const override;
    Configuration decode(const Configuration& u) const override;
};

/// The macro-signal representation and the window decoder of a Codec.
class UniversalTranslation : public Translation {
  public:
    explicit UniversalTranslation(std::shared_ptr<const Codec> codec) : codec_(std::move(codec)) {}
    Configuration represent(const Configuration& c) const override {
        return codec_->repr_config(c);
    }
    Configuration decode(const Configuration& u) const override {
        return codec_->decode_config(u);
    }
    const Codec& codec() const { return *codec_; }

  private:
    std::shared_ptr<const Codec> codec_;
};

/// Timing of one resolved macro-collision in the simulator diagram, all times
/// absolute. The budget fractions are taken over meet -> collision.
struct MacroCollisionMetrics {
    Rat border_meet;      // detection that started the successful chain
    Rat shrink_end;       // probes launched from the marked main
    Rat test_end;         // both side tests returned clean
    Rat check_ok;         // participant check passed, resolution starts
    Rat collision;        // the simulated collision instant
    std::optional<Rat> outputs_clean;  // both dispatch signals died
    int leftmost_dir = 0;
    int rightmost_dir = 0;

    Rat span() const { return collision - border_meet; }
    bool shrink_within_budget() const {
        return (shrink_end - border_meet) * Rat(10) <= span();
    }
    bool test_within_budget() const { return (test_end - border_meet) * Rat(5) <= span(); }
    bool resolution_within_budget() const {
        return (collision - check_ok) * Rat(5) <= span() * Rat(4);
    }
    std::optional<Rat> output_delay() const {
        if (!outputs_clean) return std::nullopt;
        return *outputs_clean - collision;
    }
};

struct EquivalenceReport {
    std::string simulated_name;
    std::string simulator_name;
    std::vector<Rat> sample_times;

    struct Mismatch {
        Rat time;
        std::optional<Rat> pos;
        std::string expected;
        std::string got;
    };
    std::optional<Mismatch> mismatch;

    std::vector<MacroCollisionMetrics> macro_collisions;
    size_t test_failures = 0;      // aborted attempts observed (any phase)
    size_t main_test_fails = 0;    // attempts aborted by a side-test failure mark
    size_t detections = 0;
    bool widths_strictly_decrease = true;

    bool ok() const { return !mismatch.has_value(); }
    std::string to_json() const;
};

struct CheckOptions {
    std::vector<Rat> extra_samples;
    std::optional<Rat> horizon;     // simulated-diagram horizon
    size_t event_cap = 2000000;
    /// When set, the simulator diagram is analyzed for phase metrics.
    const UniversalMachine* tags = nullptr;
};

/// Runs both diagrams and checks the decoded simulator configuration against
/// the simulated one, exactly, at every event time of the simulated diagram,
/// at midpoints between consecutive events, and at the extra samples.
EquivalenceReport check_simulation(std::shared_ptr<const SignalMachine> simulated,
                                   const Configuration& c,
                                   std::shared_ptr<const SignalMachine> simulator,
                                   const Translation& tr, const CheckOptions& options = {});

/// Independent brute-force oracle for the next-collision search; used only by
/// tests.
NextCollision brute_next_collision(const SignalMachine& m, const Configuration& c);

/// Abort-and-retry probe for a configuration with a non-participating
/// macro-signal: runs the simulation check and reports whether at least one
/// side test failed, widths shrank strictly across retries, and the correct
/// macro-collision resolved with the decoded diagrams equal throughout. The
/// event cap doubles as a livelock guard: a run that keeps aborting without
/// resolving ends with an empty macro-collision list.
struct AbortRetryReport {
    EquivalenceReport equivalence;

    bool failed_test_observed() const { return equivalence.main_test_fails >= 1; }
    bool widths_shrink() const { return equivalence.widths_strictly_decrease; }
    bool resolved() const { return !equivalence.macro_collisions.empty(); }
    bool ok() const {
        return equivalence.ok() && failed_test_observed() && widths_shrink() && resolved();
    }
};

AbortRetryReport abort_retry_probe(std::shared_ptr<const SignalMachine> simulated,
                                   const Configuration& c_nonparticipant,
                                   const UniversalMachine& universal,
                                   const Translation& translation,
                                   const CheckOptions& options = {});

/// Pseudo-random rationals and machines for the seeded suites.
class TestGen {
  public:
    explicit TestGen(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    uint64_t next();
    long pick(long lo, long hi);  // inclusive
    Rat rational(long max_num = 100, long max_den = 100);
    std::shared_ptr<SignalMachine> machine(int max_speeds = 3, int max_signals = 4,
                                           int max_rules = 3);
    Configuration configuration(const SignalMachine& m, int max_entries = 5,
                                bool allow_rules = false);

  private:
    uint64_t state_;
};

}  // namespace sm
