// Acceptance suite: the exact simulation properties the toolkit must deliver,
// checked end to end at desk scale. One pass/fail line is printed per
// criterion.

#include "sm/codec.hpp"
#include "sm/engine.hpp"
#include "sm/universal.hpp"
#include "sm/verify.hpp"

#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <memory>

using namespace sm;

namespace {

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report_line(int criterion, const char* name, bool pass, double seconds) {
    std::printf("criterion %d (%s): %s  [%.2fs]\n", criterion, name, pass ? "PASS" : "FAIL",
                seconds);
    std::fflush(stdout);
}

std::shared_ptr<SignalMachine> machine_of(std::vector<MetaSignal> signals,
                                          std::vector<CollisionRule> rules, const char* name) {
    auto m = std::make_shared<SignalMachine>();
    m->name = name;
    m->signals = std::move(signals);
    for (auto& r : rules)
        m->rules.push_back({CollisionRule::canon(r.incoming), CollisionRule::canon(r.outgoing)});
    m->rebuild_index();
    m->validate();
    return m;
}

struct UniversalSetup {
    std::shared_ptr<const SignalMachine> simulated;
    std::shared_ptr<UniversalMachine> universal;
    std::shared_ptr<Codec> codec;
    std::unique_ptr<UniversalTranslation> translation;
};

UniversalSetup setup_universal(std::shared_ptr<const SignalMachine> simulated,
                               std::vector<Rat> speeds) {
    UniversalSetup s;
    s.simulated = simulated;
    s.universal = std::make_shared<UniversalMachine>(generate_universal(SpeedSet(std::move(speeds))));
    s.codec = std::make_shared<Codec>(s.simulated, s.universal);
    s.translation = std::make_unique<UniversalTranslation>(s.codec);
    return s;
}

std::vector<Rat> seeded_fractions(uint64_t seed, size_t count, const Rat& max) {
    TestGen gen(seed);
    std::vector<Rat> out;
    for (size_t i = 0; i < count; ++i) out.push_back(Rat(gen.pick(0, 997), 997) * max);
    return out;
}

// Shared scenario reports, reused by the phase-budget criterion.
EquivalenceReport g_report3, g_report4, g_report5;
bool g_have3 = false, g_have4 = false, g_have5 = false;

EquivalenceReport run_two_collision_scenario(size_t random_samples) {
    auto a = machine_of({{"a", Rat(1)}, {"b", Rat(-1)}, {"c", Rat(0)}, {"d", Rat(-1)},
                         {"e", Rat(1)}},
                        {{{"a", "b"}, {"c"}}, {{"c", "d"}, {"e"}}}, "two_collisions");
    Configuration c;
    c.put(Rat(0), ExtendedValue::signal("a"));
    c.put(Rat(4), ExtendedValue::signal("b"));
    c.put(Rat(8), ExtendedValue::signal("d"));
    UniversalSetup s = setup_universal(a, {Rat(-1), Rat(0), Rat(1)});
    CheckOptions options;
    options.tags = s.universal.get();
    options.extra_samples = seeded_fractions(3, random_samples, Rat(7));
    return check_simulation(s.simulated, c, s.universal->machine, *s.translation, options);
}

EquivalenceReport run_three_signal_scenario(const Rat& scale) {
    auto a = machine_of({{"f", Rat(1)}, {"g", Rat(0)}, {"h", Rat(-1)}, {"p", Rat(-1)},
                         {"q", Rat(1)}},
                        {{{"f", "g", "h"}, {"p", "q"}}}, "three_meet");
    Configuration c;
    c.put(Rat(-2) * scale, ExtendedValue::signal("f"));
    c.put(Rat(0), ExtendedValue::signal("g"));
    c.put(Rat(2) * scale, ExtendedValue::signal("h"));
    UniversalSetup s = setup_universal(a, {Rat(-1), Rat(0), Rat(1)});
    CheckOptions options;
    options.tags = s.universal.get();
    options.extra_samples = seeded_fractions(4, 24, Rat(3) * scale);
    return check_simulation(s.simulated, c, s.universal->machine, *s.translation, options);
}

EquivalenceReport run_abort_retry_scenario() {
    auto a = machine_of({{"tail", Rat(1)}, {"mid", Rat(0)}, {"oncoming", Rat(-1)},
                         {"outp", Rat(1)}},
                        {{{"mid", "oncoming"}, {"outp"}}}, "nonparticipant");
    Configuration c;
    c.put(Rat(-5, 2), ExtendedValue::signal("tail"));
    c.put(Rat(0), ExtendedValue::signal("mid"));
    c.put(Rat(2), ExtendedValue::signal("oncoming"));
    UniversalSetup s = setup_universal(a, {Rat(-1), Rat(0), Rat(1)});
    CheckOptions options;
    options.extra_samples = seeded_fractions(5, 50, Rat(3));
    return abort_retry_probe(s.simulated, c, *s.universal, *s.translation, options).equivalence;
}

}  // namespace

TEST_CASE("criterion 1: self-simulation on random machines") {
    Stopwatch sw;
    TestGen gen(1);
    IdentityTranslation identity;
    bool pass = true;
    for (int iter = 0; iter < 50; ++iter) {
        auto m = gen.machine(3, 4, 3);
        Configuration c = gen.configuration(*m, 5, false);
        CheckOptions options;
        options.horizon = Rat(60);
        options.event_cap = 400;
        EquivalenceReport r = check_simulation(m, c, m, identity, options);
        if (!r.ok()) pass = false;
    }
    double t = sw.seconds();
    pass = pass && t < 5.0;
    report_line(1, "self-simulation", pass, t);
    CHECK(pass);
}

TEST_CASE("criterion 2: the worked two-machine example") {
    Stopwatch sw;
    auto a = machine_of({{"mu_a", Rat(-1)}, {"mu_b", Rat(1)}}, {{{"mu_a", "mu_b"}, {"mu_b"}}},
                        "A");
    auto b = machine_of({{"mu_1", Rat(-1)}, {"mu_2", Rat(1)}, {"mu_3", Rat(1)}},
                        {{{"mu_1", "mu_2"}, {"mu_3"}}, {{"mu_1", "mu_3"}, {"mu_2"}}}, "Aprime");
    MapTranslation tr;
    tr.signal_repr = {{"mu_a", "mu_1"}, {"mu_b", "mu_2"}};
    tr.rule_repr[{"mu_a", "mu_b"}] = CollisionRule{{"mu_1", "mu_2"}, {"mu_3"}};
    tr.signal_decode = {{"mu_1", "mu_a"}, {"mu_2", "mu_b"}, {"mu_3", "mu_b"}};
    tr.rule_decode[{"mu_1", "mu_2"}] = CollisionRule{{"mu_a", "mu_b"}, {"mu_b"}};
    tr.rule_decode[{"mu_1", "mu_3"}] = CollisionRule{{"mu_a", "mu_b"}, {"mu_b"}};

    bool pass = true;
    // Chained collisions keep alternating the simulator's two rules.
    Configuration c;
    c.put(Rat(0), ExtendedValue::signal("mu_b"));
    c.put(Rat(1), ExtendedValue::signal("mu_a"));
    c.put(Rat(3), ExtendedValue::signal("mu_a"));
    c.put(Rat(7), ExtendedValue::signal("mu_a"));
    CheckOptions options;
    options.extra_samples = seeded_fractions(2, 20, Rat(5));
    EquivalenceReport r = check_simulation(a, c, b, tr, options);
    pass = pass && r.ok();

    double t = sw.seconds();
    pass = pass && t < 1.0;
    report_line(2, "worked example pair", pass, t);
    CHECK(pass);
}

TEST_CASE("criterion 3: two-collision run under the generated simulator") {
    Stopwatch sw;
    g_report3 = run_two_collision_scenario(100);
    g_have3 = true;
    bool pass = g_report3.ok() && g_report3.macro_collisions.size() >= 2;
    double t = sw.seconds();
    pass = pass && t < 60.0;
    report_line(3, "universal two-collision simulation", pass, t);
    if (!pass && g_report3.mismatch)
        std::printf("  mismatch at t=%s x=%s: expected %s, got %s\n",
                    g_report3.mismatch->time.str().c_str(),
                    g_report3.mismatch->pos ? g_report3.mismatch->pos->str().c_str() : "?",
                    g_report3.mismatch->expected.c_str(), g_report3.mismatch->got.c_str());
    CHECK(pass);
}

TEST_CASE("criterion 4: exact three-signal collision with whole preparation") {
    Stopwatch sw;
    g_report4 = run_three_signal_scenario(Rat(1));
    g_have4 = true;
    bool pass = g_report4.ok();
    // The triple meeting resolves through a full prepared macro-collision.
    pass = pass && g_report4.macro_collisions.size() == 1;
    if (pass) {
        const auto& mc = g_report4.macro_collisions[0];
        pass = mc.leftmost_dir == 3 && mc.rightmost_dir == 1 && mc.outputs_clean.has_value();
    }
    double t = sw.seconds();
    pass = pass && t < 30.0;
    report_line(4, "exact 3-signal collision", pass, t);
    if (!pass && g_report4.mismatch)
        std::printf("  mismatch at t=%s x=%s: expected %s, got %s\n",
                    g_report4.mismatch->time.str().c_str(),
                    g_report4.mismatch->pos ? g_report4.mismatch->pos->str().c_str() : "?",
                    g_report4.mismatch->expected.c_str(), g_report4.mismatch->got.c_str());
    CHECK(pass);
}

TEST_CASE("criterion 5: abort and retry around a non-participating macro-signal") {
    Stopwatch sw;
    g_report5 = run_abort_retry_scenario();
    g_have5 = true;
    bool pass = g_report5.ok();
    pass = pass && g_report5.main_test_fails >= 1;
    pass = pass && g_report5.widths_strictly_decrease;
    pass = pass && g_report5.macro_collisions.size() >= 1;
    double t = sw.seconds();
    pass = pass && t < 60.0;
    report_line(5, "abort-and-retry", pass, t);
    if (!pass) {
        std::printf("  fails=%zu main_test_fails=%zu widths_ok=%d collisions=%zu\n",
                    g_report5.test_failures, g_report5.main_test_fails,
                    g_report5.widths_strictly_decrease ? 1 : 0,
                    g_report5.macro_collisions.size());
        if (g_report5.mismatch)
            std::printf("  mismatch at t=%s x=%s: expected %s, got %s\n",
                        g_report5.mismatch->time.str().c_str(),
                        g_report5.mismatch->pos ? g_report5.mismatch->pos->str().c_str() : "?",
                        g_report5.mismatch->expected.c_str(), g_report5.mismatch->got.c_str());
    }
    CHECK(pass);
}

TEST_CASE("criterion 6: phase budget for every resolved macro-collision") {
    Stopwatch sw;
    if (!g_have3) g_report3 = run_two_collision_scenario(10);
    if (!g_have4) g_report4 = run_three_signal_scenario(Rat(1));
    if (!g_have5) g_report5 = run_abort_retry_scenario();
    bool pass = true;
    size_t checked = 0;
    for (const EquivalenceReport* r : {&g_report3, &g_report4, &g_report5}) {
        for (const auto& mc : r->macro_collisions) {
            ++checked;
            if (!mc.shrink_within_budget() || !mc.test_within_budget() ||
                !mc.resolution_within_budget()) {
                pass = false;
                std::printf("  budget violation: meet=%s shrink=%s test=%s check_ok=%s coll=%s\n",
                            mc.border_meet.str().c_str(), mc.shrink_end.str().c_str(),
                            mc.test_end.str().c_str(), mc.check_ok.str().c_str(),
                            mc.collision.str().c_str());
            }
        }
    }
    pass = pass && checked >= 4;

    // Output delay scales linearly with the initial widths: the same scene at
    // ten times the size has exactly ten times the delay.
    EquivalenceReport wide = run_three_signal_scenario(Rat(10));
    if (wide.macro_collisions.size() == 1 && g_report4.macro_collisions.size() == 1) {
        auto d1 = g_report4.macro_collisions[0].output_delay();
        auto d10 = wide.macro_collisions[0].output_delay();
        pass = pass && d1 && d10 && (*d10 == Rat(10) * *d1);
    } else {
        pass = false;
    }
    report_line(6, "phase budget", pass, sw.seconds());
    CHECK(pass);
}

TEST_CASE("criterion 7: oracle suites") {
    Stopwatch sw;
    bool pass = true;

    // Next-collision search against the independent all-pairs oracle.
    {
        TestGen gen(7001);
        int live = 0;
        for (int iter = 0; iter < 1000; ++iter) {
            auto m = gen.machine(4, 12, 3);
            Configuration c = gen.configuration(*m, 12, true);
            NextCollision a = time_to_next_collision(*m, c);
            NextCollision b = brute_next_collision(*m, c);
            if (a.dt.has_value() != b.dt.has_value()) pass = false;
            if (a.dt && b.dt) {
                ++live;
                if (!(*a.dt == *b.dt) || a.sites.size() != b.sites.size()) pass = false;
                for (size_t s = 0; pass && s < a.sites.size(); ++s)
                    if (!(a.sites[s].pos == b.sites[s].pos) ||
                        a.sites[s].incoming != b.sites[s].incoming)
                        pass = false;
            }
        }
        pass = pass && live > 100;
    }

    // Decode(represent) is the identity on random machine/configuration pairs,
    // and the decoder stays within its locality budget.
    {
        TestGen gen(7002);
        int done = 0;
        while (done < 200 && pass) {
            auto m = gen.machine(3, 4, 3);
            std::set<Rat> speed_set;
            for (const auto& s : m->signals) speed_set.insert(s.speed);
            if (speed_set.size() == 1 && speed_set.begin()->is_zero()) continue;
            auto u = std::make_shared<UniversalMachine>(generate_universal(
                SpeedSet(std::vector<Rat>(speed_set.begin(), speed_set.end()))));
            Codec codec(m, u);
            Configuration c = gen.configuration(*m, 5, true);
            Configuration repr = codec.repr_config(c);
            Configuration back;
            for (const auto& e : repr.entries()) {
                ExtendedValue v = codec.decode_at(repr, e.pos);
                if (!v.is_void()) back.put(e.pos, std::move(v));
                if (codec.last_window_left() > codec.locality_bound() ||
                    codec.last_window_right() > codec.locality_bound())
                    pass = false;
            }
            if (!(back == c)) pass = false;
            ++done;
        }
    }

    report_line(7, "oracle suites", pass, sw.seconds());
    CHECK(pass);
}

TEST_CASE("criterion 8: accumulation guard") {
    Stopwatch sw;
    // A bouncer between converging walls produces geometrically shrinking
    // collision gaps toward an accumulation point; the engine must stop with
    // the accumulation tag under default caps.
    auto a = machine_of({{"wall_l", Rat(0)}, {"wall_r", Rat(-1)}, {"dart", Rat(2)},
                         {"dart_back", Rat(-3)}},
                        {{{"dart", "wall_r"}, {"wall_r", "dart_back"}},
                         {{"wall_l", "dart_back"}, {"wall_l", "dart"}}},
                        "cascade");
    Configuration c;
    c.put(Rat(0), ExtendedValue::signal("wall_l"));
    c.put(Rat(1, 10), ExtendedValue::signal("dart"));
    c.put(Rat(1), ExtendedValue::signal("wall_r"));

    SpaceTimeDiagram d = run(a, c);  // default caps
    bool pass = d.termination == Termination::AccumulationSuspected;

    // Before the detected cutoff the simulation relation holds exactly.
    if (pass) {
        UniversalSetup s = setup_universal(a, {Rat(-3), Rat(-1), Rat(0), Rat(2)});
        CheckOptions options;
        options.tags = s.universal.get();
        options.horizon = d.events.at(1).time + (d.events.at(2).time - d.events.at(1).time) / Rat(2);
        options.extra_samples = seeded_fractions(8, 6, *options.horizon);
        EquivalenceReport r =
            check_simulation(s.simulated, c, s.universal->machine, *s.translation, options);
        pass = pass && r.ok();
        if (!r.ok() && r.mismatch)
            std::printf("  mismatch at t=%s x=%s: expected %s, got %s\n",
                        r.mismatch->time.str().c_str(),
                        r.mismatch->pos ? r.mismatch->pos->str().c_str() : "?",
                        r.mismatch->expected.c_str(), r.mismatch->got.c_str());
    }
    report_line(8, "accumulation guard", pass, sw.seconds());
    CHECK(pass);
}
