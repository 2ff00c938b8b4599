#include "sm/rulesynth.hpp"

#include <doctest.h>

#include <algorithm>

using namespace sm;

namespace {

std::shared_ptr<SignalMachine> example_machine() {
    auto m = std::make_shared<SignalMachine>();
    m->name = "A";
    m->signals = {{"mu_a", Rat(-1)}, {"mu_b", Rat(1)}, {"z", Rat(0)}};
    m->rules = {{{"mu_a", "mu_b"}, {"mu_b"}}};
    m->rebuild_index();
    return m;
}

/// Literal transcription of the four implicit-rule conventions, written
/// independently of the production lookup.
std::optional<CollisionRule> bullets_direct(const SignalMachine& m,
                                            std::vector<std::string> s) {
    s = CollisionRule::canon(std::move(s));
    for (const auto& r : m.rules)
        if (r.incoming == s) return r;
    auto distinct_speeds = [&m](const std::vector<std::string>& names) {
        std::set<Rat> sp;
        for (const auto& n : names)
            if (!sp.insert(m.speed_of(n)).second) return false;
        return true;
    };
    if (s.size() == 2) return CollisionRule{s, s};

    std::vector<CollisionRule> strict_subs;
    for (const auto& r : m.rules) {
        if (r.incoming.size() >= s.size()) continue;
        if (std::includes(s.begin(), s.end(), r.incoming.begin(), r.incoming.end()))
            strict_subs.push_back(r);
    }
    if (strict_subs.size() == 1) {
        std::set<std::string> out(strict_subs[0].outgoing.begin(), strict_subs[0].outgoing.end());
        for (const auto& n : s)
            if (!std::binary_search(strict_subs[0].incoming.begin(),
                                    strict_subs[0].incoming.end(), n))
                out.insert(n);
        CollisionRule r{s, std::vector<std::string>(out.begin(), out.end())};
        if (!distinct_speeds(r.outgoing)) return std::nullopt;
        return r;
    }

    std::vector<CollisionRule> subs;
    for (const auto& r : m.rules)
        if (std::includes(s.begin(), s.end(), r.incoming.begin(), r.incoming.end()))
            subs.push_back(r);
    std::optional<std::set<std::string>> out_union;
    bool any = false, same = true;
    for (uint32_t mask = 1; mask < (1u << subs.size()); ++mask) {
        std::set<std::string> in_u, out_u;
        for (size_t b = 0; b < subs.size(); ++b)
            if (mask & (1u << b)) {
                in_u.insert(subs[b].incoming.begin(), subs[b].incoming.end());
                out_u.insert(subs[b].outgoing.begin(), subs[b].outgoing.end());
            }
        if (std::vector<std::string>(in_u.begin(), in_u.end()) != s) continue;
        any = true;
        if (!out_union)
            out_union = out_u;
        else if (*out_union != out_u)
            same = false;
    }
    if (any && same) {
        CollisionRule r{s, std::vector<std::string>(out_union->begin(), out_union->end())};
        if (!distinct_speeds(r.outgoing)) return std::nullopt;
        return r;
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("explicit rules win") {
    auto m = example_machine();
    RuleSynth synth(*m);
    const auto& res = synth.lookup({"mu_b", "mu_a"});
    CHECK(res.origin == RuleOrigin::Explicit);
    CHECK(res.rule->outgoing == std::vector<std::string>{"mu_b"});
}

TEST_CASE("unlisted pairs are blank") {
    auto m = example_machine();
    RuleSynth synth(*m);
    const auto& res = synth.lookup({"z", "mu_a"});
    CHECK(res.origin == RuleOrigin::Blank);
    CHECK(res.rule->outgoing == res.rule->incoming);
}

TEST_CASE("a unique strict sub-rule carries the extra signal through") {
    auto m = example_machine();
    RuleSynth synth(*m);
    const auto& res = synth.lookup({"mu_a", "mu_b", "z"});
    CHECK(res.origin == RuleOrigin::Superposed);
    CHECK(res.rule->outgoing == std::vector<std::string>{"mu_b", "z"});
}

TEST_CASE("superposition with a speed clash in the result is undefined") {
    auto m = std::make_shared<SignalMachine>();
    m->signals = {{"a", Rat(-1)}, {"b", Rat(1)}, {"c", Rat(0)}, {"d", Rat(0)}};
    m->rules = {{{"a", "b"}, {"c"}}};
    m->rebuild_index();
    RuleSynth synth(*m);
    // Carrying d through would put two speed-0 signals in the output.
    CHECK(synth.lookup({"a", "b", "d"}).origin == RuleOrigin::Undefined);
}

TEST_CASE("union-consistent covers resolve, inconsistent ones do not") {
    auto m = std::make_shared<SignalMachine>();
    m->signals = {{"a", Rat(-1)}, {"b", Rat(0)}, {"c", Rat(1)}, {"d", Rat(2)}};
    m->rules = {{{"a", "b"}, {"d"}}, {{"b", "c"}, {"d"}}, {{"a", "c"}, {"d"}}};
    m->rebuild_index();
    RuleSynth synth(*m);
    const auto& res = synth.lookup({"a", "b", "c"});
    CHECK(res.origin == RuleOrigin::UnionConsistent);
    CHECK(res.rule->outgoing == std::vector<std::string>{"d"});

    auto m2 = std::make_shared<SignalMachine>();
    m2->signals = {{"a", Rat(-1)}, {"b", Rat(0)}, {"c", Rat(1)}, {"d", Rat(2)}, {"e", Rat(3)}};
    m2->rules = {{{"a", "b"}, {"d"}}, {{"b", "c"}, {"e"}}, {{"a", "c"}, {"d", "e"}}};
    m2->rebuild_index();
    RuleSynth synth2(*m2);
    // {a,b}+{b,c} union to {d,e} but {a,b}+{b,c}+{a,c} also covers with the
    // same union; covers agree here, so it resolves.
    CHECK(synth2.lookup({"a", "b", "c"}).origin == RuleOrigin::UnionConsistent);

    // Covers that disagree: {a,b}+{b,c} unions to {d,e} while {a,b}+{a,c}
    // unions to {d}; no bullet applies.
    auto m3 = std::make_shared<SignalMachine>();
    m3->signals = {{"a", Rat(-1)}, {"b", Rat(0)}, {"c", Rat(1)}, {"d", Rat(2)}, {"e", Rat(3)}};
    m3->rules = {{{"a", "b"}, {"d"}}, {{"b", "c"}, {"e"}}, {{"a", "c"}, {}}};
    m3->rebuild_index();
    RuleSynth synth3(*m3);
    CHECK(synth3.lookup({"a", "b", "c"}).origin == RuleOrigin::Undefined);

    // An explicit triple beats every convention.
    auto m4 = std::make_shared<SignalMachine>();
    m4->signals = m3->signals;
    m4->rules = {{{"a", "b"}, {"d"}}, {{"b", "c"}, {"e"}}, {{"a", "c"}, {"d"}},
                 {{"a", "b", "c"}, {}}};
    m4->rebuild_index();
    RuleSynth synth4(*m4);
    CHECK(synth4.lookup({"a", "b", "c"}).origin == RuleOrigin::Explicit);
}

TEST_CASE("identity pass-through for pairs holds on random machines") {
    for (uint64_t seed = 1; seed <= 30; ++seed) {
        sm::SignalMachine m;
        m.signals = {{"p", Rat(static_cast<long long>(seed % 7) - 3)},
                     {"q", Rat(static_cast<long long>(seed % 5))}};
        if (m.signals[0].speed == m.signals[1].speed) continue;
        m.rebuild_index();
        RuleSynth synth(m);
        const auto& res = synth.lookup({"p", "q"});
        CHECK(res.origin == RuleOrigin::Blank);
        CHECK(res.rule->outgoing == res.rule->incoming);
    }
}

TEST_CASE("exhaustive small-model agreement with the directly written bullets") {
    // Fixed three signals, every rule set with at most two rules drawn from
    // all (incoming, outgoing) combinations.
    std::vector<std::string> names = {"a", "b", "c"};
    std::vector<std::vector<std::string>> incomings = {
        {"a", "b"}, {"a", "c"}, {"b", "c"}, {"a", "b", "c"}};
    std::vector<std::vector<std::string>> outgoings;
    for (uint32_t mask = 0; mask < 8; ++mask) {
        std::vector<std::string> out;
        for (size_t b = 0; b < 3; ++b)
            if (mask & (1u << b)) out.push_back(names[b]);
        outgoings.push_back(out);
    }
    std::vector<CollisionRule> all_rules;
    for (const auto& in : incomings)
        for (const auto& out : outgoings) all_rules.push_back({in, out});

    size_t checked = 0;
    auto try_machine = [&](std::vector<CollisionRule> rules) {
        SignalMachine m;
        m.signals = {{"a", Rat(-1)}, {"b", Rat(0)}, {"c", Rat(1)}};
        m.rules = std::move(rules);
        m.rebuild_index();
        RuleSynth synth(m);
        for (const auto& s : incomings) {
            const auto& got = synth.lookup(s);
            auto want = bullets_direct(m, s);
            REQUIRE(got.defined() == want.has_value());
            if (want) {
                CHECK(got.rule->incoming == want->incoming);
                CHECK(got.rule->outgoing == want->outgoing);
            }
            ++checked;
        }
    };
    try_machine({});
    for (size_t r1 = 0; r1 < all_rules.size(); ++r1) {
        try_machine({all_rules[r1]});
        for (size_t r2 = r1 + 1; r2 < all_rules.size(); ++r2) {
            if (all_rules[r1].incoming == all_rules[r2].incoming) continue;
            try_machine({all_rules[r1], all_rules[r2]});
        }
    }
    CHECK(checked > 1000);
}
