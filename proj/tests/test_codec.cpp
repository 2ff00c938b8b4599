#include "sm/codec.hpp"

#include "sm/errors.hpp"
#include "sm/verify.hpp"

#include <doctest.h>

using namespace sm;

namespace {

std::shared_ptr<SignalMachine> example_machine() {
    auto m = std::make_shared<SignalMachine>();
    m->name = "A";
    m->signals = {{"mu_a", Rat(-1)}, {"mu_b", Rat(1)}};
    m->rules = {{{"mu_a", "mu_b"}, {"mu_b"}}};
    m->rebuild_index();
    return m;
}

Codec make_codec(std::shared_ptr<SignalMachine> m, std::vector<Rat> speeds) {
    auto u = std::make_shared<UniversalMachine>(generate_universal(SpeedSet(std::move(speeds))));
    return Codec(std::move(m), std::move(u));
}

}  // namespace

TEST_CASE("per-speed numbering follows declaration order") {
    auto m = std::make_shared<SignalMachine>();
    m->signals = {{"p", Rat(1)}, {"q", Rat(-1)}, {"r", Rat(1)}, {"s", Rat(-1)}};
    m->rebuild_index();
    Codec codec = make_codec(m, {Rat(-1), Rat(1)});
    CHECK(codec.speed_index("q") == 1);
    CHECK(codec.speed_index("p") == 2);
    CHECK(codec.id_of("p") == 1);
    CHECK(codec.id_of("r") == 2);
    CHECK(codec.id_of("q") == 1);
    CHECK(codec.id_of("s") == 2);
    CHECK(codec.signal_at(2, 2) == "r");
    CHECK(codec.max_id(1) == 2);
}

TEST_CASE("speeds outside the set are rejected") {
    auto m = std::make_shared<SignalMachine>();
    m->signals = {{"p", Rat(2)}};
    m->rebuild_index();
    auto u = std::make_shared<UniversalMachine>(generate_universal(SpeedSet({Rat(-1), Rat(1)})));
    try {
        Codec codec(m, u);
        FAIL("expected SpeedNotInSet");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SpeedNotInSet);
    }
}

TEST_CASE("rule encoding block lays out then/if counts in speed order") {
    // Eight speeds; one rule taking ids (1,4,5) at speeds (3,7,8) to ids (3,1)
    // at speeds (2,4). The direction block reads: bound, 3 thens at speed 2,
    // 1 then at speed 4, middle, 1 if at speed 3, 4 ifs at speed 7, 5 ifs at
    // speed 8, bound.
    std::vector<Rat> speeds;
    for (int v = 1; v <= 8; ++v) speeds.push_back(Rat(v, 10));
    auto m = std::make_shared<SignalMachine>();
    auto add = [&](int dir, int count) {
        for (int c = 0; c < count; ++c)
            m->signals.push_back({"s" + std::to_string(dir) + "_" + std::to_string(c + 1),
                                  speeds[static_cast<size_t>(dir - 1)]});
    };
    add(3, 1);
    add(7, 4);
    add(8, 5);
    add(2, 3);
    add(4, 1);
    m->rules = {{CollisionRule::canon({"s3_1", "s7_4", "s8_5"}),
                 CollisionRule::canon({"s2_3", "s4_1"})}};
    m->rebuild_index();
    Codec codec = make_codec(m, speeds);

    REQUIRE(codec.rule_block().size() == 2);  // the rule plus the maximal segment
    const auto& seg = codec.rule_block()[0];
    CHECK(seg.then_counts[2] == 3);
    CHECK(seg.then_counts[4] == 1);
    CHECK(seg.if_counts[3] == 1);
    CHECK(seg.if_counts[7] == 4);
    CHECK(seg.if_counts[8] == 5);
    CHECK(codec.max_segment_index() == 1);

    std::vector<std::string> want = {
        "rule_bound_1", "then_1_2", "then_1_2", "then_1_2", "then_1_4", "rule_middle_1",
        "if_1_3",       "if_1_7",   "if_1_7",   "if_1_7",   "if_1_7",   "if_1_8",
        "if_1_8",       "if_1_8",   "if_1_8",   "if_1_8",   "rule_bound_1"};
    std::vector<std::string> got = codec.block_signals(1);
    REQUIRE(got.size() >= want.size());
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("a machine with no rules still encodes the maximal segment") {
    auto m = std::make_shared<SignalMachine>();
    m->signals = {{"p", Rat(1)}, {"q", Rat(-1)}};
    m->rebuild_index();
    Codec codec = make_codec(m, {Rat(-1), Rat(1)});
    REQUIRE(codec.rule_block().size() == 1);
    CHECK(codec.max_segment_index() == 0);
    CHECK(codec.rule_block()[0].if_counts[1] == 1);
    CHECK(codec.rule_block()[0].if_counts[2] == 1);
    CHECK(codec.rule_block()[0].then_counts[1] == 0);
}

TEST_CASE("the two-signal example machine needs no extra maximal segment") {
    Codec codec = make_codec(example_machine(), {Rat(-1), Rat(1)});
    REQUIRE(codec.rule_block().size() == 1);
    CHECK(codec.max_segment_index() == 0);
    CHECK(codec.rule_block()[0].if_counts[1] == 1);
    CHECK(codec.rule_block()[0].if_counts[2] == 1);
    CHECK(codec.rule_block()[0].then_counts[2] == 1);
}

TEST_CASE("representation of a signal puts the borders and main in layout position") {
    Codec codec = make_codec(example_machine(), {Rat(-1), Rat(1)});
    Configuration r = codec.repr_signal("mu_b");
    CHECK(r.at(Rat(-21, 20)) == ExtendedValue::signal("border_left_2"));
    CHECK(r.at(Rat(19, 20)) == ExtendedValue::signal("border_right_2"));
    CHECK(r.at(Rat(0)) == ExtendedValue::signal("main_2_e"));
    // One id signal, strictly between the left border and the main.
    int ids = 0;
    for (const auto& e : r.entries()) {
        if (e.value.signal_name() == "id_2") {
            ++ids;
            CHECK(Rat(-21, 20) < e.pos);
            CHECK(e.pos < Rat(0));
        }
        CHECK(!(e.pos < Rat(-21, 20)));
        CHECK(!(Rat(19, 20) < e.pos));
    }
    CHECK(ids == 1);
    // Support bound from the layout shift.
    UniversalParams p(SpeedSet({Rat(-1), Rat(1)}));
    Rat lo = -Rat(1) - Rat(2) * p.nu_max() / p.nu_rapid();
    for (const auto& e : r.entries()) {
        CHECK(!(e.pos < lo));
        CHECK(!(Rat(1) < e.pos));
    }
}

TEST_CASE("clean and width at the main of a representation") {
    Codec codec = make_codec(example_machine(), {Rat(-1), Rat(1)});
    Configuration r = codec.repr_signal("mu_b");
    CHECK(codec.clean_at(r, Rat(0)));
    CHECK(!codec.clean_at(r, Rat(19, 20)));
    CHECK(!codec.clean_at(r, Rat(7)));
    CHECK(codec.width_at(r, Rat(0)) == Rat(2));
    CHECK_THROWS_AS((void)codec.width_at(r, Rat(19, 20)), Error);
}

TEST_CASE("decoding a representation window recovers the signal") {
    Codec codec = make_codec(example_machine(), {Rat(-1), Rat(1)});
    for (const char* name : {"mu_a", "mu_b"}) {
        Configuration r = codec.repr_signal(name);
        CHECK(codec.decode_at(r, Rat(0)) == ExtendedValue::signal(name));
        CHECK(codec.decode_at(r, r.entries().front().pos).is_void());
        CHECK(codec.decode_at(r, r.entries().back().pos).is_void());
        Configuration decoded = codec.decode_config(r);
        REQUIRE(decoded.size() == 1);
        CHECK(decoded.entries()[0].pos == Rat(0));
    }
}

TEST_CASE("representation of whole configurations scales by a third of the gap") {
    Codec codec = make_codec(example_machine(), {Rat(-1), Rat(1)});
    Configuration c;
    c.put(Rat(0), ExtendedValue::signal("mu_b"));
    c.put(Rat(3), ExtendedValue::signal("mu_a"));
    Configuration u = codec.repr_config(c);
    // Supports stay within one gap-third (plus the layout overhang) of each
    // center; in particular they are disjoint.
    UniversalParams p(SpeedSet({Rat(-1), Rat(1)}));
    Rat overhang = Rat(1) + Rat(2) * p.nu_max() / p.nu_rapid();
    for (const auto& e : u.entries()) {
        bool near0 = e.pos.abs() <= overhang;
        bool near3 = (e.pos - Rat(3)).abs() <= overhang;
        CHECK((near0 || near3));
    }
    CHECK(codec.decode_config(u) == c);

    Configuration single;
    single.put(Rat(5), ExtendedValue::signal("mu_a"));
    Configuration su = codec.repr_config(single);
    CHECK(codec.decode_config(su) == single);
    CHECK(codec.repr_config(Configuration{}).empty());
}

TEST_CASE("representation of a collision bootstraps to the layout and decodes back") {
    auto m = example_machine();
    Codec codec = make_codec(m, {Rat(-1), Rat(1)});
    CollisionRule rho = m->rules[0];
    Configuration r = codec.repr_collision(rho);
    // Central value: the meeting of the collaborating main signals.
    ExtendedValue center = r.at(Rat(0));
    REQUIRE(center.is_collision());
    // Support in the layout interval.
    UniversalParams p(SpeedSet({Rat(-1), Rat(1)}));
    Rat lo = -Rat(1) - Rat(2) * p.nu_max() / p.nu_rapid();
    for (const auto& e : r.entries()) {
        CHECK(!(e.pos < lo));
        CHECK(!(Rat(1) < e.pos));
    }
    // Decoding the center recovers the rule.
    ExtendedValue back = codec.decode_at(r, Rat(0));
    REQUIRE(back.is_collision());
    CHECK(back.rule() == rho);
    // The whole-configuration representation accepts collision entries.
    Configuration c;
    c.put(Rat(2), ExtendedValue::collision(rho));
    c.put(Rat(9), ExtendedValue::signal("mu_a"));
    Configuration u = codec.repr_config(c);
    CHECK(codec.decode_config(u) == c);
}

TEST_CASE("round-trip at time zero on random machines and configurations") {
    TestGen gen(909);
    int done = 0;
    size_t max_left = 0, max_right = 0;
    while (done < 200) {
        auto m = gen.machine(3, 4, 3);
        std::set<Rat> speed_set;
        for (const auto& s : m->signals) speed_set.insert(s.speed);
        if (speed_set.size() == 1 && speed_set.begin()->is_zero()) continue;
        auto u = std::make_shared<UniversalMachine>(
            generate_universal(SpeedSet(std::vector<Rat>(speed_set.begin(), speed_set.end()))));
        Codec codec(m, u);
        Configuration c = gen.configuration(*m, 5, true);
        Configuration repr = codec.repr_config(c);
        Configuration back;
        for (const auto& e : repr.entries()) {
            ExtendedValue v = codec.decode_at(repr, e.pos);
            if (!v.is_void()) back.put(e.pos, std::move(v));
            CHECK(codec.last_window_left() <= codec.locality_bound());
            CHECK(codec.last_window_right() <= codec.locality_bound());
            max_left = std::max(max_left, codec.last_window_left());
            max_right = std::max(max_right, codec.last_window_right());
        }
        CHECK(back == c);
        ++done;
    }
    CHECK(max_left > 0);
    CHECK(max_right > 0);
}
