#include "sm/universal.hpp"

#include "sm/errors.hpp"
#include "sm/verify.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace sm;

namespace {

SpeedSet pm1() { return SpeedSet({Rat(-1), Rat(1)}); }
SpeedSet pm01() { return SpeedSet({Rat(-1), Rat(0), Rat(1)}); }

}  // namespace

TEST_CASE("intersection point formula") {
    // alpha = beta: both lines leave the same point; M is the source itself.
    auto [x0, t0] = intersection_point(Rat(2), Rat(2), Rat(5));
    CHECK(x0 == Rat(-2));
    CHECK(t0 == Rat(-1));
    // alpha=1, beta=-1, s=3: solve x = -t and x + 1 = 3(t + 1) by hand.
    auto [x1, t1] = intersection_point(Rat(1), Rat(-1), Rat(3));
    CHECK(x1 == Rat(1, 2));
    CHECK(t1 == Rat(-1, 2));
    // beta = 0 forces x = 0.
    auto [x2, t2] = intersection_point(Rat(0), Rat(0), Rat(7));
    CHECK(x2 == Rat(0));
    CHECK(t2 == Rat(-1));
    CHECK_THROWS_AS(intersection_point(Rat(1), Rat(2), Rat(2)), Error);
}

TEST_CASE("derived parameters for the unit speed pair") {
    UniversalParams p(pm1());
    CHECK(p.nu_max() == Rat(1));
    CHECK(p.nu_rapid() == Rat(40));
    CHECK(p.nu_shrink() == Rat(20));
    CHECK(p.epsilon() == Rat(1, 16));
    CHECK(p.coef_check() == Rat(101, 100));
    CHECK(p.t_out_left() == Rat(1, 20));
    CHECK(p.x_out_left() == Rat(-41, 20));
    CHECK(p.x_out_right() == Rat(39, 20));
    // One output corner: directions 1 and 2 separate at t_OL + 4/2.
    CHECK(p.corner_t(1) == Rat(1, 20) + Rat(2));
    CHECK(p.t_top() == Rat(2) * (Rat(1, 20) + Rat(2)));
    // Side anchors on t = epsilon - 1, edges of slope +multiplied by nu_max.
    CHECK(p.x_left() == -(p.t_top() - p.t_side()));
    CHECK(p.x_right() == -p.x_left());
}

TEST_CASE("degenerate all-zero speed set is rejected") {
    CHECK_THROWS_AS(UniversalParams(SpeedSet({Rat(0)})), Error);
    try {
        UniversalParams p(SpeedSet({Rat(0)}));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateSpeedSet);
    }
}

TEST_CASE("safety zone edges have slope +/- nu_max and transport affinely") {
    UniversalParams p(pm01());
    std::pair<Rat, Rat> coll{Rat(3), Rat(7)};
    std::pair<Rat, Rat> bot{Rat(3) - Rat(2) * p.s(3), Rat(5)};  // on the main_3 line, scale 2
    SafetyZone z = safety_zone(p, bot, coll);
    CHECK(z.top.first == coll.first);
    // Left->Top edge slope is +nu_max, Right->Top is -nu_max.
    Rat slope_l = (z.top.first - z.left.first) / (z.top.second - z.left.second);
    Rat slope_r = (z.top.first - z.right.first) / (z.top.second - z.right.second);
    CHECK(slope_l == p.nu_max());
    CHECK(slope_r == -p.nu_max());
    // Left and Right sit on the transported t = epsilon - 1 line.
    CHECK(z.left.second == Rat(7) + Rat(2) * (p.epsilon() - Rat(1)));
    CHECK(z.right.second == z.left.second);
    // Output points and all corners are inside the zone.
    for (int m = 1; m < p.n(); ++m) {
        Rat cx = coll.first + Rat(2) * p.corner_x(m);
        Rat ct = coll.second + Rat(2) * p.corner_t(m);
        CHECK(ct < z.top.second);
        // Inside the slope-nu_max flanks:
        CHECK(cx - z.top.first < p.nu_max() * (z.top.second - ct));
        CHECK(z.top.first - cx < p.nu_max() * (z.top.second - ct));
    }
}

TEST_CASE("generation validates and every rule reference is declared") {
    for (const SpeedSet& s : {pm1(), pm01()}) {
        UniversalMachine u = generate_universal(s);
        CHECK_NOTHROW(u.machine->validate());
        std::set<std::string> declared;
        for (const auto& sig : u.machine->signals) declared.insert(sig.name);
        for (const auto& r : u.machine->rules) {
            for (const auto& n : r.incoming) CHECK(declared.count(n) == 1);
            for (const auto& n : r.outgoing) CHECK(declared.count(n) == 1);
        }
        // Every signal is tagged and its speed matches the family formula.
        for (const auto& sig : u.machine->signals) {
            const FamilyTag& tag = u.tag_of(sig.name);
            CHECK(family_speed(u.params, tag) == sig.speed);
            CHECK(UniversalMachine::name_of(tag) == sig.name);
        }
    }
}

TEST_CASE("validity corpus: random speed sets up to four speeds") {
    TestGen gen(555);
    int built = 0;
    while (built < 20) {
        int n = static_cast<int>(gen.pick(1, 4));
        std::set<Rat> speeds;
        while (static_cast<int>(speeds.size()) < n) speeds.insert(gen.rational(10, 6));
        if (speeds.size() == 1 && speeds.begin()->is_zero()) continue;
        SpeedSet s(std::vector<Rat>(speeds.begin(), speeds.end()));
        UniversalMachine u = generate_universal(s);
        CHECK_NOTHROW(u.machine->validate());
        ++built;
    }
}

TEST_CASE("family instance counts match the quantifier ranges") {
    for (int n : {1, 2, 3, 4}) {
        std::vector<Rat> speeds;
        for (int i = 0; i < n; ++i) speeds.push_back(Rat(2 * i - n));
        UniversalMachine u = generate_universal(SpeedSet(speeds));
        std::map<Family, size_t> counts;
        for (const auto& [name, tag] : u.tags) counts[tag.family]++;

        size_t pairs = 0, trips_jk = 0, waits = 0, intercepts = 0;
        for (int i = 1; i <= n; ++i)
            for (int k = 1; k < i; ++k) {
                ++pairs;
                for (int j = 1; j <= k; ++j) ++trips_jk;
                for (int j = 1; j < k; ++j) {
                    ++waits;
                    ++intercepts;
                }
            }
        const size_t N = static_cast<size_t>(n);
        CHECK(counts[Family::Main] == N << n);
        CHECK(counts[Family::Ready] == N << n);
        CHECK(counts[Family::ReadyNo] == N << n);
        CHECK(counts[Family::FastLeft] == (1u << n));
        CHECK(counts[Family::FastRight] == (1u << n));
        CHECK(counts[Family::CheckOk] == pairs);
        CHECK(counts[Family::Collect] == pairs);
        CHECK(counts[Family::TestRight] == trips_jk);
        CHECK(counts[Family::TestRightWait] == waits);
        CHECK(counts[Family::CheckIntercept] == intercepts);
        CHECK(counts[Family::Then] == N * N);
        CHECK(counts[Family::If] == N * N);
        CHECK(counts[Family::IdCopy] == N * N);
        CHECK(counts[Family::ShrinkTest] == pairs);
        CHECK(counts[Family::ReadyU] == 1);
        CHECK(counts[Family::ReadyUu] == 1);
        CHECK(counts[Family::BorderLeft] == N);
        CHECK(counts[Family::TestLeftUp] == pairs);
    }
}

TEST_CASE("frozen totals for the reference speed sets") {
    // Recorded once from the enumeration of every family and rule row; any
    // drift in the generator shows up here first.
    UniversalMachine u2 = generate_universal(pm1());
    CHECK(u2.machine->signals.size() == 154);
    CHECK(u2.machine->rules.size() == 361);
    UniversalMachine u3 = generate_universal(pm01());
    CHECK(u3.machine->signals.size() == 309);
    CHECK(u3.machine->rules.size() == 1138);
    // The check_ok family for two speeds has exactly one instance.
    size_t check_ok2 = 0;
    for (const auto& [name, tag] : u2.tags)
        if (tag.family == Family::CheckOk) ++check_ok2;
    CHECK(check_ok2 == 1);
}

TEST_CASE("probe meeting points are exact incidences") {
    UniversalParams p(pm01());
    TestGen gen(77);
    for (int iter = 0; iter < 16; ++iter) {
        int i = static_cast<int>(gen.pick(2, 3));
        int k = static_cast<int>(gen.pick(1, i - 1));
        // In the normalized frame the collision is at the origin and the
        // probes start on main_i at time -1.
        Rat tm = p.t_meet(i, k);
        Rat xm = p.x_meet(i, k);
        // The meeting point lies on main_k through the origin...
        CHECK(xm == p.s(k) * tm);
        // ...and on the initial right probe from (-s_i, -1).
        CHECK(xm - (-p.s(i)) == p.v_test_right_init(i) * (tm - Rat(-1)));
        // The redirected probe reaches the right anchor.
        CHECK(p.x_right() - xm == p.v_test_right(i, k) * (p.t_side() - tm));
        // The left climb from the meeting point reaches the left anchor.
        CHECK(p.x_left() - xm == p.v_test_left_up(i, k) * (p.t_side() - tm));
        // The returning probes hit main_i at 1.5*eps-1 and 2*eps-1.
        Rat eps = p.epsilon();
        CHECK(Rat(3, 2) * eps * p.s(i) - p.s(i) - p.x_left() ==
              p.v_test_back_left(i) * (eps / Rat(2)));
        CHECK(Rat(2) * eps * p.s(i) - p.s(i) - p.x_right() == p.v_test_back_right(i) * eps);
    }
}

TEST_CASE("welcome signals pass through both anchor points of the check") {
    UniversalParams p(pm01());
    int i = 3, k = 2, l = 1;
    Rat ta = p.t_check_branch(i, k);
    Rat xa = p.s(k) * ta;
    Rat tb = p.t_check_cross(i, l);
    Rat xb = p.s(l) * tb;
    // The branch happens strictly before the fast check crosses main_l, and
    // the welcome speed joins the two points.
    CHECK(ta < tb);
    CHECK(xb - xa == p.v_check_intercept(i, k, l) * (tb - ta));
    // The fast check crosses main_l exactly at (xb, tb).
    CHECK(xb - (-p.s(i)) == p.nu_rapid() * (tb - Rat(-1)));
}

TEST_CASE("near-equal small speeds still produce a consistent check climb") {
    // The closed-form padding collapses here; the fallback must still give a
    // strictly sufficient speed.
    SpeedSet s({Rat(0), Rat(1, 1000000000), Rat(2, 1000000000), Rat(1)});
    UniversalParams p(s);
    for (int i = 3; i <= 4; ++i)
        for (int k = 2; k < i; ++k) CHECK(p.t_check_branch(i, k) < p.t_check_cross(i, k - 1));
    CHECK_NOTHROW(generate_universal(s));
}

TEST_CASE("tags sidecar round-trips") {
    UniversalMachine u = generate_universal(pm1());
    std::string json = write_tags_json(u);
    UniversalMachine back = read_tags_json(json, u.machine);
    CHECK(back.tags.size() == u.tags.size());
    for (const auto& [name, tag] : u.tags) {
        const FamilyTag& t = back.tag_of(name);
        CHECK(t.family == tag.family);
        CHECK(t.i == tag.i);
        CHECK(t.j == tag.j);
        CHECK(t.k == tag.k);
        CHECK(t.l == tag.l);
        CHECK(t.e_mask == tag.e_mask);
    }
    CHECK(back.speed_set.n() == 2);
}
