#include "sm/universal.hpp"

#include "sm/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace sm {

SpeedSet::SpeedSet(std::vector<Rat> speeds) : speeds_(std::move(speeds)) {
    if (speeds_.empty())
        throw Error(ErrorKind::ValidationError, "speed set must be nonempty");
    for (size_t i = 1; i < speeds_.size(); ++i)
        if (!(speeds_[i - 1] < speeds_[i]))
            throw Error(ErrorKind::ValidationError, "speed set must be strictly increasing");
    if (speeds_.size() > 9)
        throw Error(ErrorKind::ValidationError, "speed sets larger than 9 are not supported");
}

int SpeedSet::index_of(const Rat& s) const {
    for (size_t i = 0; i < speeds_.size(); ++i)
        if (speeds_[i] == s) return static_cast<int>(i) + 1;
    return 0;
}

const char* family_name(Family f) {
    switch (f) {
        case Family::BorderLeft: return "border_left";
        case Family::BorderRight: return "border_right";
        case Family::Id: return "id";
        case Family::Main: return "main";
        case Family::RuleBound: return "rule_bound";
        case Family::RuleMiddle: return "rule_middle";
        case Family::Then: return "then";
        case Family::If: return "if";
        case Family::IfOk: return "if_ok";
        case Family::RuleBoundFail: return "rule_bound_fail";
        case Family::RuleMiddleFail: return "rule_middle_fail";
        case Family::CheckOk: return "check_ok";
        case Family::Collect: return "collect";
        case Family::CrossBackOk: return "cross_back_ok";
        case Family::CrossOk: return "cross_ok";
        case Family::CrossBack: return "cross_back";
        case Family::Cross: return "cross";
        case Family::Ready: return "ready";
        case Family::ReadyNo: return "ready_no";
        case Family::ReadyU: return "ready_u";
        case Family::ReadyUu: return "ready_uu";
        case Family::IdCopy: return "id_copy";
        case Family::IdSelected: return "id_selected";
        case Family::FastLeft: return "fast_left";
        case Family::FastRight: return "fast_right";
        case Family::ShrinkBottomL: return "shrink_bottom_l";
        case Family::ShrinkBottomBothL: return "shrink_bottom_both_l";
        case Family::ShrinkBottomR: return "shrink_bottom_r";
        case Family::ShrinkBottomBothR: return "shrink_bottom_both_r";
        case Family::ShrinkTopL: return "shrink_top_l";
        case Family::ShrinkTopTestL: return "shrink_top_test_l";
        case Family::ShrinkTopR: return "shrink_top_r";
        case Family::ShrinkTopTestR: return "shrink_top_test_r";
        case Family::ShrinkBackL: return "shrink_back_l";
        case Family::ShrinkBackR: return "shrink_back_r";
        case Family::ShrinkId: return "shrink_id";
        case Family::ShrinkRuleBound: return "shrink_rule_bound";
        case Family::ShrinkRuleMiddle: return "shrink_rule_middle";
        case Family::ShrinkIf: return "shrink_if";
        case Family::ShrinkThen: return "shrink_then";
        case Family::ShrinkEchoL: return "shrink_echo_l";
        case Family::ShrinkEchoR: return "shrink_echo_r";
        case Family::ShrinkTest: return "shrink_test";
        case Family::ShrinkTestOk: return "shrink_test_ok";
        case Family::ShrinkTestFail: return "shrink_test_fail";
        case Family::ShrinkOrder: return "shrink_order";
        case Family::TestStart: return "test_start";
        case Family::ShrinkDelayedL: return "shrink_delayed_l";
        case Family::ShrinkDelayedR: return "shrink_delayed_r";
        case Family::TestLeft: return "test_left";
        case Family::TestRightUp: return "test_right_up";
        case Family::TestRightInit: return "test_right_init";
        case Family::TestRight: return "test_right";
        case Family::TestRightWait: return "test_right_wait";
        case Family::TestLeftUp: return "test_left_up";
        case Family::TestLeftOk: return "test_left_ok";
        case Family::TestRightOk: return "test_right_ok";
        case Family::MainTestOk: return "main_test_ok";
        case Family::TestLeftFail: return "test_left_fail";
        case Family::TestRightFail: return "test_right_fail";
        case Family::MainTestFailL: return "main_test_fail_l";
        case Family::MainTestFailR: return "main_test_fail_r";
        case Family::CheckMaybe: return "check_maybe";
        case Family::Check: return "check";
        case Family::CheckUp: return "check_up";
        case Family::CheckIntercept: return "check_intercept";
        case Family::CheckFail: return "check_fail";
    }
    return "?";
}

UniversalParams::UniversalParams(SpeedSet speed_set) : s_(std::move(speed_set)) {
    nu_max_ = Rat(0);
    for (const Rat& v : s_.speeds()) {
        Rat a = v.abs();
        if (nu_max_ < a) nu_max_ = a;
    }
    if (nu_max_.is_zero())
        throw Error(ErrorKind::DegenerateSpeedSet,
                    "all speeds are zero; the control speed would vanish");
    nu_rapid_ = Rat(40) * nu_max_;
    nu_shrink_ = nu_rapid_ / Rat(2);
    epsilon_ = Rat(1, 16);
    coef_check_ = Rat(101, 100);

    t_out_left_ = Rat(2) * nu_max_ / nu_rapid_;
    x_out_left_ = -Rat(2) * nu_max_ - Rat(2) * nu_max_ * nu_max_ / nu_rapid_;
    x_out_right_ = Rat(2) * nu_max_ - Rat(2) * nu_max_ * nu_max_ / nu_rapid_;

    if (n() >= 2) {
        Rat best = corner_t(1);
        for (int m = 2; m < n(); ++m) {
            Rat t = corner_t(m);
            if (best < t) best = t;
        }
        t_top_ = Rat(2) * best;
    } else {
        // No pair of output macro-signals ever separates; any positive top
        // above the output points keeps the zone well-formed.
        t_top_ = Rat(2) * (t_out_left_ + Rat(1));
    }

    // Left/Top and Right/Top edges have slopes +/- nu_max and the side anchors
    // sit on the line t = epsilon - 1.
    x_left_ = -nu_max_ * (t_top_ - t_side());
    x_right_ = nu_max_ * (t_top_ - t_side());

    // Participant-check climb speed, per direction index.
    check_up_.assign(static_cast<size_t>(n()) + 1, Rat(0));
    for (int i = 1; i <= n(); ++i) {
        Rat u = nu_rapid_ / Rat(2);
        for (int k = 2; k <= i; ++k) {
            Rat r = (nu_rapid_ - s(i)) / (nu_rapid_ - s(k - 1));
            Rat h = -coef_check_ * r;
            Rat bound;
            if ((Rat(1) + h).sign() > 0) {
                bound = (h * s(k) + s(i)) / (h + Rat(1));
            } else {
                // The 1% padding of the closed form collapses for near-equal
                // speeds; pad the exact threshold directly instead.
                bound = coef_check_ * ((s(i) - r * s(k)) / (Rat(1) - r));
            }
            if (u < bound) u = bound;
        }
        // Distinct from the fast probe speed, or rules pairing the two would
        // have coinciding incoming speeds.
        if (u == nu_rapid_) u = u * coef_check_;
        check_up_[static_cast<size_t>(i)] = u;
    }
}

Rat UniversalParams::corner_x(int m) const {
    return x_out_left_ + Rat(4) * nu_max_ * s(m + 1) / (s(m + 1) - s(m));
}

Rat UniversalParams::corner_t(int m) const {
    return t_out_left_ + Rat(4) * nu_max_ / (s(m + 1) - s(m));
}

Rat UniversalParams::v_test_left(int i) const { return (x_left_ + s(i)) / epsilon_; }
Rat UniversalParams::v_test_right_up(int i) const { return (x_right_ + s(i)) / epsilon_; }
Rat UniversalParams::v_test_right_init(int i) const { return Rat(2) * v_test_right_up(i); }

Rat UniversalParams::t_meet(int i, int k) const {
    Rat v = v_test_right_init(i);
    return -(v - s(i)) / (v - s(k));
}
Rat UniversalParams::x_meet(int i, int k) const { return s(k) * t_meet(i, k); }

Rat UniversalParams::v_test_right(int i, int k) const {
    return (x_right_ - x_meet(i, k)) / (t_side() - t_meet(i, k));
}
Rat UniversalParams::v_test_left_up(int i, int k) const {
    return (x_left_ - x_meet(i, k)) / (t_side() - t_meet(i, k));
}
Rat UniversalParams::v_test_back_left(int i) const {
    return (Rat(3, 2) * epsilon_ * s(i) - s(i) - x_left_) / (epsilon_ / Rat(2));
}
Rat UniversalParams::v_test_back_right(int i) const {
    return (Rat(2) * epsilon_ * s(i) - s(i) - x_right_) / epsilon_;
}

Rat UniversalParams::v_check_up(int i) const { return check_up_.at(static_cast<size_t>(i)); }

Rat UniversalParams::t_check_cross(int i, int k) const {
    return (s(i) - nu_rapid_) / (nu_rapid_ - s(k));
}
Rat UniversalParams::t_check_branch(int i, int k) const {
    Rat u = v_check_up(i);
    return (s(i) - u) / (u - s(k));
}
Rat UniversalParams::v_check_intercept(int i, int k, int l) const {
    // From the branch point on main_k to the point where the fast check signal
    // crosses main_l; the welcome signal must sit exactly there.
    Rat ta = t_check_branch(i, k);
    Rat tb = t_check_cross(i, l);
    return (s(l) * tb - s(k) * ta) / (tb - ta);
}

std::pair<Rat, Rat> intersection_point(const Rat& alpha, const Rat& beta, const Rat& s) {
    if (s == beta) throw Error(ErrorKind::ParallelLines, "slope s equals beta");
    Rat t = -(s - alpha) / (s - beta);
    return {beta * t, t};
}

SafetyZone safety_zone(const UniversalParams& p, std::pair<Rat, Rat> bot,
                       std::pair<Rat, Rat> sim_collision) {
    const Rat& xc = sim_collision.first;
    const Rat& tc = sim_collision.second;
    Rat scale = tc - bot.second;
    if (scale.sign() <= 0)
        throw Error(ErrorKind::ValidationError, "bot must lie strictly before the collision");
    SafetyZone z;
    z.bot = bot;
    z.top = {xc, tc + scale * p.t_top()};
    z.left = {xc + scale * p.x_left(), tc + scale * p.t_side()};
    z.right = {xc + scale * p.x_right(), tc + scale * p.t_side()};
    return z;
}

std::string UniversalMachine::e_suffix(uint32_t e_mask) {
    std::string s = "e";
    for (int b = 0; b < 31; ++b)
        if (e_mask & (1u << b)) s += static_cast<char>('0' + b + 1);
    return s;
}

std::string UniversalMachine::name_of(const FamilyTag& t) {
    std::string s = family_name(t.family);
    auto app = [&s](int v) { s += "_" + std::to_string(v); };
    switch (t.family) {
        case Family::ReadyU:
        case Family::ReadyUu: break;
        case Family::FastLeft:
        case Family::FastRight: s += "_" + e_suffix(t.e_mask); break;
        case Family::Main: app(t.i); s += "_" + e_suffix(t.e_mask); break;
        case Family::Ready:
        case Family::ReadyNo: app(t.i); s += "_" + e_suffix(t.e_mask); break;
        case Family::Then:
        case Family::If:
        case Family::IfOk:
        case Family::ShrinkIf:
        case Family::ShrinkThen:
        case Family::IdCopy:
        case Family::IdSelected: app(t.i); app(t.l); break;
        case Family::CheckOk:
        case Family::Collect:
        case Family::TestRightOk:
        case Family::CheckMaybe:
        case Family::Check:
        case Family::CheckUp:
        case Family::CheckFail: app(t.i); app(t.j); break;
        case Family::ShrinkTest: app(t.i); app(t.k); break;
        case Family::TestLeftUp: app(t.i); app(t.k); break;
        case Family::TestRight:
        case Family::TestRightWait: app(t.i); app(t.k); app(t.j); break;
        case Family::CheckIntercept: app(t.i); app(t.k); app(t.l); break;
        default: app(t.i); break;
    }
    return s;
}

Rat family_speed(const UniversalParams& p, const FamilyTag& t) {
    const Rat& nu = p.nu_rapid();
    const Rat sh = p.nu_shrink();
    switch (t.family) {
        case Family::BorderLeft:
        case Family::BorderRight:
        case Family::Id:
        case Family::Main:
        case Family::RuleBound:
        case Family::RuleMiddle:
        case Family::Then:
        case Family::If:
        case Family::IfOk:
        case Family::RuleBoundFail:
        case Family::RuleMiddleFail:
        case Family::IdSelected:
        case Family::MainTestOk:
        case Family::MainTestFailL:
        case Family::MainTestFailR:
        case Family::ShrinkTestOk:
        case Family::ShrinkTestFail: return p.s(t.i);
        case Family::CheckOk: return -nu;
        case Family::Collect: return nu;
        case Family::CrossBackOk:
        case Family::CrossBack: return nu;
        case Family::CrossOk:
        case Family::Cross: return -nu;
        case Family::Ready:
        case Family::ReadyNo:
        case Family::ReadyUu: return -nu;
        case Family::ReadyU:
        case Family::IdCopy: return -sh;
        case Family::FastLeft: return -nu - p.nu_max();
        case Family::FastRight: return nu - p.nu_max();
        case Family::ShrinkBottomL:
        case Family::ShrinkBottomBothL:
        case Family::ShrinkBackR: return p.s(t.i) + Rat(3) * sh;
        case Family::ShrinkBottomR:
        case Family::ShrinkBottomBothR:
        case Family::ShrinkBackL: return p.s(t.i) - Rat(3) * sh;
        case Family::ShrinkTopL:
        case Family::ShrinkTopTestL:
        case Family::ShrinkId:
        case Family::ShrinkOrder: return p.s(t.i) + sh;
        case Family::ShrinkTopR:
        case Family::ShrinkTopTestR:
        case Family::ShrinkRuleBound:
        case Family::ShrinkRuleMiddle:
        case Family::ShrinkIf:
        case Family::ShrinkThen: return p.s(t.i) - sh;
        // The test launch returns at the fast gadget speed so the shrink
        // phase stays within a tenth of the meet-to-collision interval even
        // when the meeting half-widths are lopsided after a width-order
        // retry.
        case Family::TestStart: return p.s(t.i) - Rat(3) * sh;
        case Family::ShrinkEchoL: return p.s(t.i) - Rat(3) * sh;
        case Family::ShrinkEchoR: return p.s(t.i) + Rat(3) * sh;
        case Family::ShrinkTest: return (p.s(t.i) + p.s(t.k)) / Rat(2);
        case Family::ShrinkDelayedL: return p.s(t.i) + sh / Rat(2);
        case Family::ShrinkDelayedR: return p.s(t.i) - sh / Rat(2);
        case Family::TestLeft: return p.v_test_left(t.i);
        case Family::TestRightUp: return p.v_test_right_up(t.i);
        case Family::TestRightInit: return p.v_test_right_init(t.i);
        case Family::TestRight:
        case Family::TestRightWait: return p.v_test_right(t.i, t.k);
        case Family::TestLeftUp: return p.v_test_left_up(t.i, t.k);
        case Family::TestLeftOk:
        case Family::TestLeftFail: return p.v_test_back_left(t.i);
        case Family::TestRightOk:
        case Family::TestRightFail: return p.v_test_back_right(t.i);
        case Family::CheckMaybe:
        case Family::Check: return nu;
        case Family::CheckUp: return p.v_check_up(t.i);
        case Family::CheckIntercept: return p.v_check_intercept(t.i, t.k, t.l);
        case Family::CheckFail: return -nu;
    }
    throw Error(ErrorKind::InconsistentGeneration, "family without a speed formula");
}

const FamilyTag& UniversalMachine::tag_of(const std::string& name) const {
    auto it = tags.find(name);
    if (it == tags.end())
        throw Error(ErrorKind::UndeclaredSignal, "no tag for '" + name + "'");
    return it->second;
}

bool UniversalMachine::is_family(const std::string& name, Family f) const {
    auto it = tags.find(name);
    return it != tags.end() && it->second.family == f;
}

namespace {

/// Assembles the simulator machine. Shared by the full generator and the
/// resolution-only subset.
class Builder {
  public:
    Builder(const SpeedSet& s, bool with_preparation)
        : set_(s), params_(s), n_(s.n()), with_preparation_(with_preparation) {}

    UniversalMachine build() {
        declare_signals();
        build_disposal_rules();
        build_apply_rules();
        build_selection_rules();
        build_output_rules();
        if (with_preparation_) {
            build_shrink_rules();
            build_test_rules();
            build_check_rules();
        }
        auto machine = std::make_shared<SignalMachine>(std::move(machine_));
        machine->name = with_preparation_ ? "universal" : "universal_checked";
        machine->rebuild_index();
        try {
            machine->validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::InconsistentGeneration, e.what());
        }
        UniversalMachine u{machine, std::move(tags_), params_, set_};
        return u;
    }

  private:
    // -- declaration helpers ------------------------------------------------

    std::string sig(FamilyTag tag) {
        std::string name = UniversalMachine::name_of(tag);
        auto it = tags_.find(name);
        if (it == tags_.end()) {
            machine_.signals.push_back({name, family_speed(params_, tag)});
            tags_.emplace(name, tag);
        }
        return name;
    }

    std::string plain(Family f, int i) { return sig(FamilyTag{f, i}); }
    std::string pair_ij(Family f, int i, int j) {
        FamilyTag t{f, i, j};
        return sig(t);
    }
    std::string with_l(Family f, int i, int l) {
        FamilyTag t{f, i};
        t.l = l;
        return sig(t);
    }
    std::string with_k(Family f, int i, int k) {
        FamilyTag t{f, i};
        t.k = k;
        return sig(t);
    }
    std::string trip_ikj(Family f, int i, int k, int j) {
        FamilyTag t{f, i, j};
        t.k = k;
        return sig(t);
    }
    std::string trip_ikl(Family f, int i, int k, int l) {
        FamilyTag t{f, i};
        t.k = k;
        t.l = l;
        return sig(t);
    }
    std::string with_e(Family f, int i, uint32_t e) {
        FamilyTag t{f, i};
        t.has_e = true;
        t.e_mask = e;
        return sig(t);
    }
    std::string main(int i, uint32_t e = 0) { return with_e(Family::Main, i, e); }

    void rule(std::vector<std::string> in, std::vector<std::string> out) {
        CollisionRule r{CollisionRule::canon(std::move(in)), CollisionRule::canon(std::move(out))};
        if (!seen_incomings_.insert(r.incoming).second)
            throw Error(ErrorKind::InconsistentGeneration,
                        "duplicate incoming set {" + SignalMachine::join(r.incoming) + "}");
        machine_.rules.push_back(std::move(r));
    }

    uint32_t full_mask() const { return (1u << n_) - 1u; }

    // -- sections -----------------------------------------------------------

    void declare_signals() {
        for (int i = 1; i <= n_; ++i) {
            plain(Family::BorderLeft, i);
            plain(Family::Id, i);
            for (uint32_t e = 0; e <= full_mask(); ++e) main(i, e);
            plain(Family::BorderRight, i);
            plain(Family::RuleBound, i);
            plain(Family::RuleMiddle, i);
            for (int l = 1; l <= n_; ++l) {
                with_l(Family::Then, i, l);
                with_l(Family::If, i, l);
                with_l(Family::IfOk, i, l);
            }
            plain(Family::RuleBoundFail, i);
            plain(Family::RuleMiddleFail, i);
            plain(Family::CrossBackOk, i);
            plain(Family::CrossOk, i);
            plain(Family::CrossBack, i);
            plain(Family::Cross, i);
            for (uint32_t e = 0; e <= full_mask(); ++e) {
                with_e(Family::Ready, i, e);
                with_e(Family::ReadyNo, i, e);
            }
            for (int l = 1; l <= n_; ++l) {
                with_l(Family::IdCopy, i, l);
                with_l(Family::IdSelected, i, l);
            }
            for (int j = 1; j < i; ++j) {
                pair_ij(Family::CheckOk, i, j);
                pair_ij(Family::Collect, i, j);
            }
        }
        sig(FamilyTag{Family::ReadyU});
        sig(FamilyTag{Family::ReadyUu});
        for (uint32_t e = 0; e <= full_mask(); ++e) {
            with_e(Family::FastLeft, 0, e);
            with_e(Family::FastRight, 0, e);
        }
        if (!with_preparation_) return;

        for (int i = 1; i <= n_; ++i) {
            for (Family f : {Family::ShrinkBottomL, Family::ShrinkBottomBothL,
                             Family::ShrinkBottomR, Family::ShrinkBottomBothR,
                             Family::ShrinkTopL, Family::ShrinkTopTestL, Family::ShrinkTopR,
                             Family::ShrinkTopTestR, Family::ShrinkBackL, Family::ShrinkBackR,
                             Family::ShrinkId, Family::ShrinkRuleBound, Family::ShrinkRuleMiddle,
                             Family::ShrinkEchoL, Family::ShrinkEchoR, Family::ShrinkTestOk,
                             Family::ShrinkTestFail, Family::ShrinkOrder, Family::TestStart,
                             Family::ShrinkDelayedL, Family::ShrinkDelayedR})
                plain(f, i);
            for (int l = 1; l <= n_; ++l) {
                with_l(Family::ShrinkIf, i, l);
                with_l(Family::ShrinkThen, i, l);
            }
            for (int k = 1; k < i; ++k) with_k(Family::ShrinkTest, i, k);

            plain(Family::TestLeft, i);
            plain(Family::TestRightUp, i);
            plain(Family::TestRightInit, i);
            for (int k = 1; k < i; ++k) {
                for (int j = 1; j <= k; ++j) trip_ikj(Family::TestRight, i, k, j);
                for (int j = 1; j < k; ++j) trip_ikj(Family::TestRightWait, i, k, j);
                with_k(Family::TestLeftUp, i, k);
            }
            plain(Family::TestLeftOk, i);
            for (int j = 1; j < i; ++j) pair_ij(Family::TestRightOk, i, j);
            plain(Family::MainTestOk, i);
            plain(Family::TestLeftFail, i);
            plain(Family::TestRightFail, i);
            plain(Family::MainTestFailL, i);
            plain(Family::MainTestFailR, i);

            for (int j = 1; j < i; ++j) {
                pair_ij(Family::CheckMaybe, i, j);
                pair_ij(Family::Check, i, j);
                pair_ij(Family::CheckUp, i, j);
                pair_ij(Family::CheckFail, i, j);
            }
            for (int k = 1; k < i; ++k)
                for (int l = 1; l < k; ++l) trip_ikl(Family::CheckIntercept, i, k, l);
        }
    }

    void build_disposal_rules() {
        for (int i = 1; i <= n_; ++i) {
            for (int j = 1; j < i; ++j) {
                std::string chk = pair_ij(Family::CheckOk, i, j);
                std::string col = pair_ij(Family::Collect, i, j);
                rule({plain(Family::Id, i), chk}, {chk, plain(Family::CrossBackOk, i)});
                rule({plain(Family::BorderLeft, i), chk}, {plain(Family::BorderLeft, i), col});
                for (int k = j; k < i; ++k) {
                    rule({col, plain(Family::BorderLeft, k)}, {col});
                    rule({col, plain(Family::Id, k)}, {plain(Family::CrossOk, k), col});
                    rule({col, plain(Family::RuleBound, k)}, {col});
                    rule({col, plain(Family::RuleMiddle, k)}, {col});
                    for (int l = 1; l <= n_; ++l) {
                        rule({col, with_l(Family::If, k, l)}, {col});
                        rule({col, with_l(Family::Then, k, l)}, {col});
                    }
                }
                for (int k = j + 1; k < i; ++k)
                    rule({col, plain(Family::BorderRight, k)}, {col});
                rule({col, plain(Family::BorderRight, j)}, {with_e(Family::Ready, i, 0)});
            }
        }
    }

    void build_apply_rules() {
        for (int i = 1; i <= n_; ++i) {
            std::string cbo = plain(Family::CrossBackOk, i);
            std::string cb = plain(Family::CrossBack, i);
            rule({cbo, plain(Family::RuleMiddle, i)}, {plain(Family::RuleMiddle, i), cb});
            rule({cb, with_l(Family::If, i, i)}, {with_l(Family::IfOk, i, i), cbo});
            rule({cb, plain(Family::RuleBound, i)}, {cbo, plain(Family::RuleBoundFail, i)});
            rule({cb, plain(Family::RuleBoundFail, i)}, {cbo, plain(Family::RuleBoundFail, i)});
            rule({cbo, plain(Family::BorderRight, i)}, {plain(Family::BorderRight, i)});
            for (int k = 1; k < i; ++k) {
                std::string co = plain(Family::CrossOk, k);
                std::string cr = plain(Family::Cross, k);
                rule({plain(Family::RuleBound, i), co}, {cr, plain(Family::RuleBound, i)});
                rule({with_l(Family::If, i, k), cr}, {co, with_l(Family::IfOk, i, k)});
                rule({plain(Family::RuleMiddle, i), cr}, {co, plain(Family::RuleMiddleFail, i)});
                rule({plain(Family::RuleMiddleFail, i), cr},
                     {co, plain(Family::RuleMiddleFail, i)});
                rule({main(i), cr}, {main(i)});
            }
        }
    }

    void build_selection_rules() {
        for (int i = 1; i <= n_; ++i) {
            for (uint32_t e = 0; e <= full_mask(); ++e) {
                std::string rdy = with_e(Family::Ready, i, e);
                std::string no = with_e(Family::ReadyNo, i, e);
                rule({plain(Family::RuleBoundFail, i), rdy}, {no, plain(Family::RuleBoundFail, i)});
                rule({plain(Family::RuleMiddleFail, i), rdy},
                     {no, plain(Family::RuleMiddleFail, i)});
                for (int l = 1; l <= n_; ++l)
                    rule({with_l(Family::If, i, l), rdy}, {no, with_l(Family::If, i, l)});
                rule({plain(Family::RuleBound, i), no}, {rdy, plain(Family::RuleBound, i)});
                rule({main(i), rdy}, {main(i, e)});
                rule({main(i, e), sig(FamilyTag{Family::ReadyU})},
                     {sig(FamilyTag{Family::ReadyUu}), main(i, e)});
                for (int l = 1; l <= n_; ++l)
                    rule({with_l(Family::Then, i, l), rdy},
                         {with_e(Family::Ready, i, e | (1u << (l - 1))),
                          with_l(Family::IdCopy, i, l), with_l(Family::Then, i, l)});
            }
            rule({plain(Family::BorderRight, i), with_e(Family::Ready, i, 0)},
                 {with_e(Family::Ready, i, 0), sig(FamilyTag{Family::ReadyU}),
                  plain(Family::BorderRight, i)});
            rule({plain(Family::BorderLeft, i), sig(FamilyTag{Family::ReadyUu})},
                 {plain(Family::BorderLeft, i)});
            for (int l = 1; l <= n_; ++l)
                rule({with_l(Family::IdCopy, i, l), sig(FamilyTag{Family::ReadyUu})},
                     {sig(FamilyTag{Family::ReadyUu}), with_l(Family::IdSelected, i, l)});
        }
    }

    void build_output_rules() {
        for (uint32_t e = 0; e <= full_mask(); ++e) {
            std::string fl = with_e(Family::FastLeft, 0, e);
            std::string fr = with_e(Family::FastRight, 0, e);
            std::vector<int> outs;
            for (int l = 1; l <= n_; ++l)
                if (e & (1u << (l - 1))) outs.push_back(l);

            for (int i = 1; i <= n_; ++i) {
                // The collaborating main signals meet: every nonempty set of
                // strictly slower directions joins the marked main.
                for (uint32_t f = 1; f < (1u << (i - 1)); ++f) {
                    std::vector<std::string> in{main(i, e)};
                    for (int l = 1; l < i; ++l)
                        if (f & (1u << (l - 1))) in.push_back(main(l));
                    std::vector<std::string> out{fl, fr};
                    for (int l : outs) out.push_back(main(l));
                    rule(std::move(in), std::move(out));
                }

                {
                    std::vector<std::string> out;
                    for (int l : outs) out.push_back(plain(Family::BorderLeft, l));
                    rule({plain(Family::BorderLeft, i), fl}, std::move(out));
                }
                {
                    std::vector<std::string> out;
                    for (int l : outs) out.push_back(plain(Family::BorderRight, l));
                    rule({fr, plain(Family::BorderRight, i)}, std::move(out));
                }
                for (int l : outs)
                    rule({with_l(Family::IdSelected, i, l), fl}, {fl, plain(Family::Id, l)});

                auto copy_to_outputs = [&](const std::string& src, Family dst, int m) {
                    std::vector<std::string> out{fr};
                    for (int l : outs)
                        out.push_back(m == 0 ? plain(dst, l) : with_l(dst, l, m));
                    rule({fr, src}, std::move(out));
                };
                copy_to_outputs(plain(Family::RuleBound, i), Family::RuleBound, 0);
                copy_to_outputs(plain(Family::RuleBoundFail, i), Family::RuleBound, 0);
                copy_to_outputs(plain(Family::RuleMiddle, i), Family::RuleMiddle, 0);
                copy_to_outputs(plain(Family::RuleMiddleFail, i), Family::RuleMiddle, 0);
                for (int m = 1; m <= n_; ++m) {
                    copy_to_outputs(with_l(Family::If, i, m), Family::If, m);
                    copy_to_outputs(with_l(Family::IfOk, i, m), Family::If, m);
                    copy_to_outputs(with_l(Family::Then, i, m), Family::Then, m);
                }
            }
        }
    }

    void build_shrink_rules() {
        for (int i = 1; i <= n_; ++i) {
            std::string bl = plain(Family::BorderLeft, i);
            std::string br = plain(Family::BorderRight, i);
            std::string bbl = plain(Family::ShrinkBottomBothL, i);
            std::string bbr = plain(Family::ShrinkBottomBothR, i);
            std::string bot_l = plain(Family::ShrinkBottomL, i);
            std::string bot_r = plain(Family::ShrinkBottomR, i);
            std::string top_l = plain(Family::ShrinkTopL, i);
            std::string top_r = plain(Family::ShrinkTopR, i);
            std::string top_tl = plain(Family::ShrinkTopTestL, i);
            std::string top_tr = plain(Family::ShrinkTopTestR, i);
            std::string back_l = plain(Family::ShrinkBackL, i);
            std::string back_r = plain(Family::ShrinkBackR, i);

            // Detection: converging support zones touch.
            for (int k = 1; k < i; ++k)
                rule({br, plain(Family::BorderLeft, k)},
                     {bbr, top_tr, with_k(Family::ShrinkTest, i, k),
                      plain(Family::ShrinkTopTestL, k), plain(Family::ShrinkBottomBothL, k)});

            // Left half: ids shift inward and are restored at half distance.
            rule({bbl, plain(Family::Id, i)}, {plain(Family::ShrinkId, i), bbl});
            rule({bot_l, plain(Family::Id, i)}, {plain(Family::ShrinkId, i), bot_l});
            rule({plain(Family::ShrinkId, i), back_l}, {back_l, plain(Family::Id, i)});
            // Right half: the rule block shifts inward symmetrically.
            auto shiftable = [&](Family plain_f, Family shrunk_f, int l) {
                std::string a = l ? with_l(plain_f, i, l) : plain(plain_f, i);
                std::string b = l ? with_l(shrunk_f, i, l) : plain(shrunk_f, i);
                rule({a, bbr}, {b, bbr});
                rule({a, bot_r}, {b, bot_r});
                rule({b, back_r}, {a, back_r});
            };
            shiftable(Family::RuleBound, Family::ShrinkRuleBound, 0);
            shiftable(Family::RuleMiddle, Family::ShrinkRuleMiddle, 0);
            for (int l = 1; l <= n_; ++l) {
                shiftable(Family::If, Family::ShrinkIf, l);
                shiftable(Family::Then, Family::ShrinkThen, l);
            }

            // Turning legs of the gadget.
            rule({bbl, main(i)}, {back_l, main(i), bot_l});
            rule({main(i), bbr}, {bot_r, main(i), back_r});
            rule({bbl, main(i), bbr}, {back_l, main(i), back_r});
            rule({bot_l, main(i)}, {main(i), back_l});
            rule({main(i), bot_r}, {main(i), back_r});
            rule({bl, bot_r}, {top_l, bot_l});
            rule({bot_l, br}, {bot_r, top_r});
            rule({top_l, back_l}, {bl});
            rule({back_r, top_r}, {br});
            // Echo variants mark the new border and report the half-width.
            rule({top_tl, back_l}, {plain(Family::ShrinkEchoL, i), bl});
            rule({back_r, top_tr}, {br, plain(Family::ShrinkEchoR, i)});

            // Relative width test between the meeting macro-signals.
            for (int k = 1; k < i; ++k) {
                std::string mid = with_k(Family::ShrinkTest, i, k);
                rule({mid, plain(Family::ShrinkEchoL, k)}, {plain(Family::ShrinkTestOk, k)});
                rule({plain(Family::ShrinkEchoR, i), plain(Family::ShrinkTestOk, k)},
                     {plain(Family::TestStart, i)});
                rule({plain(Family::ShrinkEchoR, i), mid, plain(Family::ShrinkEchoL, k)},
                     {plain(Family::TestStart, i)});
                rule({plain(Family::ShrinkEchoR, i), mid}, {plain(Family::ShrinkTestFail, i)});
                rule({plain(Family::ShrinkTestFail, i), plain(Family::ShrinkEchoL, k)},
                     {plain(Family::ShrinkOrder, k)});
            }
            rule({plain(Family::ShrinkOrder, i), bl}, {bbl, top_l});

            // A shrink request reaching a half whose border is mid-gadget is
            // delayed until the new border exists, then re-triggered. The
            // delayed signal trails the converging replacement border and
            // catches the recreated one. No width test is attempted on these
            // attempts; the next border meeting restarts a full one.
            for (int k = 1; k < i; ++k) {
                rule({br, plain(Family::ShrinkTopL, k)},
                     {bbr, top_r, plain(Family::ShrinkDelayedL, k), plain(Family::ShrinkTopL, k)});
                rule({br, plain(Family::ShrinkTopTestL, k)},
                     {bbr, top_r, plain(Family::ShrinkDelayedL, k),
                      plain(Family::ShrinkTopTestL, k)});
            }
            for (int m = 1; m < i; ++m) {
                rule({top_r, plain(Family::BorderLeft, m)},
                     {plain(Family::ShrinkDelayedR, i), top_r, plain(Family::ShrinkBottomBothL, m),
                      plain(Family::ShrinkTopL, m)});
                rule({top_tr, plain(Family::BorderLeft, m)},
                     {plain(Family::ShrinkDelayedR, i), top_tr,
                      plain(Family::ShrinkBottomBothL, m), plain(Family::ShrinkTopL, m)});
            }
            rule({bot_l, top_r}, {plain(Family::ShrinkDelayedR, i), top_r});
            rule({bot_l, top_tr}, {plain(Family::ShrinkDelayedR, i), top_tr});
            rule({bot_r, top_l}, {plain(Family::ShrinkDelayedL, i), top_l});
            rule({bot_r, top_tl}, {plain(Family::ShrinkDelayedL, i), top_tl});
            rule({plain(Family::ShrinkDelayedL, i), bl}, {bbl, top_l});
            rule({plain(Family::ShrinkDelayedR, i), br}, {bbr, top_r});
        }
    }

    void build_test_rules() {
        for (int i = 1; i <= n_; ++i) {
            std::string tl = plain(Family::TestLeft, i);
            std::string tru = plain(Family::TestRightUp, i);
            rule({main(i), plain(Family::TestStart, i)},
                 {tl, main(i), tru, plain(Family::TestRightInit, i)});
            for (int k = 1; k < i; ++k) {
                rule({plain(Family::TestRightInit, i), main(k)},
                     {with_k(Family::TestLeftUp, i, k), main(k),
                      trip_ikj(Family::TestRight, i, k, k)});
                rule({tl, with_k(Family::TestLeftUp, i, k)}, {plain(Family::TestLeftOk, i)});
                for (int j = 1; j <= k; ++j) {
                    std::string probe = trip_ikj(Family::TestRight, i, k, j);
                    for (int l = 1; l < j; ++l)
                        rule({probe, plain(Family::BorderLeft, l)},
                             {plain(Family::ShrinkTopL, l), trip_ikj(Family::TestRightWait, i, k, l),
                              plain(Family::ShrinkBottomBothL, l)});
                    for (int l = j; l <= n_; ++l) {
                        rule({probe, plain(Family::BorderLeft, l)},
                             {plain(Family::TestRightFail, i), plain(Family::BorderLeft, l)});
                        rule({probe, plain(Family::ShrinkTopL, l)},
                             {plain(Family::TestRightFail, i), plain(Family::ShrinkTopL, l)});
                    }
                    rule({tru, probe}, {pair_ij(Family::TestRightOk, i, j)});
                }
                for (int j = 1; j < k; ++j) {
                    std::string wait = trip_ikj(Family::TestRightWait, i, k, j);
                    rule({wait, main(j)}, {main(j), trip_ikj(Family::TestRight, i, k, j)});
                    rule({tru, wait}, {plain(Family::TestRightFail, i)});
                    rule({tru, wait, main(j)}, {pair_ij(Family::TestRightOk, i, j), main(j)});
                }
            }
            rule({plain(Family::TestLeftOk, i), main(i)}, {plain(Family::MainTestOk, i)});
            for (int j = 1; j < i; ++j)
                rule({plain(Family::MainTestOk, i), pair_ij(Family::TestRightOk, i, j)},
                     {main(i), pair_ij(Family::CheckUp, i, j), pair_ij(Family::CheckMaybe, i, j)});

            // Failure on the left: anything met there aborts the attempt.
            for (int l = 1; l <= n_; ++l) {
                rule({plain(Family::BorderRight, l), tl},
                     {plain(Family::BorderRight, l), plain(Family::TestLeftFail, i)});
                rule({plain(Family::ShrinkTopR, l), tl},
                     {plain(Family::ShrinkTopR, l), plain(Family::TestLeftFail, i)});
                rule({main(l), tl}, {main(l), plain(Family::TestLeftFail, i)});
                for (uint32_t e = 0; e <= full_mask(); ++e)
                    rule({with_e(Family::Ready, l, e), tl},
                         {with_e(Family::Ready, l, e), plain(Family::TestLeftFail, i)});
            }
            for (int k = 1; k < i; ++k) {
                rule({plain(Family::TestLeftFail, i), with_k(Family::TestLeftUp, i, k)},
                     {plain(Family::TestLeftFail, i)});
                rule({plain(Family::MainTestFailL, i), with_k(Family::TestLeftUp, i, k)},
                     {plain(Family::MainTestFailL, i)});
            }
            rule({plain(Family::TestLeftFail, i), main(i)}, {plain(Family::MainTestFailL, i)});
            for (int j = 1; j < i; ++j)
                rule({plain(Family::MainTestFailL, i), pair_ij(Family::TestRightOk, i, j)},
                     {main(i)});
            // Failure on the right.
            rule({plain(Family::TestRightFail, i), tru}, {plain(Family::TestRightFail, i)});
            rule({main(i), plain(Family::TestRightFail, i)}, {plain(Family::MainTestFailR, i)});
            rule({plain(Family::TestLeftOk, i), plain(Family::MainTestFailR, i)}, {main(i)});
            rule({plain(Family::MainTestOk, i), plain(Family::TestRightFail, i)}, {main(i)});
            rule({plain(Family::TestLeftFail, i), plain(Family::MainTestFailR, i)}, {main(i)});
            rule({plain(Family::MainTestFailL, i), plain(Family::TestRightFail, i)}, {main(i)});
        }
    }

    void build_check_rules() {
        for (int i = 1; i <= n_; ++i) {
            for (int j = 1; j < i; ++j) {
                std::string maybe = pair_ij(Family::CheckMaybe, i, j);
                std::string chk = pair_ij(Family::Check, i, j);
                std::string up = pair_ij(Family::CheckUp, i, j);
                std::string fail = pair_ij(Family::CheckFail, i, j);
                rule({maybe, main(j)}, {main(j)});
                rule({up, main(j)}, {pair_ij(Family::CheckOk, i, j), main(j)});
                for (int k = j + 1; k < i; ++k) {
                    rule({maybe, main(k)}, {main(k), chk});
                    {
                        std::vector<std::string> out{main(k)};
                        for (int l = j; l < k; ++l)
                            out.push_back(trip_ikl(Family::CheckIntercept, i, k, l));
                        rule({up, main(k)}, std::move(out));
                    }
                    for (int l = j + 1; l < k; ++l) {
                        rule({trip_ikl(Family::CheckIntercept, i, k, l), chk}, {chk});
                        rule({trip_ikl(Family::CheckIntercept, i, k, l), chk, main(l)},
                             {main(l), chk});
                        rule({fail, trip_ikl(Family::CheckIntercept, i, k, l)}, {fail});
                    }
                    rule({chk, trip_ikl(Family::CheckIntercept, i, k, j)}, {fail});
                    rule({trip_ikl(Family::CheckIntercept, i, k, j), chk, main(j)},
                         {pair_ij(Family::CheckOk, i, j), main(j)});
                    rule({fail, trip_ikl(Family::CheckIntercept, i, k, j)}, {});
                    for (int l = j; l < k; ++l)
                        for (int m = j; m < k; ++m) {
                            if (m == l) continue;
                            rule({chk, main(l), trip_ikl(Family::CheckIntercept, i, k, m)},
                                 {main(l), fail});
                        }
                }
                for (int l = j + 1; l < i; ++l) rule({chk, main(l)}, {fail, main(l)});
            }
        }
    }

    SpeedSet set_;
    UniversalParams params_;
    int n_;
    bool with_preparation_;
    SignalMachine machine_;
    std::map<std::string, FamilyTag> tags_;
    std::set<std::vector<std::string>> seen_incomings_;
};

}  // namespace

UniversalMachine generate_universal(const SpeedSet& s) { return Builder(s, true).build(); }
UniversalMachine generate_checked(const SpeedSet& s) { return Builder(s, false).build(); }

std::string write_tags_json(const UniversalMachine& u) {
    nlohmann::json j;
    j["speed_set"] = nlohmann::json::array();
    for (const Rat& s : u.speed_set.speeds()) j["speed_set"].push_back(s.str_pq());
    nlohmann::json sigs;
    for (const auto& [name, tag] : u.tags) {
        nlohmann::json t;
        t["family"] = family_name(tag.family);
        if (tag.i) t["i"] = tag.i;
        if (tag.j) t["j"] = tag.j;
        if (tag.k) t["k"] = tag.k;
        if (tag.l) t["l"] = tag.l;
        if (tag.has_e) t["E"] = tag.e_elems();
        sigs[name] = std::move(t);
    }
    j["signals"] = std::move(sigs);
    return j.dump(2) + "\n";
}

UniversalMachine read_tags_json(const std::string& json_text,
                                std::shared_ptr<const SignalMachine> machine) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    std::vector<Rat> speeds;
    for (const auto& s : j.at("speed_set")) {
        auto r = Rat::parse(s.get<std::string>());
        if (!r) throw Error(ErrorKind::SyntaxError, "bad speed in tags file");
        speeds.push_back(*r);
    }
    SpeedSet set(speeds);
    UniversalParams params(set);

    std::map<std::string, Family> by_name;
    for (int f = 0; f <= static_cast<int>(Family::CheckFail); ++f)
        by_name[family_name(static_cast<Family>(f))] = static_cast<Family>(f);

    std::map<std::string, FamilyTag> tags;
    for (const auto& [name, t] : j.at("signals").items()) {
        FamilyTag tag{by_name.at(t.at("family").get<std::string>())};
        tag.i = t.value("i", 0);
        tag.j = t.value("j", 0);
        tag.k = t.value("k", 0);
        tag.l = t.value("l", 0);
        if (t.contains("E")) {
            tag.has_e = true;
            for (int l : t.at("E").get<std::vector<int>>()) tag.e_mask |= 1u << (l - 1);
        }
        tags.emplace(name, tag);
    }
    return UniversalMachine{std::move(machine), std::move(tags), params, set};
}

}  // namespace sm
