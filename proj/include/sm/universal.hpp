#pragma once

#include "sm/machine.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace sm {

/// Strictly increasing finite set of speeds; indices are 1-based throughout,
/// matching the construction's "speed index" convention.
class SpeedSet {
  public:
    explicit SpeedSet(std::vector<Rat> speeds);

    int n() const { return static_cast<int>(speeds_.size()); }
    const Rat& at(int i) const { return speeds_.at(static_cast<size_t>(i - 1)); }  // 1-based
    const std::vector<Rat>& speeds() const { return speeds_; }

    /// Index of a speed in the set, or 0 if absent.
    int index_of(const Rat& s) const;

  private:
    std::vector<Rat> speeds_;
};

enum class Family {
    BorderLeft, BorderRight, Id, Main,
    RuleBound, RuleMiddle, Then, If, IfOk, RuleBoundFail, RuleMiddleFail,
    CheckOk, Collect, CrossBackOk, CrossOk, CrossBack, Cross,
    Ready, ReadyNo, ReadyU, ReadyUu, IdCopy, IdSelected, FastLeft, FastRight,
    ShrinkBottomL, ShrinkBottomBothL, ShrinkBottomR, ShrinkBottomBothR,
    ShrinkTopL, ShrinkTopTestL, ShrinkTopR, ShrinkTopTestR,
    ShrinkBackL, ShrinkBackR, ShrinkId, ShrinkRuleBound, ShrinkRuleMiddle,
    ShrinkIf, ShrinkThen, ShrinkEchoL, ShrinkEchoR, ShrinkTest, ShrinkTestOk,
    ShrinkTestFail, ShrinkOrder, TestStart, ShrinkDelayedL, ShrinkDelayedR,
    TestLeft, TestRightUp, TestRightInit, TestRight, TestRightWait, TestLeftUp,
    TestLeftOk, TestRightOk, MainTestOk, TestLeftFail, TestRightFail,
    MainTestFailL, MainTestFailR,
    CheckMaybe, Check, CheckUp, CheckIntercept, CheckFail,
};

const char* family_name(Family f);

/// Family plus its index parameters. `e_mask` holds the subset E as a bitmask
/// (bit l-1 set means index l is in E); meaningful only when has_e.
struct FamilyTag {
    Family family;
    int i = 0;
    int j = 0;
    int k = 0;
    int l = 0;
    bool has_e = false;
    uint32_t e_mask = 0;

    std::vector<int> e_elems() const {
        std::vector<int> out;
        for (int b = 0; b < 31; ++b)
            if (e_mask & (1u << b)) out.push_back(b + 1);
        return out;
    }
};

/// Derived constants of the construction for one speed set: the fast control
/// speed, shrink speeds, safety-zone anchors and every probe speed, all exact.
class UniversalParams {
  public:
    explicit UniversalParams(SpeedSet s);

    const SpeedSet& speed_set() const { return s_; }
    int n() const { return s_.n(); }
    const Rat& s(int i) const { return s_.at(i); }

    const Rat& nu_max() const { return nu_max_; }
    const Rat& nu_rapid() const { return nu_rapid_; }
    const Rat& nu_shrink() const { return nu_shrink_; }
    const Rat& epsilon() const { return epsilon_; }
    const Rat& coef_check() const { return coef_check_; }

    // Output separation geometry (frame: simulated collision at the origin,
    // left macro-signal width bounded by 4*nu_max).
    const Rat& x_out_left() const { return x_out_left_; }
    const Rat& t_out_left() const { return t_out_left_; }
    const Rat& x_out_right() const { return x_out_right_; }
    Rat corner_x(int m) const;  // 1 <= m < n
    Rat corner_t(int m) const;
    const Rat& t_top() const { return t_top_; }

    // Safety-zone anchors on the line t = epsilon - 1.
    const Rat& x_left() const { return x_left_; }
    const Rat& x_right() const { return x_right_; }
    Rat t_side() const { return epsilon_ - Rat(1); }

    // Probe speeds of the isolation test.
    Rat v_test_left(int i) const;
    Rat v_test_right_up(int i) const;
    Rat v_test_right_init(int i) const;
    Rat t_meet(int i, int k) const;  // test_right meets main_k, normalized frame
    Rat x_meet(int i, int k) const;
    Rat v_test_right(int i, int k) const;
    Rat v_test_left_up(int i, int k) const;
    Rat v_test_back_left(int i) const;
    Rat v_test_back_right(int i) const;

    // Participant-check speeds.
    Rat v_check_up(int i) const;
    Rat t_check_cross(int i, int k) const;      // fast check crosses main_k
    Rat t_check_branch(int i, int k) const;     // check_up crosses main_k
    Rat v_check_intercept(int i, int k, int l) const;

  private:
    SpeedSet s_;
    Rat nu_max_, nu_rapid_, nu_shrink_, epsilon_, coef_check_;
    Rat x_out_left_, t_out_left_, x_out_right_;
    Rat t_top_, x_left_, x_right_;
    std::vector<Rat> check_up_;  // per i, 1-based
};

/// Line through (-alpha, -1) and the origin has slope alpha; line of slope s
/// from (-alpha, -1) meets the line of slope beta through the origin at the
/// returned point.
std::pair<Rat, Rat> intersection_point(const Rat& alpha, const Rat& beta, const Rat& s);

struct SafetyZone {
    std::pair<Rat, Rat> bot, left, right, top;  // (x, t) each
};

/// Transports the normalized safety-zone corners to absolute coordinates.
/// `bot` must lie strictly earlier than `sim_collision` on a participant
/// trajectory.
SafetyZone safety_zone(const UniversalParams& p, std::pair<Rat, Rat> bot,
                       std::pair<Rat, Rat> sim_collision);

/// The generated simulator machine for one speed set, with every meta-signal
/// tagged by family and parameters.
struct UniversalMachine {
    std::shared_ptr<const SignalMachine> machine;
    std::map<std::string, FamilyTag> tags;
    UniversalParams params;
    SpeedSet speed_set;

    const FamilyTag& tag_of(const std::string& name) const;
    bool is_family(const std::string& name, Family f) const;

    /// Canonical meta-signal names.
    static std::string e_suffix(uint32_t e_mask);
    static std::string name_of(const FamilyTag& tag);
};

/// Speed each family instance must have; the generator and the audit tests
/// both call this.
Rat family_speed(const UniversalParams& p, const FamilyTag& tag);

/// Full generator: every family over all legal index tuples, every rule row,
/// the detection rule and the delayed-shrink handling.
UniversalMachine generate_universal(const SpeedSet& s);

/// The resolution-only sub-machine (encoding, disposal, id application, rule
/// selection, output) with no detection/shrink/test/check rules. Borders of
/// distinct macro-signals cross blankly under it; used to bootstrap the
/// representation of collisions.
UniversalMachine generate_checked(const SpeedSet& s);

/// Sidecar tag map (JSON): meta-signal name -> family tag, plus the speed set.
std::string write_tags_json(const UniversalMachine& u);
UniversalMachine read_tags_json(const std::string& json_text,
                                std::shared_ptr<const SignalMachine> machine);

}  // namespace sm
