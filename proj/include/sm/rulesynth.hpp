#pragma once

#include "sm/machine.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sm {

/// Which convention produced the resolved rule for an incoming set that has no
/// explicit entry: blank pass-through, superposition on a unique explicit
/// sub-rule, a consistent union of covering rules, or nothing at all.
enum class RuleOrigin { Explicit, Blank, Superposed, UnionConsistent, Undefined };

struct RuleLookupResult {
    RuleOrigin origin = RuleOrigin::Undefined;
    std::optional<CollisionRule> rule;  // absent iff Undefined

    bool defined() const { return rule.has_value(); }
};

/// Resolves the collision rule for an arbitrary incoming set, materializing
/// the implicit-rule conventions lazily. Lookups are memoized per incoming
/// set; the synthesizer holds a reference to the machine and must not outlive
/// it.
class RuleSynth {
  public:
    explicit RuleSynth(const SignalMachine& machine) : machine_(machine) {}

    /// `incoming` is canonicalized internally. Undefined is a value, not an
    /// error; callers decide severity.
    const RuleLookupResult& lookup(std::vector<std::string> incoming) const;

  private:
    RuleLookupResult resolve(const std::vector<std::string>& incoming) const;
    bool speeds_distinct(const std::vector<std::string>& names) const;

    const SignalMachine& machine_;
    mutable std::map<std::vector<std::string>, RuleLookupResult> memo_;
};

}  // namespace sm
