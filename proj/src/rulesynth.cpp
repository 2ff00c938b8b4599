#include "sm/rulesynth.hpp"

#include <algorithm>
#include <set>

namespace sm {
namespace {

bool is_subset(const std::vector<std::string>& small, const std::vector<std::string>& big) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

std::vector<std::string> set_minus(const std::vector<std::string>& a,
                                   const std::vector<std::string>& b) {
    std::vector<std::string> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<std::string> set_union(const std::vector<std::string>& a,
                                   const std::vector<std::string>& b) {
    std::vector<std::string> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

bool RuleSynth::speeds_distinct(const std::vector<std::string>& names) const {
    std::set<Rat> speeds;
    for (const auto& n : names)
        if (!speeds.insert(machine_.speed_of(n)).second) return false;
    return true;
}

const RuleLookupResult& RuleSynth::lookup(std::vector<std::string> incoming) const {
    incoming = CollisionRule::canon(std::move(incoming));
    auto it = memo_.find(incoming);
    if (it != memo_.end()) return it->second;
    RuleLookupResult res = resolve(incoming);
    return memo_.emplace(std::move(incoming), std::move(res)).first->second;
}

RuleLookupResult RuleSynth::resolve(const std::vector<std::string>& s) const {
    // Explicit match wins.
    if (const CollisionRule* r = machine_.find_rule(s))
        return {RuleOrigin::Explicit, *r};

    // Unlisted pairs are blank: the signals cross.
    if (s.size() == 2)
        return {RuleOrigin::Blank, CollisionRule{s, s}};

    // A unique explicit rule strictly inside s: the extra signals ride along.
    std::vector<const CollisionRule*> subs;
    for (const auto& r : machine_.rules)
        if (r.incoming.size() < s.size() && is_subset(r.incoming, s)) subs.push_back(&r);
    if (subs.size() == 1) {
        CollisionRule out{s, set_union(subs[0]->outgoing, set_minus(s, subs[0]->incoming))};
        if (!speeds_distinct(out.outgoing)) return {RuleOrigin::Undefined, std::nullopt};
        return {RuleOrigin::Superposed, out};
    }

    // Families of explicit rules whose incoming sets cover s exactly: if every
    // such cover yields one and the same outgoing union, use it.
    std::vector<const CollisionRule*> candidates;
    for (const auto& r : machine_.rules)
        if (is_subset(r.incoming, s)) candidates.push_back(&r);
    std::optional<std::vector<std::string>> common;
    bool any_cover = false;
    bool consistent = true;
    const size_t k = candidates.size();
    if (k > 0 && k <= 20) {
        for (uint32_t mask = 1; mask < (1u << k) && consistent; ++mask) {
            std::vector<std::string> in_union, out_union;
            for (size_t b = 0; b < k; ++b) {
                if (!(mask & (1u << b))) continue;
                in_union = set_union(in_union, candidates[b]->incoming);
                out_union = set_union(out_union, candidates[b]->outgoing);
            }
            if (in_union != s) continue;
            any_cover = true;
            if (!common)
                common = out_union;
            else if (*common != out_union)
                consistent = false;
        }
    }
    if (any_cover && consistent) {
        CollisionRule out{s, *common};
        if (!speeds_distinct(out.outgoing)) return {RuleOrigin::Undefined, std::nullopt};
        return {RuleOrigin::UnionConsistent, out};
    }

    return {RuleOrigin::Undefined, std::nullopt};
}

}  // namespace sm
