#pragma once

#include "sm/errors.hpp"
#include "sm/rational.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace sm {

/// A signal type. Signals of the same meta-signal move at the same speed and
/// draw parallel segments in a space-time diagram.
struct MetaSignal {
    std::string name;
    Rat speed;
};

/// Deterministic replacement of coinciding signals. Incoming has at least two
/// members; speeds are pairwise distinct on both sides. Outgoing may be empty
/// (annihilation).
struct CollisionRule {
    std::vector<std::string> incoming;  // sorted by name
    std::vector<std::string> outgoing;  // sorted by name

    static std::vector<std::string> canon(std::vector<std::string> names) {
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        return names;
    }

    friend bool operator==(const CollisionRule& a, const CollisionRule& b) {
        return a.incoming == b.incoming && a.outgoing == b.outgoing;
    }
    friend bool operator<(const CollisionRule& a, const CollisionRule& b) {
        if (a.incoming != b.incoming) return a.incoming < b.incoming;
        return a.outgoing < b.outgoing;
    }
};

/// The machine triple: meta-signals, their speeds, explicit collision rules.
class SignalMachine {
  public:
    std::string name = "machine";
    std::vector<MetaSignal> signals;
    std::vector<CollisionRule> rules;

    void rebuild_index() {
        speed_by_name_.clear();
        for (const auto& s : signals) speed_by_name_.emplace(s.name, s.speed);
        rule_by_incoming_.clear();
        for (size_t r = 0; r < rules.size(); ++r) rule_by_incoming_.emplace(rules[r].incoming, r);
    }

    bool has_signal(const std::string& n) const { return speed_by_name_.count(n) > 0; }

    const Rat& speed_of(const std::string& n) const {
        auto it = speed_by_name_.find(n);
        if (it == speed_by_name_.end())
            throw Error(ErrorKind::UndeclaredSignal, "meta-signal '" + n + "' not declared");
        return it->second;
    }

    const CollisionRule* find_rule(const std::vector<std::string>& sorted_incoming) const {
        auto it = rule_by_incoming_.find(sorted_incoming);
        return it == rule_by_incoming_.end() ? nullptr : &rules[it->second];
    }

    std::optional<size_t> rule_index(const std::vector<std::string>& sorted_incoming) const {
        auto it = rule_by_incoming_.find(sorted_incoming);
        if (it == rule_by_incoming_.end()) return std::nullopt;
        return it->second;
    }

    /// Enforces the structural invariants: unique names, declared references,
    /// |incoming| >= 2, pairwise distinct speeds on both rule sides, and rule
    /// determinism. Throws ValidationError.
    void validate() const {
        std::set<std::string> seen;
        for (const auto& s : signals) {
            if (!seen.insert(s.name).second)
                throw Error(ErrorKind::ValidationError, "duplicate meta-signal '" + s.name + "'");
        }
        std::set<std::vector<std::string>> incomings;
        for (const auto& r : rules) {
            if (r.incoming.size() < 2)
                throw Error(ErrorKind::ValidationError,
                            "rule needs at least two incoming meta-signals");
            check_side(r.incoming, "incoming");
            check_side(r.outgoing, "outgoing");
            if (!incomings.insert(r.incoming).second)
                throw Error(ErrorKind::ValidationError,
                            "two rules share the incoming set {" + join(r.incoming) + "}");
        }
    }

    static std::string join(const std::vector<std::string>& names) {
        std::string out;
        for (size_t i = 0; i < names.size(); ++i) {
            if (i) out += ",";
            out += names[i];
        }
        return out;
    }

  private:
    void check_side(const std::vector<std::string>& side, const char* what) const {
        std::set<Rat> speeds;
        std::set<std::string> names;
        for (const auto& n : side) {
            auto it = speed_by_name_.find(n);
            if (it == speed_by_name_.end())
                throw Error(ErrorKind::ValidationError,
                            std::string(what) + " references undeclared '" + n + "'");
            if (!names.insert(n).second)
                throw Error(ErrorKind::ValidationError,
                            std::string(what) + " lists '" + n + "' twice");
            if (!speeds.insert(it->second).second)
                throw Error(ErrorKind::ValidationError,
                            std::string(what) + " of {" + join(side) + "} has a speed clash at '" +
                                n + "'");
        }
    }

    std::map<std::string, Rat> speed_by_name_;
    std::map<std::vector<std::string>, size_t> rule_by_incoming_;
};

/// V = M ∪ R ∪ {void}. Void is represented by absence in a Configuration, so
/// only the two live alternatives are stored.
struct ExtendedValue {
    // monostate = void (kept for lookup results), string = signal name.
    std::variant<std::monostate, std::string, CollisionRule> v;

    static ExtendedValue void_value() { return ExtendedValue{}; }
    static ExtendedValue signal(std::string name) { return ExtendedValue{std::move(name)}; }
    static ExtendedValue collision(CollisionRule r) { return ExtendedValue{std::move(r)}; }

    bool is_void() const { return std::holds_alternative<std::monostate>(v); }
    bool is_signal() const { return std::holds_alternative<std::string>(v); }
    bool is_collision() const { return std::holds_alternative<CollisionRule>(v); }
    const std::string& signal_name() const { return std::get<std::string>(v); }
    const CollisionRule& rule() const { return std::get<CollisionRule>(v); }

    friend bool operator==(const ExtendedValue& a, const ExtendedValue& b) { return a.v == b.v; }
    friend bool operator!=(const ExtendedValue& a, const ExtendedValue& b) { return !(a == b); }
};

/// Finite map position -> non-void value; everything else is void. Positions
/// are strictly increasing, one value per position.
class Configuration {
  public:
    struct Entry {
        Rat pos;
        ExtendedValue value;
    };

    Configuration() = default;

    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    size_t size() const { return entries_.size(); }

    /// Inserts a non-void value. A position may hold only one value.
    void put(const Rat& pos, ExtendedValue value) {
        if (value.is_void())
            throw Error(ErrorKind::ValidationError, "cannot place a void value");
        auto it = lower_bound(pos);
        if (it != entries_.end() && it->pos == pos)
            throw Error(ErrorKind::ValidationError,
                        "two values at position " + pos.str() +
                            " (a configuration is a function)");
        entries_.insert(it, Entry{pos, std::move(value)});
    }

    ExtendedValue at(const Rat& pos) const {
        auto it = lower_bound(pos);
        if (it != entries_.end() && it->pos == pos) return it->value;
        return ExtendedValue::void_value();
    }

    /// Index of the entry at `pos`, or npos.
    static constexpr size_t npos = static_cast<size_t>(-1);
    size_t index_of(const Rat& pos) const {
        auto it = lower_bound(pos);
        if (it != entries_.end() && it->pos == pos)
            return static_cast<size_t>(it - entries_.begin());
        return npos;
    }

    /// Every entry must reference declared meta-signals / well-formed rules;
    /// signals and rules must be known to `m`.
    void validate_for(const SignalMachine& m) const {
        for (const auto& e : entries_) {
            if (e.value.is_signal()) {
                m.speed_of(e.value.signal_name());
            } else if (e.value.is_collision()) {
                const auto& r = e.value.rule();
                if (r.incoming.size() < 2)
                    throw Error(ErrorKind::ValidationError,
                                "collision value needs at least two incoming signals");
                std::set<Rat> in_speeds, out_speeds;
                for (const auto& n : r.incoming)
                    if (!in_speeds.insert(m.speed_of(n)).second)
                        throw Error(ErrorKind::ValidationError,
                                    "collision value incoming speed clash at '" + n + "'");
                for (const auto& n : r.outgoing)
                    if (!out_speeds.insert(m.speed_of(n)).second)
                        throw Error(ErrorKind::ValidationError,
                                    "collision value outgoing speed clash at '" + n + "'");
            }
        }
    }

    friend bool operator==(const Configuration& a, const Configuration& b) {
        if (a.entries_.size() != b.entries_.size()) return false;
        for (size_t i = 0; i < a.entries_.size(); ++i) {
            if (a.entries_[i].pos != b.entries_[i].pos) return false;
            if (a.entries_[i].value != b.entries_[i].value) return false;
        }
        return true;
    }
    friend bool operator!=(const Configuration& a, const Configuration& b) { return !(a == b); }

  private:
    std::vector<Entry>::const_iterator lower_bound(const Rat& pos) const {
        return std::lower_bound(entries_.begin(), entries_.end(), pos,
                                [](const Entry& e, const Rat& p) { return e.pos < p; });
    }
    std::vector<Entry>::iterator lower_bound(const Rat& pos) {
        return std::lower_bound(entries_.begin(), entries_.end(), pos,
                                [](const Entry& e, const Rat& p) { return e.pos < p; });
    }

    std::vector<Entry> entries_;
};

}  // namespace sm
