#include "sm/codec.hpp"

#include "sm/errors.hpp"

#include <algorithm>
#include <set>

namespace sm {

namespace {

bool is_block_family(Family f) {
    switch (f) {
        case Family::RuleBound:
        case Family::RuleBoundFail:
        case Family::RuleMiddle:
        case Family::RuleMiddleFail:
        case Family::If:
        case Family::IfOk:
        case Family::Then:
        case Family::ShrinkRuleBound:
        case Family::ShrinkRuleMiddle:
        case Family::ShrinkIf:
        case Family::ShrinkThen: return true;
        default: return false;
    }
}

bool is_bound(Family f) { return f == Family::RuleBound || f == Family::RuleBoundFail ||
                                 f == Family::ShrinkRuleBound; }

bool is_main_like(Family f) {
    return f == Family::Main || f == Family::MainTestOk || f == Family::MainTestFailL ||
           f == Family::MainTestFailR;
}

}  // namespace

/// Flattened bounded neighborhood of one position. Collision values are
/// expanded into their incoming signals ordered by decreasing speed, which is
/// their spatial order just before the collision; `micro` keeps that order so
/// exact comparisons against coinciding signals behave like the configuration
/// an instant earlier.
struct Codec::Window {
    struct Item {
        Rat pos;
        int micro;
        const FamilyTag* tag;
        long outer;  // entry offset from the center entry (negative = left)
    };

    std::vector<Item> left;   // ordered from the center outward
    std::vector<Item> right;  // ordered from the center outward
    Rat center_pos;
    mutable long used_left = 0;
    mutable long used_right = 0;

    static bool before(const Item& a, const Item& b) {
        if (a.pos != b.pos) return a.pos < b.pos;
        return a.micro < b.micro;
    }

    const Item& touch(const Item& it) const {
        if (it.outer < 0)
            used_left = std::max(used_left, -it.outer);
        else
            used_right = std::max(used_right, it.outer);
        return it;
    }
};

Codec::Codec(std::shared_ptr<const SignalMachine> simulated,
             std::shared_ptr<const UniversalMachine> universal)
    : simulated_(std::move(simulated)), universal_(std::move(universal)) {
    const SpeedSet& S = universal_->speed_set;
    const int n = S.n();
    by_dir_.assign(static_cast<size_t>(n) + 1, {});
    for (const auto& sig : simulated_->signals) {
        int dir = S.index_of(sig.speed);
        if (dir == 0)
            throw Error(ErrorKind::SpeedNotInSet,
                        "speed " + sig.speed.str() + " of '" + sig.name +
                            "' is outside the simulator's speed set");
        auto& bucket = by_dir_[static_cast<size_t>(dir)];
        bucket.push_back(sig.name);
        numbering_[sig.name] = {dir, static_cast<int>(bucket.size())};
    }

    // Rule-block layout: one segment per declared rule, in declaration order,
    // plus the maximal-id segment when no declared rule already carries the
    // maximal incoming set.
    auto counts_of = [&](const std::vector<std::string>& names) {
        std::vector<int> counts(static_cast<size_t>(n) + 1, 0);
        for (const auto& s : names) {
            auto [dir, id] = numbering_.at(s);
            counts[static_cast<size_t>(dir)] = id;
        }
        return counts;
    };
    std::vector<int> max_counts(static_cast<size_t>(n) + 1, 0);
    for (int dir = 1; dir <= n; ++dir)
        max_counts[static_cast<size_t>(dir)] = max_id(dir);
    std::optional<size_t> max_seg;
    for (size_t r = 0; r < simulated_->rules.size(); ++r) {
        RuleSegment seg;
        seg.if_counts = counts_of(simulated_->rules[r].incoming);
        seg.then_counts = counts_of(simulated_->rules[r].outgoing);
        seg.rule = r;
        if (seg.if_counts == max_counts) max_seg = segments_.size();
        segments_.push_back(std::move(seg));
    }
    if (!max_seg) {
        RuleSegment seg;
        seg.if_counts = max_counts;
        seg.then_counts.assign(static_cast<size_t>(n) + 1, 0);
        max_seg = segments_.size();
        segments_.push_back(std::move(seg));
    }
    max_segment_ = *max_seg;

    size_t block = 0;
    for (const auto& seg : segments_) {
        block += 2;  // the two bounds
        block += 1;  // the middle
        for (int dir = 1; dir <= n; ++dir)
            block += static_cast<size_t>(seg.then_counts[static_cast<size_t>(dir)] +
                                         seg.if_counts[static_cast<size_t>(dir)]);
    }
    int max_k = 0;
    for (int dir = 1; dir <= n; ++dir) max_k = std::max(max_k, max_id(dir));
    m_r_ = 3 + static_cast<size_t>(max_k) + block;
}

int Codec::speed_index(const std::string& name) const {
    auto it = numbering_.find(name);
    if (it == numbering_.end())
        throw Error(ErrorKind::UndeclaredSignal, "'" + name + "' is not a simulated meta-signal");
    return it->second.first;
}

int Codec::id_of(const std::string& name) const {
    auto it = numbering_.find(name);
    if (it == numbering_.end())
        throw Error(ErrorKind::UndeclaredSignal, "'" + name + "' is not a simulated meta-signal");
    return it->second.second;
}

const std::string& Codec::signal_at(int dir, int id) const {
    const auto& bucket = by_dir_.at(static_cast<size_t>(dir));
    if (id < 1 || static_cast<size_t>(id) > bucket.size())
        throw Error(ErrorKind::DecodeFailure,
                    "no meta-signal with id " + std::to_string(id) + " at speed index " +
                        std::to_string(dir));
    return bucket[static_cast<size_t>(id - 1)];
}

int Codec::max_id(int dir) const {
    return static_cast<int>(by_dir_.at(static_cast<size_t>(dir)).size());
}

std::vector<std::string> Codec::block_signals(int dir) const {
    std::vector<std::string> out;
    const int n = universal_->speed_set.n();
    auto name = [&](Family f, int l = 0) {
        FamilyTag t{f, dir};
        t.l = l;
        return UniversalMachine::name_of(t);
    };
    for (const auto& seg : segments_) {
        out.push_back(name(Family::RuleBound));
        for (int l = 1; l <= n; ++l)
            for (int c = 0; c < seg.then_counts[static_cast<size_t>(l)]; ++c)
                out.push_back(name(Family::Then, l));
        out.push_back(name(Family::RuleMiddle));
        for (int l = 1; l <= n; ++l)
            for (int c = 0; c < seg.if_counts[static_cast<size_t>(l)]; ++c)
                out.push_back(name(Family::If, l));
        out.push_back(name(Family::RuleBound));
    }
    return out;
}

Configuration Codec::repr_signal(const std::string& mu) const {
    int dir = speed_index(mu);
    int k = id_of(mu);
    const UniversalParams& p = universal_->params;
    Rat shift = (p.s(dir) + p.nu_max()) / p.nu_rapid();
    Rat bl = -Rat(1) - shift;
    Rat br = Rat(1) - shift;

    Configuration c;
    c.put(bl, ExtendedValue::signal(UniversalMachine::name_of({Family::BorderLeft, dir})));
    Rat id_pitch = -bl / Rat(k + 1);
    for (int m = 1; m <= k; ++m)
        c.put(bl + Rat(m) * id_pitch,
              ExtendedValue::signal(UniversalMachine::name_of({Family::Id, dir})));
    FamilyTag main_tag{Family::Main, dir};
    main_tag.has_e = true;
    c.put(Rat(0), ExtendedValue::signal(UniversalMachine::name_of(main_tag)));
    std::vector<std::string> block = block_signals(dir);
    Rat block_pitch = br / Rat(static_cast<long long>(block.size()) + 1);
    for (size_t m = 0; m < block.size(); ++m)
        c.put(Rat(static_cast<long long>(m + 1)) * block_pitch, ExtendedValue::signal(block[m]));
    c.put(br, ExtendedValue::signal(UniversalMachine::name_of({Family::BorderRight, dir})));
    return c;
}

Configuration Codec::repr_collision(const CollisionRule& rho) const {
    auto cached = collision_cache_.find(rho.incoming);
    if (cached != collision_cache_.end()) return cached->second;

    if (!checked_)
        checked_ = std::make_shared<UniversalMachine>(generate_checked(universal_->speed_set));

    // Participants sorted by decreasing speed index: leftmost first.
    std::vector<std::pair<int, std::string>> parts;
    for (const auto& name : rho.incoming) parts.push_back({speed_index(name), name});
    std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    if (parts.size() < 2)
        throw Error(ErrorKind::BootstrapFailure, "collision representation needs >= 2 inputs");
    const UniversalParams& p = universal_->params;
    int i = parts.front().first;
    int j = parts.back().first;

    Rat min_gap;
    bool first = true;
    for (size_t a = 0; a + 1 < parts.size(); ++a) {
        Rat gap = (p.s(parts[a].first) - p.s(parts[a + 1].first)).abs();
        if (first || gap < min_gap) min_gap = gap;
        first = false;
    }
    Rat scale = min_gap / Rat(100);

    Configuration start;
    for (const auto& [dir, name] : parts) {
        Rat center = -p.s(dir);
        Configuration piece = repr_signal(name);
        for (const auto& e : piece.entries()) start.put(center + scale * e.pos, e.value);
    }
    Rat x_witness = -(p.s(i) + p.s(parts[1].first)) / Rat(2);
    FamilyTag witness{Family::CheckOk, i, j};
    start.put(x_witness, ExtendedValue::signal(UniversalMachine::name_of(witness)));

    RunLimits limits;
    limits.horizon = Rat(1);
    SpaceTimeDiagram d = run(checked_->machine, std::move(start), limits);
    if (d.termination != Termination::HorizonReached && d.termination != Termination::Quiescent)
        throw Error(ErrorKind::BootstrapFailure, "bootstrap run did not reach the collision");
    Configuration at_one = config_at(d, Rat(1));

    // The macro travelled rigidly, so rescaling is a pure division by the
    // bootstrap scale. Check that the borders really are where the layout
    // puts them before trusting it.
    Rat shift = (p.s(i) + p.nu_max()) / p.nu_rapid();
    std::string bl_name = UniversalMachine::name_of({Family::BorderLeft, i});
    std::string br_name = UniversalMachine::name_of({Family::BorderRight, i});
    bool bl_ok = false, br_ok = false, center_ok = false;
    for (const auto& e : at_one.entries()) {
        if (e.value.is_signal() && e.value.signal_name() == bl_name)
            bl_ok = e.pos == scale * (-Rat(1) - shift);
        if (e.value.is_signal() && e.value.signal_name() == br_name)
            br_ok = e.pos == scale * (Rat(1) - shift);
        if (e.value.is_collision() && e.pos.is_zero()) center_ok = true;
    }
    if (!bl_ok || !br_ok || !center_ok)
        throw Error(ErrorKind::BootstrapFailure,
                    "resolved collision configuration is not in layout position");

    Configuration result;
    for (const auto& e : at_one.entries()) result.put(e.pos / scale, e.value);
    collision_cache_.emplace(rho.incoming, result);
    return result;
}

Configuration Codec::repr_config(const Configuration& c) const {
    Configuration out;
    const auto& entries = c.entries();
    for (size_t idx = 0; idx < entries.size(); ++idx) {
        Rat d(1);
        bool have = false;
        if (idx > 0) {
            d = entries[idx].pos - entries[idx - 1].pos;
            have = true;
        }
        if (idx + 1 < entries.size()) {
            Rat d2 = entries[idx + 1].pos - entries[idx].pos;
            if (!have || d2 < d) d = d2;
            have = true;
        }
        Rat scale = have ? d / Rat(3) : Rat(1);
        Configuration piece = entries[idx].value.is_signal()
                                  ? repr_signal(entries[idx].value.signal_name())
                                  : repr_collision(entries[idx].value.rule());
        for (const auto& e : piece.entries()) out.put(entries[idx].pos + scale * e.pos, e.value);
    }
    return out;
}

bool Codec::clean_at(const Configuration& u_config, const Rat& x) const {
    size_t idx = u_config.index_of(x);
    if (idx == Configuration::npos) return false;
    const auto& entries = u_config.entries();
    const auto& v = entries[idx].value;
    if (!v.is_signal()) return false;
    auto it = universal_->tags.find(v.signal_name());
    if (it == universal_->tags.end() || it->second.family != Family::Main ||
        it->second.e_mask != 0)
        return false;
    int dir = it->second.i;

    // Left: ids only, then the left border.
    int k = 0;
    size_t pos = idx;
    while (true) {
        if (pos == 0) return false;
        --pos;
        if (!entries[pos].value.is_signal()) return false;
        const FamilyTag& t = universal_->tag_of(entries[pos].value.signal_name());
        if (t.family == Family::Id && t.i == dir) {
            ++k;
            continue;
        }
        if (t.family == Family::BorderLeft && t.i == dir) break;
        return false;
    }
    if (k < 1 || k > max_id(dir)) return false;

    // Right: the block in exact order, then the right border.
    std::vector<std::string> block = block_signals(dir);
    pos = idx;
    for (const auto& expected : block) {
        ++pos;
        if (pos >= entries.size() || !entries[pos].value.is_signal() ||
            entries[pos].value.signal_name() != expected)
            return false;
    }
    ++pos;
    if (pos >= entries.size() || !entries[pos].value.is_signal()) return false;
    const FamilyTag& t = universal_->tag_of(entries[pos].value.signal_name());
    return t.family == Family::BorderRight && t.i == dir;
}

Rat Codec::width_at(const Configuration& u_config, const Rat& x) const {
    if (!clean_at(u_config, x))
        throw Error(ErrorKind::NotClean, "configuration is not clean at " + x.str());
    size_t idx = u_config.index_of(x);
    const auto& entries = u_config.entries();
    int dir = universal_->tag_of(entries[idx].value.signal_name()).i;
    size_t left = idx;
    while (!(universal_->tag_of(entries[left].value.signal_name()).family == Family::BorderLeft))
        --left;
    size_t right = idx + block_signals(dir).size() + 1;
    return entries[right].pos - entries[left].pos;
}

int Codec::count_identity(const Window& w, int dir) const {
    // Plain ids plus selected output ids beyond the dispatching signal.
    int plain = 0, selected = 0;
    bool saw_fast_left = false;
    std::vector<Window::Item> scanned;  // both scans, in scan order
    for (const auto& it : w.left) {
        w.touch(it);
        const FamilyTag& t = *it.tag;
        if (t.family == Family::Id && t.i == dir) ++plain;
        if (t.family == Family::ShrinkId && t.i == dir) ++plain;
        if (t.family == Family::FastLeft) saw_fast_left = true;
        if (t.family == Family::IdSelected && t.l == dir && saw_fast_left) ++selected;
        scanned.push_back(it);
        if (t.family == Family::BorderLeft || t.family == Family::ShrinkTopL ||
            t.family == Family::ShrinkTopTestL)
            break;  // left edge of the surrounding cluster
        if (t.family == Family::FastRight) break;  // entered the previous cluster
    }
    for (const auto& it : w.right) {
        w.touch(it);
        scanned.push_back(it);
        const FamilyTag& t = *it.tag;
        if (t.family == Family::BorderRight || t.family == Family::ShrinkTopR ||
            t.family == Family::ShrinkTopTestR || t.family == Family::FastLeft ||
            t.family == Family::BorderLeft || t.family == Family::ShrinkTopL ||
            t.family == Family::ShrinkTopTestL)
            break;  // right edge of this cluster or the next macro-signal's left edge
    }

    // Beam members, encoding-block signals and the delimiters between them.
    std::vector<Window::Item> movers_right, movers_left, block;
    std::vector<Window::Item> separators;
    for (const auto& it : scanned) {
        const FamilyTag& t = *it.tag;
        if ((t.family == Family::CrossBackOk || t.family == Family::CrossBack) && t.i == dir)
            movers_right.push_back(it);
        if ((t.family == Family::CrossOk || t.family == Family::Cross) && t.i == dir)
            movers_left.push_back(it);
        if (is_block_family(t.family)) block.push_back(it);
        switch (t.family) {
            case Family::BorderLeft:
            case Family::BorderRight:
            case Family::ShrinkTopL:
            case Family::ShrinkTopTestL:
            case Family::ShrinkTopR:
            case Family::ShrinkTopTestR:
            case Family::FastLeft:
            case Family::FastRight: separators.push_back(it); break;
            default: break;
        }
    }
    if (movers_right.empty() && movers_left.empty() && (plain > 0 || selected > 0))
        return plain + selected;

    // Reconstruct the surviving encoding block: group block signals into runs
    // of one direction with no delimiter inside, and use the run closest to
    // the center whose segment structure matches the layout. Marks in its
    // maximal-id segment complete the count of converted ids; members not yet
    // past their slots still count themselves.
    std::sort(block.begin(), block.end(), Window::before);
    std::sort(separators.begin(), separators.end(), Window::before);
    const Rat& center = w.center_pos;

    int marks = 0;
    std::optional<Window::Item> first_bare, last_bare;
    bool usable_run = false;
    if (!block.empty()) {
        std::vector<std::pair<size_t, size_t>> runs;  // [begin, end) into block
        size_t begin = 0;
        for (size_t b = 1; b <= block.size(); ++b) {
            bool cut = b == block.size() || block[b].tag->i != block[begin].tag->i;
            if (!cut) {
                for (const auto& sep : separators)
                    if (Window::before(block[b - 1], sep) && Window::before(sep, block[b])) {
                        cut = true;
                        break;
                    }
            }
            if (cut) {
                runs.push_back({begin, b});
                begin = b;
            }
        }
        auto run_distance = [&](const std::pair<size_t, size_t>& r) {
            Rat lo = block[r.first].pos, hi = block[r.second - 1].pos;
            if (center < lo) return lo - center;
            if (hi < center) return center - hi;
            return Rat(0);
        };
        std::sort(runs.begin(), runs.end(), [&](const auto& a, const auto& b) {
            return run_distance(a) < run_distance(b);
        });
        for (const auto& run : runs) {
            std::vector<std::pair<size_t, size_t>> seg_spans;
            size_t seg_begin = 0;
            bool open = false;
            for (size_t b = run.first; b < run.second; ++b) {
                if (is_bound(block[b].tag->family)) {
                    if (!open) {
                        seg_begin = b;
                        open = true;
                    } else {
                        seg_spans.push_back({seg_begin, b + 1});
                        open = false;
                    }
                }
            }
            if (seg_spans.size() != segments_.size()) continue;
            usable_run = true;
            auto [mb, me] = seg_spans[max_segment_];
            for (size_t b = mb; b < me; ++b) {
                const FamilyTag& t = *block[b].tag;
                if (t.family == Family::IfOk && t.l == dir) ++marks;
                if ((t.family == Family::If || t.family == Family::ShrinkIf) && t.l == dir) {
                    if (!first_bare) first_bare = block[b];
                    last_bare = block[b];
                }
            }
            break;
        }
    }
    if (!usable_run)  // no recognizable block: every member is still in flight
        return plain + selected + static_cast<int>(movers_right.size() + movers_left.size());

    int counted = 0;
    for (const auto& m : movers_right)
        if (first_bare && Window::before(m, *first_bare)) ++counted;
    for (const auto& m : movers_left)
        if (last_bare && Window::before(*last_bare, m)) ++counted;
    return plain + selected + counted + marks;
}

ExtendedValue Codec::decode_at(const Configuration& u_config, const Rat& x) const {
    size_t idx = u_config.index_of(x);
    last_left_ = last_right_ = 0;
    if (idx == Configuration::npos) return ExtendedValue::void_value();
    const auto& entries = u_config.entries();

    // Flatten the bounded neighborhood, expanding collision values into their
    // incoming signals by decreasing speed.
    const long bound = static_cast<long>(locality_bound());
    Window w;
    w.center_pos = x;
    auto expand = [&](size_t e, long outer, std::vector<Window::Item>& out) {
        const auto& entry = entries[e];
        if (entry.value.is_signal()) {
            out.push_back({entry.pos, 0, &universal_->tag_of(entry.value.signal_name()), outer});
            return;
        }
        std::vector<std::pair<Rat, const std::string*>> incoming;
        for (const auto& n : entry.value.rule().incoming)
            incoming.push_back({universal_->machine->speed_of(n), &n});
        std::sort(incoming.begin(), incoming.end(),
                  [](const auto& a, const auto& b) { return b.first < a.first; });
        for (size_t m = 0; m < incoming.size(); ++m)
            out.push_back(
                {entry.pos, static_cast<int>(m), &universal_->tag_of(*incoming[m].second), outer});
    };
    for (long off = 1; off <= bound && off <= static_cast<long>(idx); ++off) {
        std::vector<Window::Item> items;
        expand(idx - static_cast<size_t>(off), -off, items);
        for (auto it = items.rbegin(); it != items.rend(); ++it) w.left.push_back(*it);
    }
    for (long off = 1; off <= bound && idx + static_cast<size_t>(off) < entries.size(); ++off)
        expand(idx + static_cast<size_t>(off), off, w.right);

    auto finish = [&](ExtendedValue v) {
        last_left_ = static_cast<size_t>(w.used_left);
        last_right_ = static_cast<size_t>(w.used_right);
        return v;
    };

    const ExtendedValue& v0 = entries[idx].value;
    if (v0.is_signal()) {
        auto it = universal_->tags.find(v0.signal_name());
        if (it == universal_->tags.end()) return finish(ExtendedValue::void_value());
        if (!is_main_like(it->second.family)) return finish(ExtendedValue::void_value());
        int dir = it->second.i;
        int id = count_identity(w, dir);
        if (id < 1 || id > max_id(dir))
            throw Error(ErrorKind::DecodeFailure,
                        "identity count " + std::to_string(id) + " for speed index " +
                            std::to_string(dir) + " at " + x.str());
        return finish(ExtendedValue::signal(signal_at(dir, id)));
    }

    // Collision value at the center: a meeting of main signals decodes to the
    // simulated rule; a main crossing auxiliary signals is still the signal;
    // anything else is void.
    std::set<int> dirs;
    for (const auto& n : v0.rule().incoming) {
        auto it = universal_->tags.find(n);
        if (it != universal_->tags.end() && is_main_like(it->second.family))
            dirs.insert(it->second.i);
    }
    if (dirs.empty()) return finish(ExtendedValue::void_value());
    if (dirs.size() == 1) {
        int dir = *dirs.begin();
        int id = count_identity(w, dir);
        if (id < 1 || id > max_id(dir))
            throw Error(ErrorKind::DecodeFailure,
                        "identity count " + std::to_string(id) + " under a crossing at " + x.str());
        return finish(ExtendedValue::signal(signal_at(dir, id)));
    }
    std::vector<std::string> incoming;
    for (int dir : dirs) {
        int id = count_identity(w, dir);
        if (id < 1 || id > max_id(dir))
            throw Error(ErrorKind::DecodeFailure,
                        "identity count " + std::to_string(id) + " for participant of speed index " +
                            std::to_string(dir) + " at " + x.str());
        incoming.push_back(signal_at(dir, id));
    }
    RuleSynth synth(*simulated_);
    const RuleLookupResult& res = synth.lookup(incoming);
    if (!res.defined())
        throw Error(ErrorKind::DecodeFailure,
                    "no simulated rule for {" + SignalMachine::join(incoming) + "} at " + x.str());
    return finish(ExtendedValue::collision(*res.rule));
}

Configuration Codec::decode_config(const Configuration& u_config) const {
    Configuration out;
    for (const auto& e : u_config.entries()) {
        ExtendedValue v = decode_at(u_config, e.pos);
        if (!v.is_void()) out.put(e.pos, std::move(v));
    }
    return out;
}

}  // namespace sm
