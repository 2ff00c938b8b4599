#include "sm/verify.hpp"

#include "sm/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace sm {

Configuration MapTranslation::represent(const Configuration& c) const {
    Configuration out;
    for (const auto& e : c.entries()) {
        if (e.value.is_signal()) {
            out.put(e.pos, ExtendedValue::signal(signal_repr.at(e.value.signal_name())));
        } else {
            out.put(e.pos, ExtendedValue::collision(rule_repr.at(e.value.rule().incoming)));
        }
    }
    return out;
}

Configuration MapTranslation::decode(const Configuration& u) const {
    Configuration out;
    for (const auto& e : u.entries()) {
        if (e.value.is_signal()) {
            auto it = signal_decode.find(e.value.signal_name());
            if (it != signal_decode.end()) out.put(e.pos, ExtendedValue::signal(it->second));
        } else {
            auto it = rule_decode.find(e.value.rule().incoming);
            if (it != rule_decode.end()) out.put(e.pos, ExtendedValue::collision(it->second));
        }
    }
    return out;
}

namespace {

std::string describe(const ExtendedValue& v) {
    if (v.is_void()) return "void";
    if (v.is_signal()) return v.signal_name();
    return "{" + SignalMachine::join(v.rule().incoming) + "}->{" +
           SignalMachine::join(v.rule().outgoing) + "}";
}

std::optional<EquivalenceReport::Mismatch> compare_configs(const Rat& t, const Configuration& want,
                                                           const Configuration& got) {
    size_t wi = 0, gi = 0;
    const auto& w = want.entries();
    const auto& g = got.entries();
    while (wi < w.size() || gi < g.size()) {
        if (wi < w.size() && gi < g.size() && w[wi].pos == g[gi].pos) {
            if (w[wi].value != g[gi].value)
                return EquivalenceReport::Mismatch{t, w[wi].pos, describe(w[wi].value),
                                                   describe(g[gi].value)};
            ++wi, ++gi;
        } else if (gi >= g.size() || (wi < w.size() && w[wi].pos < g[gi].pos)) {
            return EquivalenceReport::Mismatch{t, w[wi].pos, describe(w[wi].value), "void"};
        } else {
            return EquivalenceReport::Mismatch{t, g[gi].pos, "void", describe(g[gi].value)};
        }
    }
    return std::nullopt;
}

struct EventView {
    const CollisionEvent* e;
    std::vector<const FamilyTag*> in_tags;
    std::vector<const FamilyTag*> out_tags;

    bool in_has(Family f, int i = 0) const {
        for (const auto* t : in_tags)
            if (t->family == f && (i == 0 || t->i == i)) return true;
        return false;
    }
    bool out_has(Family f, int i = 0) const {
        for (const auto* t : out_tags)
            if (t->family == f && (i == 0 || t->i == i)) return true;
        return false;
    }
    int count_in_mains() const {
        int c = 0;
        for (const auto* t : in_tags)
            if (t->family == Family::Main) ++c;
        return c;
    }
};

/// Phase analysis over the simulator event log: identifies detections, the
/// test/check chain of every resolved macro-collision, abort marks, and the
/// half-widths seen at each detection.
void analyze_phases(const SpaceTimeDiagram& d, const UniversalMachine& tags,
                    EquivalenceReport& report) {
    std::vector<EventView> views;
    views.reserve(d.events.size());
    for (const auto& e : d.events) {
        EventView v{&e, {}, {}};
        for (const auto& n : e.incoming) v.in_tags.push_back(&tags.tag_of(n));
        for (const auto& n : e.outgoing) v.out_tags.push_back(&tags.tag_of(n));
        views.push_back(std::move(v));
    }

    // Half-widths at detections, per (left dir, right dir) pair: the distance
    // from each meeting border to its main at the detection instant must
    // strictly shrink across retries of the same pair. Positions of live main
    // signals derive from the event log itself: every main is born either at
    // t=0 or at an event.
    std::map<std::pair<int, int>, std::vector<Rat>> widths;
    struct MainTrack {
        int dir;
        Rat birth_pos, birth_time;
        bool alive;
    };
    std::vector<MainTrack> mains;
    auto main_pos_near = [&](int dir, const Rat& t, const Rat& x,
                             bool left_of) -> std::optional<Rat> {
        std::optional<Rat> best;
        for (const auto& m : mains) {
            if (!m.alive || m.dir != dir) continue;
            Rat pos = m.birth_pos + (t - m.birth_time) * tags.params.s(dir);
            if (left_of ? pos < x : pos > x) {
                if (!best || (left_of ? *best < pos : pos < *best)) best = pos;
            }
        }
        return best;
    };
    auto track_add = [&](const std::string& name, const Rat& pos, const Rat& t) {
        auto it = tags.tags.find(name);
        if (it != tags.tags.end() && (it->second.family == Family::Main ||
                                      it->second.family == Family::MainTestOk ||
                                      it->second.family == Family::MainTestFailL ||
                                      it->second.family == Family::MainTestFailR))
            mains.push_back({it->second.i, pos, t, true});
    };
    for (const auto& e : d.initial.entries())
        if (e.value.is_signal()) track_add(e.value.signal_name(), e.pos, Rat(0));
    size_t next_event = 0;
    auto track_to = [&](size_t idx) {
        while (next_event < idx) {
            const CollisionEvent& e = d.events[next_event];
            for (const auto& n : e.incoming) {
                auto it = tags.tags.find(n);
                if (it == tags.tags.end()) continue;
                Family f = it->second.family;
                if (f == Family::Main || f == Family::MainTestOk || f == Family::MainTestFailL ||
                    f == Family::MainTestFailR) {
                    for (auto& m : mains) {
                        if (!m.alive || m.dir != it->second.i) continue;
                        if (m.birth_pos + (e.time - m.birth_time) * tags.params.s(m.dir) == e.pos) {
                            m.alive = false;
                            break;
                        }
                    }
                }
            }
            for (const auto& n : e.outgoing) track_add(n, e.pos, e.time);
            ++next_event;
        }
    };

    for (size_t idx = 0; idx < views.size(); ++idx) {
        const EventView& v = views[idx];
        bool detection = false;
        int left_dir = 0, right_dir = 0;
        for (const auto* t : v.in_tags) {
            if (t->family == Family::BorderRight) {
                detection = true;
                left_dir = t->i;
            }
            if (t->family == Family::BorderLeft) right_dir = t->i;
        }
        if (!(detection && right_dir && v.out_has(Family::ShrinkTest))) continue;
        ++report.detections;
        track_to(idx);
        auto lm = main_pos_near(left_dir, v.e->time, v.e->pos, true);
        auto rm = main_pos_near(right_dir, v.e->time, v.e->pos, false);
        if (lm && rm) {
            auto& seq = widths[{left_dir, right_dir}];
            seq.push_back(v.e->pos - *lm);   // left macro's right half
            seq.push_back(*rm - v.e->pos);   // right macro's left half
        }
    }
    for (const auto& [pair, seq] : widths) {
        for (size_t i = 2; i + 1 < seq.size(); i += 2)
            if (!(seq[i] < seq[i - 2] && seq[i + 1] < seq[i - 1]))
                report.widths_strictly_decrease = false;
    }

    for (const EventView& v : views) {
        if (v.out_has(Family::MainTestFailL) || v.out_has(Family::MainTestFailR))
            ++report.main_test_fails;
        if (v.out_has(Family::MainTestFailL) || v.out_has(Family::MainTestFailR) ||
            v.out_has(Family::ShrinkTestFail) || v.out_has(Family::CheckFail))
            ++report.test_failures;
    }

    // Chains of resolved macro-collisions.
    for (size_t idx = 0; idx < views.size(); ++idx) {
        const EventView& v = views[idx];
        if (v.count_in_mains() < 2) continue;
        MacroCollisionMetrics m;
        m.collision = v.e->time;
        std::set<int> dirs;
        for (const auto* t : v.in_tags)
            if (t->family == Family::Main) dirs.insert(t->i);
        m.leftmost_dir = *dirs.rbegin();
        m.rightmost_dir = *dirs.begin();
        int i = m.leftmost_dir;

        auto latest_before = [&](const Rat& limit, auto&& pred) -> std::optional<size_t> {
            std::optional<size_t> found;
            for (size_t a = 0; a < views.size(); ++a) {
                if (!(views[a].e->time < limit)) break;
                if (pred(views[a])) found = a;
            }
            return found;
        };
        auto check_ok_ev = latest_before(m.collision, [&](const EventView& w) {
            for (const auto* t : w.out_tags)
                if (t->family == Family::CheckOk && t->i == i) return true;
            return false;
        });
        if (!check_ok_ev) continue;
        m.check_ok = views[*check_ok_ev].e->time;
        auto launch_ev = latest_before(m.check_ok, [&](const EventView& w) {
            return w.in_has(Family::MainTestOk, i) && w.in_has(Family::TestRightOk, i);
        });
        if (!launch_ev) continue;
        m.test_end = views[*launch_ev].e->time;
        auto bot_ev = latest_before(m.test_end, [&](const EventView& w) {
            return w.in_has(Family::TestStart, i) && w.out_has(Family::TestLeft, i);
        });
        if (!bot_ev) continue;
        m.shrink_end = views[*bot_ev].e->time;
        auto det_ev = latest_before(m.shrink_end, [&](const EventView& w) {
            return w.in_has(Family::BorderRight, i) && w.out_has(Family::ShrinkTest, i);
        });
        if (!det_ev) continue;
        m.border_meet = views[*det_ev].e->time;

        // Outputs are clean when both dispatch signals died on the borders.
        std::optional<Rat> left_done, right_done;
        for (size_t a = idx + 1; a < views.size(); ++a) {
            const EventView& w = views[a];
            if (!left_done && w.in_has(Family::FastLeft)) left_done = w.e->time;
            if (!right_done && w.in_has(Family::FastRight)) right_done = w.e->time;
            if (left_done && right_done) break;
        }
        if (left_done && right_done)
            m.outputs_clean = *left_done < *right_done ? *right_done : *left_done;
        report.macro_collisions.push_back(std::move(m));
    }
}

}  // namespace

EquivalenceReport check_simulation(std::shared_ptr<const SignalMachine> simulated,
                                   const Configuration& c,
                                   std::shared_ptr<const SignalMachine> simulator,
                                   const Translation& tr, const CheckOptions& options) {
    EquivalenceReport report;
    report.simulated_name = simulated->name;
    report.simulator_name = simulator->name;

    RunLimits limits;
    limits.horizon = options.horizon;
    limits.event_cap = options.event_cap;
    SpaceTimeDiagram d = run(simulated, c, limits);

    Rat last_event = d.events.empty() ? Rat(0) : d.events.back().time;
    std::set<Rat> samples;
    samples.insert(Rat(0));
    for (const auto& e : d.events) samples.insert(e.time);
    for (size_t i = 0; i + 1 < d.events.size(); ++i)
        if (d.events[i].time != d.events[i + 1].time)
            samples.insert((d.events[i].time + d.events[i + 1].time) / Rat(2));
    for (const auto& t : options.extra_samples) samples.insert(t);

    // The simulator runs past the last simulated event so the report can end
    // on a clean configuration.
    Rat sim_horizon = options.horizon ? *options.horizon : last_event * Rat(2) + Rat(1);
    for (const auto& t : samples)
        if (sim_horizon < t) sim_horizon = t;
    RunLimits sim_limits;
    sim_limits.horizon = sim_horizon;
    sim_limits.event_cap = options.event_cap;
    SpaceTimeDiagram du = run(simulator, tr.represent(c), sim_limits);

    if (options.tags) analyze_phases(du, *options.tags, report);

    // Extend sampling past the final collision once its output delay is
    // known, so the checked range ends on a clean configuration.
    if (options.tags && !report.macro_collisions.empty() && !options.horizon) {
        const auto& final_mc = report.macro_collisions.back();
        if (auto delay = final_mc.output_delay()) {
            Rat settled = last_event + *delay;
            if (auto lim = du.valid_until(); !lim || settled <= *lim) samples.insert(settled);
        }
    }

    if (auto lim_d = d.valid_until()) {
        std::set<Rat> clipped;
        for (const auto& t : samples)
            if (t <= *lim_d) clipped.insert(t);
        samples = std::move(clipped);
    }
    if (auto lim_u = du.valid_until()) {
        std::set<Rat> clipped;
        for (const auto& t : samples)
            if (t <= *lim_u) clipped.insert(t);
        samples = std::move(clipped);
    }

    Replayer rp_d(d);
    Replayer rp_u(du);
    for (const auto& t : samples) {
        report.sample_times.push_back(t);
        rp_d.advance_to(t);
        rp_u.advance_to(t);
        Configuration want = rp_d.configuration_at(t);
        Configuration got = tr.decode(rp_u.configuration_at(t));
        if (auto mm = compare_configs(t, want, got)) {
            report.mismatch = std::move(mm);
            break;
        }
    }
    return report;
}

std::string EquivalenceReport::to_json() const {
    nlohmann::json j;
    j["simulated"] = simulated_name;
    j["simulator"] = simulator_name;
    j["samples"] = nlohmann::json::array();
    for (const auto& t : sample_times) j["samples"].push_back(t.str_pq());
    j["match"] = ok();
    if (mismatch) {
        nlohmann::json m;
        m["t"] = mismatch->time.str_pq();
        if (mismatch->pos) m["x"] = mismatch->pos->str_pq();
        m["expected"] = mismatch->expected;
        m["got"] = mismatch->got;
        j["mismatch"] = std::move(m);
    }
    j["detections"] = detections;
    j["test_failures"] = test_failures;
    j["main_test_fails"] = main_test_fails;
    j["widths_strictly_decrease"] = widths_strictly_decrease;
    j["macro_collisions"] = nlohmann::json::array();
    for (const auto& m : macro_collisions) {
        nlohmann::json mm;
        mm["border_meet"] = m.border_meet.str_pq();
        mm["shrink_end"] = m.shrink_end.str_pq();
        mm["test_end"] = m.test_end.str_pq();
        mm["check_ok"] = m.check_ok.str_pq();
        mm["collision"] = m.collision.str_pq();
        if (m.outputs_clean) mm["outputs_clean"] = m.outputs_clean->str_pq();
        mm["shrink_within_budget"] = m.shrink_within_budget();
        mm["test_within_budget"] = m.test_within_budget();
        mm["resolution_within_budget"] = m.resolution_within_budget();
        j["macro_collisions"].push_back(std::move(mm));
    }
    return j.dump(2);
}

AbortRetryReport abort_retry_probe(std::shared_ptr<const SignalMachine> simulated,
                                   const Configuration& c_nonparticipant,
                                   const UniversalMachine& universal,
                                   const Translation& translation,
                                   const CheckOptions& options) {
    CheckOptions with_tags = options;
    with_tags.tags = &universal;
    return AbortRetryReport{check_simulation(std::move(simulated), c_nonparticipant,
                                             universal.machine, translation, with_tags)};
}

NextCollision brute_next_collision(const SignalMachine& m, const Configuration& c) {
    struct Ray {
        Rat x;
        Rat v;
        std::string name;
    };
    std::vector<Ray> rays;
    for (const auto& e : c.entries()) {
        if (e.value.is_signal())
            rays.push_back({e.pos, m.speed_of(e.value.signal_name()), e.value.signal_name()});
        else
            for (const auto& n : e.value.rule().outgoing) rays.push_back({e.pos, m.speed_of(n), n});
    }
    std::optional<Rat> best;
    for (size_t a = 0; a < rays.size(); ++a)
        for (size_t b = 0; b < rays.size(); ++b) {
            if (a == b || rays[a].v == rays[b].v) continue;
            Rat d = (rays[b].x - rays[a].x) / (rays[a].v - rays[b].v);
            if (d.sign() > 0 && (!best || d < *best)) best = d;
        }
    NextCollision out;
    if (!best) return out;
    out.dt = best;
    std::map<Rat, std::set<std::string>> sites;
    for (const auto& r : rays) {
        Rat p = r.x + *best * r.v;
        sites[p].insert(r.name);
    }
    for (auto& [pos, names] : sites) {
        if (names.size() < 2) continue;
        // A site only counts when at least two distinct trajectories meet.
        std::set<Rat> speeds;
        for (const auto& n : names) speeds.insert(m.speed_of(n));
        if (speeds.size() < 2) continue;
        out.sites.push_back({pos, std::vector<std::string>(names.begin(), names.end())});
    }
    return out;
}

uint64_t TestGen::next() {
    // splitmix64
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

long TestGen::pick(long lo, long hi) {
    return lo + static_cast<long>(next() % static_cast<uint64_t>(hi - lo + 1));
}

Rat TestGen::rational(long max_num, long max_den) {
    return Rat(pick(-max_num, max_num), pick(1, max_den));
}

std::shared_ptr<SignalMachine> TestGen::machine(int max_speeds, int max_signals, int max_rules) {
    auto m = std::make_shared<SignalMachine>();
    m->name = "random";
    int n_speeds = static_cast<int>(pick(1, max_speeds));
    std::set<Rat> speed_set;
    while (static_cast<int>(speed_set.size()) < n_speeds) speed_set.insert(rational(8, 4));
    std::vector<Rat> speeds(speed_set.begin(), speed_set.end());

    int n_sigs = static_cast<int>(pick(std::max(2, n_speeds), max_signals));
    for (int s = 0; s < n_sigs; ++s)
        m->signals.push_back({"s" + std::to_string(s),
                              speeds[static_cast<size_t>(pick(0, n_speeds - 1))]});
    m->rebuild_index();

    int n_rules = static_cast<int>(pick(0, max_rules));
    std::set<std::vector<std::string>> used;
    for (int r = 0; r < n_rules; ++r) {
        // Incoming: two-or-more signals of pairwise distinct speeds.
        std::set<Rat> in_speeds;
        std::vector<std::string> in;
        for (int tries = 0; tries < 12 && static_cast<int>(in.size()) < 3; ++tries) {
            const auto& sig = m->signals[static_cast<size_t>(pick(0, n_sigs - 1))];
            if (in_speeds.insert(sig.speed).second) in.push_back(sig.name);
        }
        if (in.size() < 2) continue;
        if (pick(0, 1) == 0 && in.size() > 2) in.pop_back();
        in = CollisionRule::canon(in);
        if (!used.insert(in).second) continue;
        std::set<Rat> out_speeds;
        std::vector<std::string> out;
        int n_out = static_cast<int>(pick(0, 2));
        for (int tries = 0; tries < 12 && static_cast<int>(out.size()) < n_out; ++tries) {
            const auto& sig = m->signals[static_cast<size_t>(pick(0, n_sigs - 1))];
            if (out_speeds.insert(sig.speed).second) out.push_back(sig.name);
        }
        m->rules.push_back({in, CollisionRule::canon(out)});
    }
    m->rebuild_index();
    m->validate();
    return m;
}

Configuration TestGen::configuration(const SignalMachine& m, int max_entries, bool allow_rules) {
    Configuration c;
    int n = static_cast<int>(pick(1, max_entries));
    std::set<Rat> used;
    for (int e = 0; e < n; ++e) {
        Rat pos = rational(50, 20);
        if (!used.insert(pos).second) continue;
        if (allow_rules && !m.rules.empty() && pick(0, 3) == 0) {
            const auto& r = m.rules[static_cast<size_t>(pick(0, static_cast<long>(m.rules.size()) - 1))];
            c.put(pos, ExtendedValue::collision(r));
        } else {
            const auto& sig = m.signals[static_cast<size_t>(pick(0, static_cast<long>(m.signals.size()) - 1))];
            c.put(pos, ExtendedValue::signal(sig.name));
        }
    }
    return c;
}

}  // namespace sm
