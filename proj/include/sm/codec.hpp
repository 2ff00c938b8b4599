#pragma once

#include "sm/engine.hpp"
#include "sm/machine.hpp"
#include "sm/universal.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sm {

/// Encoder/decoder pair between a simulated machine and the simulator
/// generated for a speed set covering it: builds macro-signal configurations
/// (the representation of signals, collisions and whole configurations) and
/// recovers simulated values from bounded windows of simulator configurations.
class Codec {
  public:
    Codec(std::shared_ptr<const SignalMachine> simulated,
          std::shared_ptr<const UniversalMachine> universal);

    const SignalMachine& simulated() const { return *simulated_; }
    const UniversalMachine& universal() const { return *universal_; }

    // -- per-speed numbering (declaration order, 1-based) --------------------
    int speed_index(const std::string& name) const;
    int id_of(const std::string& name) const;
    const std::string& signal_at(int dir, int id) const;
    int max_id(int dir) const;  // 0 when no signal has that speed

    // -- rule-block layout ----------------------------------------------------
    struct RuleSegment {
        std::vector<int> then_counts;     // [0]=unused, 1-based by speed index
        std::vector<int> if_counts;
        std::optional<size_t> rule;       // index into simulated rules
    };
    const std::vector<RuleSegment>& rule_block() const { return segments_; }
    size_t max_segment_index() const { return max_segment_; }

    /// Ordered meta-signal names of the encoding block in direction `dir`.
    std::vector<std::string> block_signals(int dir) const;

    /// Number of signals in the largest single-signal representation.
    size_t m_r() const { return m_r_; }
    size_t locality_bound() const { return static_cast<size_t>(universal_->speed_set.n()) * (m_r_ + 2); }

    // -- representation -------------------------------------------------------
    Configuration repr_signal(const std::string& mu) const;
    Configuration repr_collision(const CollisionRule& rho) const;
    Configuration repr_config(const Configuration& c) const;

    // -- local structure ------------------------------------------------------
    bool clean_at(const Configuration& u_config, const Rat& x) const;
    Rat width_at(const Configuration& u_config, const Rat& x) const;

    // -- decoding -------------------------------------------------------------
    ExtendedValue decode_at(const Configuration& u_config, const Rat& x) const;
    Configuration decode_config(const Configuration& u_config) const;

    /// Entries consulted by the most recent decode_at, per side.
    size_t last_window_left() const { return last_left_; }
    size_t last_window_right() const { return last_right_; }

  private:
    struct Window;
    int count_identity(const Window& w, int dir) const;

    std::shared_ptr<const SignalMachine> simulated_;
    std::shared_ptr<const UniversalMachine> universal_;

    std::map<std::string, std::pair<int, int>> numbering_;     // name -> (dir, id)
    std::vector<std::vector<std::string>> by_dir_;             // [dir][id-1] -> name
    std::vector<RuleSegment> segments_;
    size_t max_segment_ = 0;
    size_t m_r_ = 0;

    mutable std::shared_ptr<const UniversalMachine> checked_;  // bootstrap sub-machine
    mutable std::map<std::vector<std::string>, Configuration> collision_cache_;
    mutable size_t last_left_ = 0;
    mutable size_t last_right_ = 0;
};

}  // namespace sm
