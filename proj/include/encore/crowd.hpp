#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "reactor.hpp"

namespace encore {

// Deterministic per-event generator. Seeding mixes the run seed with the
// event time, so any client that knows (seed, t_ms) reproduces the draws
// regardless of how many events it saw before — late joiners included.
class event_rng {
public:
    event_rng(std::uint64_t seed, std::uint64_t t_ms)
        : state_(scramble(seed) ^ scramble(t_ms ^ 0xD2B74407B1CE6E93ull)) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        return scramble(state_);
    }

    // uniform in [0, 1)
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    std::uint64_t state() const { return state_; }

    static std::uint64_t scramble(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

using variation_registry = std::map<movement_kind, std::vector<std::string>>;

inline variation_registry default_variation_registry() {
    return {
        {movement_kind::idle, {}},
        {movement_kind::hand_clap, {"hands_up", "overhead"}},
        {movement_kind::arm_shake_back_forth, {"left_lead", "right_lead"}},
        {movement_kind::arm_shake_side_by_side, {"left_lead", "right_lead"}},
        {movement_kind::disappointed, {"head_down"}},
    };
}

struct active_sound {
    std::string kind;
    std::int64_t until_ms = 0;
};

struct avatar_state {
    int id = 0;
    movement_kind movement = movement_kind::idle;
    std::optional<std::string> variant;
    double playback_rate = 1.0;
};

// The collective audience: every avatar shares one movement and playback
// rate; avatars differ only in their variation assignment (20% chance,
// re-rolled on each transition).
class crowd {
public:
    crowd(int n, std::uint64_t seed,
          variation_registry registry = default_variation_registry(),
          double variation_probability = 0.2)
        : n_(n), seed_(seed), registry_(std::move(registry)),
          p_(variation_probability) {
        if (n <= 0)
            throw domain_error("crowd size must be positive");
        if (p_ < 0 || p_ > 1)
            throw domain_error("variation probability must lie in [0,1]");
        variants_.resize(static_cast<std::size_t>(n));
    }

    void apply_movement(movement_kind kind, double rate, std::int64_t t_ms) {
        auto reg = registry_.find(kind);
        if (reg == registry_.end())
            throw validation_error(std::string("no registry entry for '") +
                                   to_string(kind) + "'");
        movement_ = kind;
        playback_rate_ = rate;
        since_ms_ = t_ms;
        const auto& pool = reg->second;
        event_rng rng(seed_, static_cast<std::uint64_t>(t_ms));
        for (auto& v : variants_) {
            v.reset();
            if (rng.uniform() < p_ && !pool.empty()) {
                auto pick = static_cast<std::size_t>(rng.uniform() *
                                                     pool.size());
                if (pick >= pool.size())
                    pick = pool.size() - 1;
                v = pool[pick];
            }
        }
        prune(t_ms);
    }

    void apply_event(const reaction_event& ev) {
        switch (ev.kind) {
        case reaction_event::type::movement:
            apply_movement(ev.movement, ev.rate, ev.t_ms);
            break;
        case reaction_event::type::cheer:
            prune(ev.t_ms);
            push_sound({to_string(ev.cheer), ev.t_ms + 4000});
            break;
        case reaction_event::type::singalong:
            prune(ev.t_ms);
            push_sound({"singalong", ev.window_end_ms});
            break;
        }
    }

    void prune(std::int64_t t_ms) {
        while (!sounds_.empty() && sounds_.front().until_ms <= t_ms)
            sounds_.pop_front();
    }

    // Restores the exact post-transition state a live observer would hold.
    void restore(movement_kind kind, double rate, std::int64_t since_ms,
                 std::vector<active_sound> sounds) {
        apply_movement(kind, rate, since_ms);
        sounds_.assign(sounds.begin(), sounds.end());
    }

    avatar_state avatar(int id) const {
        return {id, movement_, variants_[static_cast<std::size_t>(id)],
                playback_rate_};
    }

    int n() const { return n_; }
    movement_kind movement() const { return movement_; }
    double playback_rate() const { return playback_rate_; }
    std::int64_t since_ms() const { return since_ms_; }
    const std::vector<std::optional<std::string>>& variants() const {
        return variants_;
    }
    const std::deque<active_sound>& sounds() const { return sounds_; }

    std::size_t variant_count() const {
        std::size_t c = 0;
        for (const auto& v : variants_)
            if (v)
                ++c;
        return c;
    }

    nlohmann::ordered_json snapshot() const {
        nlohmann::ordered_json ids = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < variants_.size(); ++i)
            if (variants_[i])
                ids.push_back(i);
        nlohmann::ordered_json sounds = nlohmann::ordered_json::array();
        for (const auto& s : sounds_)
            sounds.push_back(nlohmann::ordered_json{{"kind", s.kind},
                                                    {"until_ms", s.until_ms}});
        return nlohmann::ordered_json{{"n", n_},
                                      {"movement", to_string(movement_)},
                                      {"playback_rate", playback_rate_},
                                      {"variants", std::move(ids)},
                                      {"active_sounds", std::move(sounds)}};
    }

private:
    void push_sound(active_sound s) {
        if (sounds_.size() >= 32)
            sounds_.pop_front();
        sounds_.push_back(std::move(s));
    }

    int n_;
    std::uint64_t seed_;
    variation_registry registry_;
    double p_;
    movement_kind movement_ = movement_kind::idle;
    double playback_rate_ = 1.0;
    std::int64_t since_ms_ = 0;
    std::vector<std::optional<std::string>> variants_;
    std::deque<active_sound> sounds_;
};

} // namespace encore
