#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chat.hpp"
#include "detectors.hpp"
#include "emotion.hpp"
#include "errors.hpp"
#include "tempo.hpp"
#include "timeline.hpp"

namespace encore {

enum class movement_kind {
    idle,
    hand_clap,
    arm_shake_back_forth,
    arm_shake_side_by_side,
    disappointed,
};

inline const char* to_string(movement_kind m) {
    switch (m) {
    case movement_kind::idle: return "idle";
    case movement_kind::hand_clap: return "hand_clap";
    case movement_kind::arm_shake_back_forth: return "arm_shake_back_forth";
    case movement_kind::arm_shake_side_by_side:
        return "arm_shake_side_by_side";
    default: return "disappointed";
    }
}

inline movement_kind movement_from_string(const std::string& s) {
    if (s == "idle") return movement_kind::idle;
    if (s == "hand_clap") return movement_kind::hand_clap;
    if (s == "arm_shake_back_forth") return movement_kind::arm_shake_back_forth;
    if (s == "arm_shake_side_by_side")
        return movement_kind::arm_shake_side_by_side;
    if (s == "disappointed") return movement_kind::disappointed;
    throw validation_error("unknown movement '" + s + "'");
}

enum class cheer_kind { loud_cheer, applause, groan, none };

inline const char* to_string(cheer_kind c) {
    switch (c) {
    case cheer_kind::loud_cheer: return "loud_cheer";
    case cheer_kind::applause: return "applause";
    case cheer_kind::groan: return "groan";
    default: return "none";
    }
}

inline cheer_kind cheer_from_string(const std::string& s) {
    if (s == "loud_cheer") return cheer_kind::loud_cheer;
    if (s == "applause") return cheer_kind::applause;
    if (s == "groan") return cheer_kind::groan;
    if (s == "none") return cheer_kind::none;
    throw validation_error("unknown cheer '" + s + "'");
}

// Movement rules are total over (phase, tempo when performing, arousal,
// valence); cheer rules over (arousal, valence). Validated at load.
class mapping_table {
public:
    explicit mapping_table(const nlohmann::json& doc) {
        std::array<bool, 18> perf_seen{};
        std::array<bool, 9> conv_seen{};
        std::array<bool, 9> cheer_seen{};
        for (const auto& r : doc.at("movement_rules")) {
            std::string phase = r.at("phase").get<std::string>();
            int a = static_cast<int>(
                level_from_string(r.at("arousal").get<std::string>()));
            int v = static_cast<int>(
                level_from_string(r.at("valence").get<std::string>()));
            movement_kind m =
                movement_from_string(r.at("movement").get<std::string>());
            if (phase == "performance") {
                std::string tempo = r.at("tempo").get<std::string>();
                int t = tempo == "fast" ? 0 : 1;
                if (tempo != "fast" && tempo != "slow")
                    throw validation_error("mapping: unknown tempo '" +
                                           tempo + "'");
                if (perf_seen[t * 9 + a * 3 + v])
                    throw validation_error("mapping: duplicate movement rule");
                perf_seen[t * 9 + a * 3 + v] = true;
                perf_[t][a][v] = m;
            } else if (phase == "conversation") {
                if (r.contains("tempo"))
                    throw validation_error(
                        "mapping: tempo given for conversation rule");
                if (conv_seen[a * 3 + v])
                    throw validation_error("mapping: duplicate movement rule");
                conv_seen[a * 3 + v] = true;
                conv_[a][v] = m;
            } else {
                throw validation_error("mapping: unknown phase '" + phase +
                                       "'");
            }
        }
        for (const auto& r : doc.at("cheer_rules")) {
            int a = static_cast<int>(
                level_from_string(r.at("arousal").get<std::string>()));
            int v = static_cast<int>(
                level_from_string(r.at("valence").get<std::string>()));
            if (cheer_seen[a * 3 + v])
                throw validation_error("mapping: duplicate cheer rule");
            cheer_seen[a * 3 + v] = true;
            cheer_[a][v] = cheer_from_string(r.at("cheer").get<std::string>());
        }
        for (bool b : perf_seen)
            if (!b)
                throw validation_error(
                    "mapping: movement rules not total over performance");
        for (bool b : conv_seen)
            if (!b)
                throw validation_error(
                    "mapping: movement rules not total over conversation");
        for (bool b : cheer_seen)
            if (!b)
                throw validation_error("mapping: cheer rules not total");
    }

    static mapping_table from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw io_error("cannot open mapping table: " + path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("mapping table: " + std::string(e.what()));
        }
        return mapping_table(doc);
    }

    movement_kind select_movement(segment_kind phase,
                                  std::optional<tempo_class> tempo,
                                  emotion_bin bin) const {
        int a = static_cast<int>(bin.arousal);
        int v = static_cast<int>(bin.valence);
        if (phase == segment_kind::performance) {
            int t = *tempo == tempo_class::fast ? 0 : 1;
            return perf_[t][a][v];
        }
        return conv_[a][v];
    }

    cheer_kind select_cheer(emotion_bin bin) const {
        return cheer_[static_cast<int>(bin.arousal)]
                     [static_cast<int>(bin.valence)];
    }

private:
    movement_kind perf_[2][3][3] = {};
    movement_kind conv_[3][3] = {};
    cheer_kind cheer_[3][3] = {};
};

inline double playback_rate(segment_kind phase, std::optional<double> bpm,
                            double nominal_bpm) {
    if (phase == segment_kind::conversation)
        return 1.0; // beat sync disabled in dialogue
    return std::clamp(*bpm / nominal_bpm, 0.5, 2.0);
}

struct reaction_event {
    enum class type { movement, cheer, singalong };
    type kind;
    std::int64_t t_ms = 0;
    // movement
    movement_kind movement = movement_kind::idle;
    double rate = 1.0;
    // cheer
    cheer_kind cheer = cheer_kind::none;
    // singalong
    std::string window_id;
    std::int64_t window_end_ms = 0; // wire hint for sound expiry, not logged
};

struct tick_output {
    std::int64_t t_ms = 0;
    double rate = 0.0; // messages/sec
    emotion_bin bin;
    bool surge = false; // rising edge this tick
    std::vector<reaction_event> events;
};

struct reactor_params {
    std::int64_t tick_ms = 1000;
    double nominal_bpm = 120.0;
    double fast_bpm_threshold = 100.0;
    int cheer_refractory_ticks = 5;
    std::size_t surge_window = 5;
    double surge_threshold_z = 1.0;
    double surge_influence = 0.0;
    double surge_sigma_floor = 1.0;
    double singalong_threshold = 0.3;
    int emotion_hold_ticks = 5;
};

// The translation core: one tick in, movement/cheer/singalong events out,
// in that order.
class reactor {
public:
    reactor(const concert_timeline& timeline, const lexicon& lex,
            const label_bin_map& bins, const mapping_table& table,
            reactor_params params = {})
        : timeline_(timeline), lexicon_(lex), bins_(bins), table_(table),
          params_(params),
          surge_(params.surge_window, params.surge_threshold_z,
                 params.surge_influence, params.surge_sigma_floor),
          singalong_(params.singalong_threshold),
          tracker_(params.emotion_hold_ticks) {}

    tick_output process_tick(const tick_batch& batch) {
        std::int64_t t_ms = batch.tick_index * params_.tick_ms;
        auto phase = timeline_.phase_at(t_ms);

        tick_output out;
        out.t_ms = t_ms;
        out.bin = tracker_.step(batch, lexicon_, bins_);
        out.rate = static_cast<double>(batch.messages.size()) /
                   (static_cast<double>(params_.tick_ms) / 1000.0);

        auto surge = surge_.step(out.rate);
        out.surge = surge.has_value();

        std::optional<std::string> singalong;
        if (phase.window)
            singalong = singalong_.step(*phase.window, batch);

        std::optional<tempo_class> tempo;
        if (phase.seg->kind == segment_kind::performance)
            tempo = classify_bpm(*phase.seg->bpm, params_.fast_bpm_threshold);
        movement_kind movement =
            table_.select_movement(phase.seg->kind, tempo, out.bin);
        double rate = playback_rate(phase.seg->kind, phase.seg->bpm,
                                    params_.nominal_bpm);
        if (!prev_movement_ || prev_movement_->first != movement ||
            prev_movement_->second != rate) {
            prev_movement_ = {movement, rate};
            reaction_event ev;
            ev.kind = reaction_event::type::movement;
            ev.t_ms = t_ms;
            ev.movement = movement;
            ev.rate = rate;
            out.events.push_back(std::move(ev));
        }

        if (surge) {
            cheer_kind cheer = table_.select_cheer(out.bin);
            bool free = !last_cheer_tick_ ||
                        batch.tick_index - *last_cheer_tick_ >=
                            params_.cheer_refractory_ticks;
            if (cheer != cheer_kind::none && free) {
                last_cheer_tick_ = batch.tick_index;
                reaction_event ev;
                ev.kind = reaction_event::type::cheer;
                ev.t_ms = t_ms;
                ev.cheer = cheer;
                out.events.push_back(std::move(ev));
            }
        }

        if (singalong) {
            reaction_event ev;
            ev.kind = reaction_event::type::singalong;
            ev.t_ms = t_ms;
            ev.window_id = *singalong;
            ev.window_end_ms = phase.window->end_ms;
            out.events.push_back(std::move(ev));
        }
        return out;
    }

    const reactor_params& params() const { return params_; }
    const surge_detector& surge() const { return surge_; }

private:
    const concert_timeline& timeline_;
    const lexicon& lexicon_;
    const label_bin_map& bins_;
    const mapping_table& table_;
    reactor_params params_;
    surge_detector surge_;
    singalong_detector singalong_;
    dominant_tracker tracker_;
    std::optional<std::pair<movement_kind, double>> prev_movement_;
    std::optional<std::int64_t> last_cheer_tick_;
};

} // namespace encore
