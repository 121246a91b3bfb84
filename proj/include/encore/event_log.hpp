#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "reactor.hpp"

namespace encore {

// Canonical event-log lines. Key order is part of the format: logs are
// compared byte-for-byte against golden files and across processes.

inline nlohmann::ordered_json log_header(std::uint64_t seed,
                                         const std::string& config_hash) {
    return nlohmann::ordered_json{{"seed", seed},
                                  {"config_hash", config_hash}};
}

inline nlohmann::ordered_json log_tick(const tick_output& out) {
    return nlohmann::ordered_json{{"t_ms", out.t_ms},
                                  {"kind", "tick"},
                                  {"rate", out.rate},
                                  {"arousal", to_string(out.bin.arousal)},
                                  {"valence", to_string(out.bin.valence)}};
}

inline nlohmann::ordered_json log_event(const reaction_event& ev) {
    switch (ev.kind) {
    case reaction_event::type::movement:
        return nlohmann::ordered_json{{"t_ms", ev.t_ms},
                                      {"kind", "movement"},
                                      {"movement", to_string(ev.movement)},
                                      {"playback_rate", ev.rate}};
    case reaction_event::type::cheer:
        return nlohmann::ordered_json{{"t_ms", ev.t_ms},
                                      {"kind", "cheer"},
                                      {"cheer", to_string(ev.cheer)}};
    default:
        return nlohmann::ordered_json{{"t_ms", ev.t_ms},
                                      {"kind", "singalong"},
                                      {"window_id", ev.window_id}};
    }
}

class log_writer {
public:
    explicit log_writer(std::ostream& out) : out_(out) {}

    void header(std::uint64_t seed, const std::string& config_hash) {
        out_ << log_header(seed, config_hash).dump() << '\n';
    }

    void tick(const tick_output& out) {
        out_ << log_tick(out).dump() << '\n';
        for (const auto& ev : out.events)
            out_ << log_event(ev).dump() << '\n';
    }

    void event(const reaction_event& ev) {
        out_ << log_event(ev).dump() << '\n';
    }

    void flush() { out_.flush(); }

private:
    std::ostream& out_;
};

} // namespace encore
