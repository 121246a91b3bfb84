#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "text.hpp"

namespace encore {

enum class segment_kind { performance, conversation };

inline const char* to_string(segment_kind k) {
    return k == segment_kind::performance ? "performance" : "conversation";
}

struct segment {
    std::string id;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    segment_kind kind = segment_kind::conversation;
    std::optional<double> bpm; // required for performance segments
};

struct singalong_window {
    std::string id;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::vector<std::string> patterns;
    std::vector<std::regex> compiled; // built at load, icase
};

// True iff any pattern matches anywhere in the case-folded text.
inline bool match_lyric(std::string_view text, const singalong_window& w) {
    std::string folded = ascii_lower(text);
    for (const auto& re : w.compiled)
        if (std::regex_search(folded, re))
            return true;
    return false;
}

class concert_timeline {
public:
    concert_timeline(std::vector<segment> segments,
                     std::vector<singalong_window> windows)
        : segments_(std::move(segments)), windows_(std::move(windows)) {
        validate();
    }

    const std::vector<segment>& segments() const { return segments_; }
    const std::vector<singalong_window>& windows() const { return windows_; }

    std::int64_t start_ms() const { return segments_.front().start_ms; }
    std::int64_t end_ms() const { return segments_.back().end_ms; }

    // Containing segment plus window, half-open intervals throughout.
    struct phase {
        const segment* seg;
        const singalong_window* window; // nullptr outside any window
    };

    phase phase_at(std::int64_t t_ms) const {
        if (t_ms < start_ms() || t_ms >= end_ms())
            throw out_of_range_error("t_ms " + std::to_string(t_ms) +
                                     " outside timeline span");
        auto it = std::upper_bound(
            segments_.begin(), segments_.end(), t_ms,
            [](std::int64_t t, const segment& s) { return t < s.start_ms; });
        const segment* seg = &*std::prev(it);
        const singalong_window* win = nullptr;
        for (const auto& w : windows_)
            if (w.start_ms <= t_ms && t_ms < w.end_ms) {
                win = &w;
                break;
            }
        return {seg, win};
    }

private:
    void validate() const {
        if (segments_.empty())
            throw validation_error("timeline: no segments");
        for (const auto& s : segments_) {
            if (s.start_ms >= s.end_ms)
                throw validation_error("timeline: segment '" + s.id +
                                       "' has start_ms >= end_ms");
            if (s.kind == segment_kind::performance &&
                (!s.bpm || *s.bpm <= 0))
                throw validation_error("timeline: missing bpm in segment '" +
                                       s.id + "'");
        }
        for (std::size_t i = 1; i < segments_.size(); ++i) {
            const auto& a = segments_[i - 1];
            const auto& b = segments_[i];
            if (b.start_ms < a.end_ms)
                throw validation_error("timeline: overlap between '" + a.id +
                                       "' and '" + b.id + "'");
            if (b.start_ms > a.end_ms)
                throw validation_error("timeline: gap between '" + a.id +
                                       "' and '" + b.id + "'");
        }
        for (const auto& w : windows_) {
            if (w.start_ms >= w.end_ms)
                throw validation_error("timeline: window '" + w.id +
                                       "' has start_ms >= end_ms");
            if (w.patterns.empty())
                throw validation_error("timeline: window '" + w.id +
                                       "' has no patterns");
            bool inside = false;
            for (const auto& s : segments_)
                if (s.kind == segment_kind::performance &&
                    s.start_ms <= w.start_ms && w.end_ms <= s.end_ms) {
                    inside = true;
                    break;
                }
            if (!inside)
                throw validation_error("timeline: window '" + w.id +
                                       "' outside performance");
        }
    }

    std::vector<segment> segments_;
    std::vector<singalong_window> windows_;
};

inline concert_timeline load_timeline(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("segments"))
        throw parse_error("timeline: expected object with \"segments\"");
    std::vector<segment> segments;
    for (const auto& js : doc.at("segments")) {
        segment s;
        s.id = js.at("id").get<std::string>();
        s.start_ms = js.at("start_ms").get<std::int64_t>();
        s.end_ms = js.at("end_ms").get<std::int64_t>();
        std::string kind = js.at("kind").get<std::string>();
        if (kind == "performance")
            s.kind = segment_kind::performance;
        else if (kind == "conversation")
            s.kind = segment_kind::conversation;
        else
            throw parse_error("timeline: unknown segment kind '" + kind + "'");
        if (js.contains("bpm"))
            s.bpm = js.at("bpm").get<double>();
        segments.push_back(std::move(s));
    }
    std::vector<singalong_window> windows;
    if (doc.contains("singalong_windows")) {
        for (const auto& jw : doc.at("singalong_windows")) {
            singalong_window w;
            w.id = jw.at("id").get<std::string>();
            w.start_ms = jw.at("start_ms").get<std::int64_t>();
            w.end_ms = jw.at("end_ms").get<std::int64_t>();
            for (const auto& p : jw.at("patterns"))
                w.patterns.push_back(p.get<std::string>());
            for (const auto& p : w.patterns) {
                try {
                    w.compiled.emplace_back(
                        p, std::regex::ECMAScript | std::regex::icase);
                } catch (const std::regex_error& e) {
                    throw validation_error("timeline: bad pattern '" + p +
                                           "' in window '" + w.id +
                                           "': " + e.what());
                }
            }
            windows.push_back(std::move(w));
        }
    }
    return concert_timeline(std::move(segments), std::move(windows));
}

inline concert_timeline load_timeline_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open timeline file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("timeline: " + std::string(e.what()));
    }
    return load_timeline(doc);
}

inline nlohmann::ordered_json serialize_timeline(const concert_timeline& tl) {
    nlohmann::ordered_json doc;
    doc["segments"] = nlohmann::ordered_json::array();
    for (const auto& s : tl.segments()) {
        nlohmann::ordered_json js{{"id", s.id},
                                  {"start_ms", s.start_ms},
                                  {"end_ms", s.end_ms},
                                  {"kind", to_string(s.kind)}};
        if (s.bpm)
            js["bpm"] = *s.bpm;
        doc["segments"].push_back(std::move(js));
    }
    doc["singalong_windows"] = nlohmann::ordered_json::array();
    for (const auto& w : tl.windows()) {
        doc["singalong_windows"].push_back(
            nlohmann::ordered_json{{"id", w.id},
                                   {"start_ms", w.start_ms},
                                   {"end_ms", w.end_ms},
                                   {"patterns", w.patterns}});
    }
    return doc;
}

} // namespace encore
