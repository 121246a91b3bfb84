#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "chat.hpp"
#include "errors.hpp"
#include "text.hpp"

namespace encore {

enum class level : int { low = 0, neutral = 1, high = 2 };

inline const char* to_string(level l) {
    switch (l) {
    case level::low: return "low";
    case level::neutral: return "neutral";
    default: return "high";
    }
}

inline level level_from_string(const std::string& s) {
    if (s == "low") return level::low;
    if (s == "neutral") return level::neutral;
    if (s == "high") return level::high;
    throw validation_error("unknown level '" + s + "'");
}

struct emotion_bin {
    level arousal = level::neutral;
    level valence = level::neutral;

    bool operator==(const emotion_bin&) const = default;
    int index() const {
        return static_cast<int>(arousal) * 3 + static_cast<int>(valence);
    }
};

// Term -> label map. Insertion order doubles as the classify tie-break
// precedence, so entries are kept in file order.
class lexicon {
public:
    explicit lexicon(const nlohmann::ordered_json& doc) {
        if (!doc.is_object())
            throw parse_error("lexicon: expected a JSON object");
        for (const auto& [term, label] : doc.items()) {
            if (term.empty())
                throw validation_error("lexicon: empty term");
            if (!label.is_string())
                throw parse_error("lexicon: label for '" + term +
                                  "' is not a string");
            if (index_.count(term))
                throw validation_error("lexicon: duplicate term '" + term +
                                       "'");
            index_[term] = entries_.size();
            entries_.emplace_back(term, label.get<std::string>());
        }
    }

    static lexicon from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw io_error("cannot open lexicon file: " + path);
        nlohmann::ordered_json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("lexicon: " + std::string(e.what()));
        }
        return lexicon(doc);
    }

    // Index into file order, or nullopt when the term is unknown.
    std::optional<std::size_t> find(const std::string& term) const {
        auto it = index_.find(term);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }

    const std::string& label_at(std::size_t i) const {
        return entries_[i].second;
    }
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

class label_bin_map {
public:
    explicit label_bin_map(const nlohmann::json& doc) {
        if (!doc.is_object())
            throw parse_error("label bins: expected a JSON object");
        for (const auto& [label, bin] : doc.items()) {
            emotion_bin b;
            b.arousal = level_from_string(bin.at("arousal").get<std::string>());
            b.valence = level_from_string(bin.at("valence").get<std::string>());
            bins_[label] = b;
        }
    }

    static label_bin_map from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw io_error("cannot open label-bin file: " + path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw parse_error("label bins: " + std::string(e.what()));
        }
        return label_bin_map(doc);
    }

    emotion_bin bin_of(const std::string& label) const {
        auto it = bins_.find(label);
        if (it == bins_.end())
            throw validation_error("no bin for label '" + label + "'");
        return it->second;
    }

    bool contains(const std::string& label) const {
        return bins_.count(label) != 0;
    }
    std::size_t size() const { return bins_.size(); }

    // Startup check: every label the lexicon can produce must have a bin.
    void validate_against(const lexicon& lex) const {
        for (const auto& [term, label] : lex.entries())
            if (!contains(label))
                throw validation_error("lexicon label '" + label +
                                       "' (term '" + term +
                                       "') has no bin mapping");
    }

private:
    std::unordered_map<std::string, emotion_bin> bins_;
};

// Highest per-label hit count wins; ties go to the label whose earliest
// matched term comes first in the lexicon.
inline std::optional<std::string> classify(const std::string& text,
                                           const lexicon& lex) {
    struct tally {
        int hits = 0;
        std::size_t first_order = 0;
    };
    std::unordered_map<std::string, tally> hits;
    for (const auto& token : tokenize(text)) {
        auto idx = lex.find(token);
        if (!idx)
            continue;
        const std::string& label = lex.label_at(*idx);
        auto [it, fresh] = hits.try_emplace(label, tally{0, *idx});
        it->second.hits += 1;
        if (*idx < it->second.first_order)
            it->second.first_order = *idx;
    }
    if (hits.empty())
        return std::nullopt;
    const std::string* best = nullptr;
    tally best_t;
    for (const auto& [label, t] : hits) {
        if (!best || t.hits > best_t.hits ||
            (t.hits == best_t.hits && t.first_order < best_t.first_order)) {
            best = &label;
            best_t = t;
        }
    }
    return *best;
}

// Carries the previous bin across ticks: hold for up to `hold_ticks`
// consecutive unclassifiable ticks, then decay to (neutral, neutral).
class dominant_tracker {
public:
    explicit dominant_tracker(int hold_ticks = 5) : hold_ticks_(hold_ticks) {}

    emotion_bin step(const tick_batch& batch, const lexicon& lex,
                     const label_bin_map& map) {
        std::array<int, 9> counts{};
        bool any = false;
        for (const auto& m : batch.messages) {
            auto label = classify(m.text, lex);
            if (!label)
                continue;
            counts[map.bin_of(*label).index()] += 1;
            any = true;
        }
        if (!any) {
            ++empty_ticks_;
            if (empty_ticks_ > hold_ticks_)
                previous_ = emotion_bin{};
            return previous_;
        }
        empty_ticks_ = 0;
        // mode; ties prefer high valence, then high arousal
        int best = -1;
        for (int a = 0; a < 3; ++a)
            for (int v = 0; v < 3; ++v) {
                int i = a * 3 + v;
                if (counts[i] == 0)
                    continue;
                if (best < 0 || counts[i] > counts[best])
                    best = i;
                else if (counts[i] == counts[best]) {
                    int bv = best % 3, ba = best / 3;
                    if (v > bv || (v == bv && a > ba))
                        best = i;
                }
            }
        previous_ = emotion_bin{static_cast<level>(best / 3),
                                static_cast<level>(best % 3)};
        return previous_;
    }

    emotion_bin current() const { return previous_; }

private:
    int hold_ticks_;
    emotion_bin previous_{};
    int empty_ticks_ = 0;
};

} // namespace encore
