#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "chat.hpp"
#include "errors.hpp"
#include "reactor.hpp"

namespace encore {

inline std::string fnv1a64_hex(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char b : data) {
        h ^= b;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

struct engine_config {
    // resolved absolute paths
    std::string chat_csv;
    std::string timeline;
    std::string lexicon;
    std::string label_bins;
    std::string mapping_table;

    csv_columns columns;
    reactor_params params;

    int n_avatars = 200;
    double variation_probability = 0.2;
    std::optional<std::uint64_t> seed; // absent: generated and printed
    double speed = 1.0;                // infinity = batch
    std::size_t queue_bound = 1000;

    std::string config_hash; // over behavior-relevant parameters
};

namespace detail {

// The hash covers the parameters that shape the event stream, in a pinned
// key order, serialized compactly. Raw JSON values are reused so that 120
// hashes as "120" while 120.0 hashes as "120.0" regardless of reader.
inline std::string hash_of(const nlohmann::json& doc) {
    auto pick = [&](const char* key, nlohmann::json fallback) {
        return doc.contains(key) ? doc.at(key) : fallback;
    };
    nlohmann::ordered_json h{
        {"tick_ms", pick("tick_ms", 1000)},
        {"surge_window", pick("surge_window", 5)},
        {"surge_threshold_z", pick("surge_threshold_z", 1.0)},
        {"surge_influence", pick("surge_influence", 0.0)},
        {"surge_sigma_floor", pick("surge_sigma_floor", 1.0)},
        {"singalong_threshold", pick("singalong_threshold", 0.3)},
        {"fast_bpm_threshold", pick("fast_bpm_threshold", 100.0)},
        {"cheer_refractory_ticks", pick("cheer_refractory_ticks", 5)},
        {"nominal_bpm", pick("nominal_bpm", 120)},
        {"n_avatars", pick("n_avatars", 200)},
        {"variation_probability", pick("variation_probability", 0.2)},
    };
    return fnv1a64_hex(h.dump());
}

} // namespace detail

inline engine_config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("config: " + std::string(e.what()));
    }
    if (!doc.is_object())
        throw parse_error("config: expected a JSON object");

    auto dir = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return (fp.is_absolute() ? fp : dir / fp).lexically_normal().string();
    };
    auto need_path = [&](const char* key) {
        if (!doc.contains(key))
            throw validation_error(std::string("config: missing \"") + key +
                                   "\"");
        return resolve(doc.at(key).get<std::string>());
    };

    engine_config cfg;
    cfg.chat_csv = need_path("chat_csv");
    cfg.timeline = need_path("timeline");
    cfg.lexicon = need_path("lexicon");
    cfg.label_bins = need_path("label_bins");
    cfg.mapping_table = need_path("mapping_table");

    if (doc.contains("csv_columns")) {
        const auto& c = doc.at("csv_columns");
        if (c.contains("time"))
            cfg.columns.time = c.at("time").get<std::string>();
        if (c.contains("author"))
            cfg.columns.author = c.at("author").get<std::string>();
        if (c.contains("message"))
            cfg.columns.message = c.at("message").get<std::string>();
    }

    auto num = [&](const char* key, double fallback) {
        return doc.contains(key) ? doc.at(key).get<double>() : fallback;
    };
    cfg.params.tick_ms = static_cast<std::int64_t>(num("tick_ms", 1000));
    cfg.params.nominal_bpm = num("nominal_bpm", 120);
    cfg.params.fast_bpm_threshold = num("fast_bpm_threshold", 100.0);
    cfg.params.cheer_refractory_ticks =
        static_cast<int>(num("cheer_refractory_ticks", 5));
    cfg.params.surge_window =
        static_cast<std::size_t>(num("surge_window", 5));
    cfg.params.surge_threshold_z = num("surge_threshold_z", 1.0);
    cfg.params.surge_influence = num("surge_influence", 0.0);
    cfg.params.surge_sigma_floor = num("surge_sigma_floor", 1.0);
    cfg.params.singalong_threshold = num("singalong_threshold", 0.3);
    cfg.n_avatars = static_cast<int>(num("n_avatars", 200));
    cfg.variation_probability = num("variation_probability", 0.2);
    cfg.queue_bound = static_cast<std::size_t>(num("queue_bound", 1000));

    if (cfg.params.tick_ms <= 0)
        throw validation_error("config: tick_ms must be positive");
    if (cfg.n_avatars <= 0)
        throw validation_error("config: n_avatars must be positive");
    if (cfg.params.nominal_bpm <= 0)
        throw validation_error("config: nominal_bpm must be positive");
    if (cfg.params.cheer_refractory_ticks < 0)
        throw validation_error(
            "config: cheer_refractory_ticks must be nonnegative");

    if (doc.contains("seed"))
        cfg.seed = doc.at("seed").get<std::uint64_t>();

    if (doc.contains("speed")) {
        const auto& s = doc.at("speed");
        if (s.is_string()) {
            if (s.get<std::string>() != "inf")
                throw validation_error("config: speed must be a number or "
                                       "\"inf\"");
            cfg.speed = std::numeric_limits<double>::infinity();
        } else {
            cfg.speed = s.get<double>();
            if (!(cfg.speed > 0))
                throw validation_error("config: speed must be positive");
        }
    }

    cfg.config_hash = detail::hash_of(doc);
    return cfg;
}

// Seeds absent from config/flags are generated here so runs stay
// reproducible once the printed value is reused.
inline std::uint64_t ensure_seed(engine_config& cfg) {
    if (!cfg.seed) {
        std::random_device rd;
        cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    return *cfg.seed;
}

} // namespace encore
