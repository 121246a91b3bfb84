#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <encore/timeline.hpp>

using namespace encore;
using nlohmann::json;

namespace {

concert_timeline from_doc(const json& doc) { return load_timeline(doc); }

json seg(const char* id, std::int64_t a, std::int64_t b, const char* kind,
         double bpm = 0) {
    json j{{"id", id}, {"start_ms", a}, {"end_ms", b}, {"kind", kind}};
    if (bpm > 0)
        j["bpm"] = bpm;
    return j;
}

} // namespace

TEST_CASE("minimal valid timeline loads") {
    json doc{{"segments", {seg("s", 0, 600000, "performance", 120)}}};
    auto tl = from_doc(doc);
    CHECK(tl.segments().size() == 1);
    CHECK(tl.end_ms() == 600000);
}

TEST_CASE("overlapping segments rejected") {
    json doc{{"segments",
              {seg("a", 0, 10000, "performance", 120),
               seg("b", 9000, 20000, "conversation")}}};
    CHECK_THROWS_MATCHES(from_doc(doc), validation_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("overlap")));
}

TEST_CASE("gaps between segments rejected") {
    json doc{{"segments",
              {seg("a", 0, 10000, "performance", 120),
               seg("b", 11000, 20000, "conversation")}}};
    CHECK_THROWS_MATCHES(from_doc(doc), validation_error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("gap")));
}

TEST_CASE("window inside a conversation segment rejected") {
    json doc{{"segments",
              {seg("a", 0, 10000, "conversation"),
               seg("b", 10000, 20000, "performance", 100)}},
             {"singalong_windows",
              {{{"id", "w"},
                {"start_ms", 5000},
                {"end_ms", 8000},
                {"patterns", {"la la"}}}}}};
    CHECK_THROWS_MATCHES(
        from_doc(doc), validation_error,
        Catch::Matchers::MessageMatches(
            Catch::Matchers::ContainsSubstring("outside performance")));
}

TEST_CASE("performance without bpm rejected") {
    json doc{{"segments", {seg("a", 0, 10000, "performance")}}};
    CHECK_THROWS_MATCHES(
        from_doc(doc), validation_error,
        Catch::Matchers::MessageMatches(
            Catch::Matchers::ContainsSubstring("missing bpm")));
}

TEST_CASE("empty pattern list rejected") {
    json doc{{"segments", {seg("a", 0, 10000, "performance", 120)}},
             {"singalong_windows",
              {{{"id", "w"},
                {"start_ms", 1000},
                {"end_ms", 2000},
                {"patterns", json::array()}}}}};
    CHECK_THROWS_AS(from_doc(doc), validation_error);
}

TEST_CASE("invalid regex pattern is a load-time error") {
    json doc{{"segments", {seg("a", 0, 10000, "performance", 120)}},
             {"singalong_windows",
              {{{"id", "w"},
                {"start_ms", 1000},
                {"end_ms", 2000},
                {"patterns", {"[unclosed"}}}}}};
    CHECK_THROWS_AS(from_doc(doc), validation_error);
}

TEST_CASE("phase_at half-open boundaries") {
    json doc{{"segments",
              {seg("a", 0, 10000, "performance", 120),
               seg("b", 10000, 20000, "conversation")}}};
    auto tl = from_doc(doc);
    CHECK(tl.phase_at(0).seg->id == "a");
    CHECK(tl.phase_at(9999).seg->id == "a");
    CHECK(tl.phase_at(10000).seg->id == "b"); // end belongs to the next
    CHECK_THROWS_AS(tl.phase_at(20000), out_of_range_error);
    CHECK_THROWS_AS(tl.phase_at(-1), out_of_range_error);
}

TEST_CASE("phase_at reports the containing window") {
    json doc{{"segments", {seg("a", 0, 10000, "performance", 120)}},
             {"singalong_windows",
              {{{"id", "w"},
                {"start_ms", 2000},
                {"end_ms", 4000},
                {"patterns", {"la"}}}}}};
    auto tl = from_doc(doc);
    CHECK(tl.phase_at(1999).window == nullptr);
    REQUIRE(tl.phase_at(2000).window != nullptr);
    CHECK(tl.phase_at(2000).window->id == "w");
    CHECK(tl.phase_at(3999).window != nullptr);
    CHECK(tl.phase_at(4000).window == nullptr);
}

TEST_CASE("match_lyric is case-insensitive and substring-based") {
    json doc{{"segments", {seg("a", 0, 10000, "performance", 120)}},
             {"singalong_windows",
              {{{"id", "w"},
                {"start_ms", 0},
                {"end_ms", 10000},
                {"patterns", {"we are the light"}}}}}};
    auto tl = from_doc(doc);
    const auto& w = tl.windows().front();
    CHECK(match_lyric("WE ARE THE LIGHT tonight", w));
    CHECK(match_lyric("singing we are the light!!", w));
    CHECK_FALSE(match_lyric("unrelated text", w));
}

TEST_CASE("phase_at is total and unique over random valid timelines") {
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 200; ++iter) {
        int n = 1 + static_cast<int>(rng() % 8);
        json segs = json::array();
        std::int64_t t = 0;
        for (int i = 0; i < n; ++i) {
            std::int64_t len = 1000 + static_cast<std::int64_t>(rng() % 9000);
            bool perf = rng() % 2 == 0;
            segs.push_back(seg(("s" + std::to_string(i)).c_str(), t, t + len,
                               perf ? "performance" : "conversation",
                               perf ? 80.0 + rng() % 100 : 0.0));
            t += len;
        }
        auto tl = from_doc(json{{"segments", segs}});
        for (int probe = 0; probe < 50; ++probe) {
            auto q = static_cast<std::int64_t>(rng() % t);
            auto ph = tl.phase_at(q);
            REQUIRE(ph.seg != nullptr);
            CHECK(ph.seg->start_ms <= q);
            CHECK(q < ph.seg->end_ms);
        }
        // serialize and reload: identity on the observable structure
        auto reloaded = load_timeline(serialize_timeline(tl));
        REQUIRE(reloaded.segments().size() == tl.segments().size());
        for (std::size_t i = 0; i < tl.segments().size(); ++i) {
            CHECK(reloaded.segments()[i].id == tl.segments()[i].id);
            CHECK(reloaded.segments()[i].start_ms ==
                  tl.segments()[i].start_ms);
            CHECK(reloaded.segments()[i].end_ms == tl.segments()[i].end_ms);
            CHECK(reloaded.segments()[i].kind == tl.segments()[i].kind);
            CHECK(reloaded.segments()[i].bpm == tl.segments()[i].bpm);
        }
    }
}

TEST_CASE("bundled fixture timeline loads") {
    auto tl = load_timeline_file(std::string(ENCORE_SOURCE_DIR) +
                                 "/data/fixtures/concert60/timeline.json");
    CHECK(tl.start_ms() == 0);
    CHECK(tl.end_ms() == 60000);
    CHECK(tl.windows().size() == 2);
}
