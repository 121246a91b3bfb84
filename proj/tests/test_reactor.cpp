#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>
#include <vector>

#include <encore/reactor.hpp>

using namespace encore;

namespace {

std::string repo_path(const char* rel) {
    return std::string(ENCORE_SOURCE_DIR) + "/" + rel;
}

nlohmann::json table_doc() {
    std::ifstream in(repo_path("data/mapping_table.json"));
    nlohmann::json doc;
    in >> doc;
    return doc;
}

mapping_table shipped_table() { return mapping_table(table_doc()); }

lexicon tiny_lexicon() {
    nlohmann::ordered_json doc;
    doc["yay"] = "joy";
    doc["zzz"] = "boredom";
    return lexicon(doc);
}

label_bin_map tiny_bins() {
    return label_bin_map(nlohmann::json::parse(R"({
        "joy":     {"arousal":"high", "valence":"high"},
        "boredom": {"arousal":"low",  "valence":"low"}
    })"));
}

tick_batch batch_at(std::int64_t tick, std::vector<std::string> texts) {
    tick_batch b;
    b.tick_index = tick;
    for (auto& t : texts)
        b.messages.push_back({tick * 1000, "a", std::move(t)});
    return b;
}

concert_timeline conversation_only() {
    return load_timeline(nlohmann::json::parse(R"({
        "segments": [{"id":"talk","start_ms":0,"end_ms":60000,
                      "kind":"conversation"}]
    })"));
}

concert_timeline performance_only() {
    return load_timeline(nlohmann::json::parse(R"({
        "segments": [{"id":"song","start_ms":0,"end_ms":60000,
                      "kind":"performance","bpm":132}]
    })"));
}

} // namespace

TEST_CASE("movement table lookups") {
    auto table = shipped_table();
    emotion_bin hh{level::high, level::high};
    emotion_bin nn{level::neutral, level::neutral};
    emotion_bin nl{level::neutral, level::low};
    emotion_bin lh{level::low, level::high};

    CHECK(table.select_movement(segment_kind::performance, tempo_class::fast,
                                hh) == movement_kind::arm_shake_back_forth);
    CHECK(table.select_movement(segment_kind::performance, tempo_class::slow,
                                hh) == movement_kind::arm_shake_side_by_side);
    CHECK(table.select_movement(segment_kind::performance, tempo_class::fast,
                                nn) == movement_kind::idle);
    CHECK(table.select_movement(segment_kind::conversation, std::nullopt,
                                nn) == movement_kind::hand_clap);
    CHECK(table.select_movement(segment_kind::conversation, std::nullopt,
                                nl) == movement_kind::disappointed);
    CHECK(table.select_movement(segment_kind::conversation, std::nullopt,
                                lh) == movement_kind::idle);
}

TEST_CASE("cheer table lookups") {
    auto table = shipped_table();
    CHECK(table.select_cheer({level::high, level::high}) ==
          cheer_kind::loud_cheer);
    CHECK(table.select_cheer({level::neutral, level::neutral}) ==
          cheer_kind::applause);
    CHECK(table.select_cheer({level::neutral, level::high}) ==
          cheer_kind::applause);
    CHECK(table.select_cheer({level::high, level::low}) == cheer_kind::groan);
    CHECK(table.select_cheer({level::low, level::low}) == cheer_kind::groan);
    CHECK(table.select_cheer({level::low, level::high}) == cheer_kind::none);
    CHECK(table.select_cheer({level::high, level::neutral}) ==
          cheer_kind::none);
}

TEST_CASE("mapping rules must be total") {
    auto doc = table_doc();
    doc["movement_rules"].erase(0);
    CHECK_THROWS_AS(mapping_table(doc), validation_error);
    doc = table_doc();
    doc["cheer_rules"].erase(3);
    CHECK_THROWS_AS(mapping_table(doc), validation_error);
}

TEST_CASE("duplicate mapping rules are rejected") {
    auto doc = table_doc();
    doc["movement_rules"].push_back(doc["movement_rules"][0]);
    CHECK_THROWS_AS(mapping_table(doc), validation_error);
    doc = table_doc();
    doc["cheer_rules"].push_back(doc["cheer_rules"][0]);
    CHECK_THROWS_AS(mapping_table(doc), validation_error);
}

TEST_CASE("conversation rules take no tempo") {
    auto doc = table_doc();
    for (auto& r : doc["movement_rules"])
        if (r["phase"] == "conversation") {
            r["tempo"] = "fast";
            break;
        }
    CHECK_THROWS_AS(mapping_table(doc), validation_error);
}

TEST_CASE("playback rate follows segment bpm in performance") {
    CHECK(playback_rate(segment_kind::performance, 120.0, 120.0) == 1.0);
    CHECK(playback_rate(segment_kind::performance, 132.0, 120.0) ==
          Catch::Approx(1.1));
    CHECK(playback_rate(segment_kind::performance, 90.0, 120.0) ==
          Catch::Approx(0.75));
}

TEST_CASE("playback rate clamps to [0.5, 2.0]") {
    CHECK(playback_rate(segment_kind::performance, 30.0, 120.0) == 0.5);
    CHECK(playback_rate(segment_kind::performance, 600.0, 120.0) == 2.0);
}

TEST_CASE("conversation playback rate is exactly 1.0") {
    CHECK(playback_rate(segment_kind::conversation, std::nullopt, 120.0) ==
          1.0);
    CHECK(playback_rate(segment_kind::conversation, 240.0, 120.0) == 1.0);
}

TEST_CASE("first tick always emits a movement") {
    auto tl = conversation_only();
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);
    auto out = r.process_tick(batch_at(0, {}));
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].kind == reaction_event::type::movement);
    CHECK(out.events[0].movement == movement_kind::hand_clap);
    CHECK(out.events[0].rate == 1.0);
    // unchanged state stays quiet
    out = r.process_tick(batch_at(1, {}));
    CHECK(out.events.empty());
}

TEST_CASE("movement events fire only on change") {
    auto tl = conversation_only();
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);
    r.process_tick(batch_at(0, {}));                    // hand_clap
    auto out = r.process_tick(batch_at(1, {"zzz"}));    // LL -> disappointed
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].movement == movement_kind::disappointed);
    out = r.process_tick(batch_at(2, {"zzz", "zzz"})); // still disappointed
    CHECK(out.events.empty());
}

TEST_CASE("a rate change alone re-emits the movement") {
    // two adjacent performance segments at different bpm, same movement kind
    auto tl = load_timeline(nlohmann::json::parse(R"({
        "segments": [
          {"id":"a","start_ms":0,"end_ms":5000,"kind":"performance","bpm":120},
          {"id":"b","start_ms":5000,"end_ms":10000,"kind":"performance","bpm":132}
        ]
    })"));
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);
    auto out = r.process_tick(batch_at(0, {}));
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].movement == movement_kind::idle);
    CHECK(out.events[0].rate == 1.0);
    for (std::int64_t t = 1; t < 5; ++t)
        CHECK(r.process_tick(batch_at(t, {})).events.empty());
    out = r.process_tick(batch_at(5, {}));
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].movement == movement_kind::idle);
    CHECK(out.events[0].rate == Catch::Approx(1.1));
}

TEST_CASE("surge emits movement before cheer and respects the refractory") {
    auto tl = conversation_only();
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);

    // quiet ticks lean bored (LL -> disappointed); spikes flip to HH so a
    // movement change and a cheer land on the same tick
    auto spike = [&](std::int64_t tick) {
        return batch_at(tick, std::vector<std::string>(20, "yay"));
    };
    auto quiet = [&](std::int64_t tick) {
        return batch_at(tick, {"zzz", "zzz"});
    };

    for (std::int64_t t = 0; t < 5; ++t)
        r.process_tick(quiet(t)); // warm-up; tick 0 emits disappointed

    auto out = r.process_tick(spike(5));
    CHECK(out.surge);
    REQUIRE(out.events.size() == 2);
    CHECK(out.events[0].kind == reaction_event::type::movement);
    CHECK(out.events[0].movement == movement_kind::idle);
    CHECK(out.events[1].kind == reaction_event::type::cheer);
    CHECK(out.events[1].cheer == cheer_kind::loud_cheer);

    r.process_tick(quiet(6)); // z falls, surge episode ends
    out = r.process_tick(spike(7));
    CHECK(out.surge); // new rising edge, but inside the 5-tick refractory
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].kind == reaction_event::type::movement);

    r.process_tick(quiet(8));
    r.process_tick(quiet(9));
    out = r.process_tick(spike(10)); // 10 - 5 >= 5: allowed again
    CHECK(out.surge);
    REQUIRE(out.events.size() == 2);
    CHECK(out.events[1].cheer == cheer_kind::loud_cheer);
}

TEST_CASE("suppressed cheers do not reset the refractory clock") {
    auto tl = conversation_only();
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);
    for (std::int64_t t = 0; t < 5; ++t)
        r.process_tick(batch_at(t, {"yay"}));
    auto out = r.process_tick(
        batch_at(5, std::vector<std::string>(20, "yay")));
    REQUIRE(out.events.size() == 1); // cheer at tick 5
    r.process_tick(batch_at(6, {"yay"}));
    out = r.process_tick(batch_at(7, std::vector<std::string>(25, "yay")));
    CHECK(out.surge);
    CHECK(out.events.empty()); // suppressed; must NOT move the clock forward
    r.process_tick(batch_at(8, {"yay"}));
    r.process_tick(batch_at(9, {"yay"}));
    out = r.process_tick(batch_at(10, std::vector<std::string>(30, "yay")));
    REQUIRE(out.events.size() == 1); // measured from tick 5, not tick 7
    CHECK(out.events[0].cheer == cheer_kind::loud_cheer);
}

TEST_CASE("singalong event carries the window id and end") {
    auto tl = load_timeline(nlohmann::json::parse(R"({
        "segments": [
          {"id":"song","start_ms":0,"end_ms":20000,"kind":"performance","bpm":132}
        ],
        "singalong_windows": [
          {"id":"hook","start_ms":5000,"end_ms":15000,"patterns":["sing it"]}
        ]
    })"));
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);
    // steady 4 msg/s baseline so the lyric burst is not also a rate surge
    for (std::int64_t t = 0; t < 5; ++t)
        r.process_tick(batch_at(t, {"nah", "nah", "nah", "nah"}));
    auto out = r.process_tick(
        batch_at(5, {"SING IT loud", "sing it", "sing it", "nah"}));
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].kind == reaction_event::type::singalong);
    CHECK(out.events[0].window_id == "hook");
    CHECK(out.events[0].window_end_ms == 15000);
    // once per run
    out = r.process_tick(batch_at(6, {"sing it", "sing it"}));
    CHECK(out.events.empty());
}

TEST_CASE("an empty stream on a performance timeline emits one idle") {
    auto tl = performance_only();
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);
    std::size_t events = 0;
    for (std::int64_t t = 0; t < 60; ++t) {
        auto out = r.process_tick(batch_at(t, {}));
        CHECK(out.bin == emotion_bin{level::neutral, level::neutral});
        CHECK_FALSE(out.surge);
        if (t == 0) {
            REQUIRE(out.events.size() == 1);
            CHECK(out.events[0].movement == movement_kind::idle);
            CHECK(out.events[0].rate == Catch::Approx(1.1));
        }
        events += out.events.size();
    }
    CHECK(events == 1);
}

TEST_CASE("tick output reports rate in messages per second") {
    auto tl = conversation_only();
    auto lex = tiny_lexicon();
    auto bins = tiny_bins();
    auto table = shipped_table();
    reactor r(tl, lex, bins, table);
    auto out = r.process_tick(batch_at(0, {"a", "b", "c"}));
    CHECK(out.rate == Catch::Approx(3.0));
    CHECK(out.t_ms == 0);
    out = r.process_tick(batch_at(1, {}));
    CHECK(out.rate == 0.0);
    CHECK(out.t_ms == 1000);
}
