#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include <encore/event_log.hpp>

using namespace encore;

TEST_CASE("header line is byte-stable") {
    CHECK(log_header(42, "375b8c0b6131c450").dump() ==
          R"({"seed":42,"config_hash":"375b8c0b6131c450"})");
}

TEST_CASE("tick line key order and float formatting") {
    tick_output out;
    out.t_ms = 7000;
    out.rate = 4.0;
    out.bin = {level::high, level::neutral};
    CHECK(log_tick(out).dump() ==
          R"({"t_ms":7000,"kind":"tick","rate":4.0,"arousal":"high","valence":"neutral"})");
    out.rate = 2.5;
    CHECK(log_tick(out).dump().find("\"rate\":2.5") != std::string::npos);
    out.rate = 0.0;
    CHECK(log_tick(out).dump().find("\"rate\":0.0") != std::string::npos);
}

TEST_CASE("movement line") {
    reaction_event ev;
    ev.kind = reaction_event::type::movement;
    ev.t_ms = 20000;
    ev.movement = movement_kind::hand_clap;
    ev.rate = 1.0;
    CHECK(log_event(ev).dump() ==
          R"({"t_ms":20000,"kind":"movement","movement":"hand_clap","playback_rate":1.0})");
    ev.movement = movement_kind::disappointed;
    ev.rate = 0.75;
    CHECK(log_event(ev).dump() ==
          R"({"t_ms":20000,"kind":"movement","movement":"disappointed","playback_rate":0.75})");
    ev.movement = movement_kind::arm_shake_back_forth;
    ev.rate = 1.1;
    CHECK(log_event(ev).dump() ==
          R"({"t_ms":20000,"kind":"movement","movement":"arm_shake_back_forth","playback_rate":1.1})");
}

TEST_CASE("cheer line") {
    reaction_event ev;
    ev.kind = reaction_event::type::cheer;
    ev.t_ms = 6000;
    ev.cheer = cheer_kind::loud_cheer;
    CHECK(log_event(ev).dump() ==
          R"({"t_ms":6000,"kind":"cheer","cheer":"loud_cheer"})");
}

TEST_CASE("singalong line omits the wire-only expiry hint") {
    reaction_event ev;
    ev.kind = reaction_event::type::singalong;
    ev.t_ms = 13000;
    ev.window_id = "opener-chorus";
    ev.window_end_ms = 15000;
    CHECK(log_event(ev).dump() ==
          R"({"t_ms":13000,"kind":"singalong","window_id":"opener-chorus"})");
}

TEST_CASE("writer puts the tick line before its events") {
    std::ostringstream out;
    log_writer w(out);
    w.header(7, "abc");
    tick_output t;
    t.t_ms = 0;
    t.rate = 1.0;
    reaction_event ev;
    ev.kind = reaction_event::type::movement;
    ev.t_ms = 0;
    ev.movement = movement_kind::idle;
    ev.rate = 1.0;
    t.events.push_back(ev);
    w.tick(t);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == R"({"seed":7,"config_hash":"abc"})");
    std::getline(lines, line);
    CHECK(line.find("\"kind\":\"tick\"") != std::string::npos);
    std::getline(lines, line);
    CHECK(line.find("\"kind\":\"movement\"") != std::string::npos);
    CHECK_FALSE(std::getline(lines, line));
}

TEST_CASE("golden log header parses back to the run identity") {
    std::ifstream in(std::string(ENCORE_SOURCE_DIR) +
                     "/tests/golden/concert60.ndjson");
    REQUIRE(in.good());
    std::string first;
    std::getline(in, first);
    auto doc = nlohmann::json::parse(first);
    CHECK(doc.at("seed") == 42);
    CHECK(doc.at("config_hash") == "375b8c0b6131c450");
}
