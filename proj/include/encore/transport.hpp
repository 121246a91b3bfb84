#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "crowd.hpp"
#include "errors.hpp"
#include "event_log.hpp"
#include "reactor.hpp"

namespace encore {

namespace net = boost::asio;
using tcp_socket = net::ip::tcp::socket;
template <class T>
using ws_stream = boost::beast::websocket::stream<T>;

// ---- wire frames -----------------------------------------------------

inline nlohmann::ordered_json frame_hello(const std::string& client) {
    return {{"v", 1}, {"type", "hello"}, {"client", client}};
}

struct welcome_info {
    std::int64_t tick_ms = 1000;
    int n_avatars = 200;
    std::uint64_t seed = 0;
    std::string config_hash;
};

inline nlohmann::ordered_json frame_welcome(const welcome_info& w) {
    return {{"v", 1},
            {"type", "welcome"},
            {"tick_ms", w.tick_ms},
            {"n_avatars", w.n_avatars},
            {"seed", w.seed},
            {"config_hash", w.config_hash}};
}

inline nlohmann::ordered_json frame_tick(const tick_output& out) {
    return {{"v", 1},
            {"type", "tick"},
            {"t_ms", out.t_ms},
            {"rate", out.rate},
            {"arousal", to_string(out.bin.arousal)},
            {"valence", to_string(out.bin.valence)},
            {"surge", out.surge}};
}

inline nlohmann::ordered_json frame_reaction(const reaction_event& ev) {
    nlohmann::ordered_json f{{"v", 1}, {"type", "reaction"}, {"t_ms", ev.t_ms}};
    switch (ev.kind) {
    case reaction_event::type::movement:
        f["kind"] = "movement";
        f["movement"] = to_string(ev.movement);
        f["playback_rate"] = ev.rate;
        break;
    case reaction_event::type::cheer:
        f["kind"] = "cheer";
        f["cheer"] = to_string(ev.cheer);
        break;
    case reaction_event::type::singalong:
        f["kind"] = "singalong";
        f["window_id"] = ev.window_id;
        f["until_ms"] = ev.window_end_ms; // sound expiry hint
        break;
    }
    return f;
}

inline nlohmann::ordered_json frame_bye(std::int64_t t_ms) {
    return {{"v", 1}, {"type", "bye"}, {"t_ms", t_ms}};
}

// ---- server ----------------------------------------------------------

// Thread-per-client broadcast server. The tick loop never blocks on a
// client: frames go through bounded per-session queues and a session that
// falls behind the bound is dropped.
class ws_server {
public:
    ws_server(std::uint16_t port, welcome_info info,
              std::size_t queue_bound = 1000)
        : info_(info), queue_bound_(queue_bound),
          acceptor_(ioc_, {net::ip::make_address("127.0.0.1"), port}) {
        join_.t_ms = 0;
        join_.movement = movement_kind::idle;
        join_.playback_rate = 1.0;
        join_.since_ms = 0;
        join_.bin = emotion_bin{};
    }

    ~ws_server() { stop(); }

    std::uint16_t port() const {
        return acceptor_.local_endpoint().port();
    }

    void start() {
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    std::size_t client_count() {
        std::lock_guard lock(mutex_);
        std::size_t n = 0;
        for (const auto& s : sessions_)
            if (!s->dead)
                ++n;
        return n;
    }

    void wait_for_clients(std::size_t n) {
        std::unique_lock lock(mutex_);
        joined_cv_.wait(lock, [&] {
            std::size_t alive = 0;
            for (const auto& s : sessions_)
                if (!s->dead)
                    ++alive;
            return alive >= n;
        });
    }

    // One engine tick: the tick frame, then its reaction frames, then the
    // join-state update, all under one lock so late joiners see a
    // consistent boundary.
    void broadcast_tick(const tick_output& out) {
        std::vector<std::string> frames;
        frames.push_back(frame_tick(out).dump());
        for (const auto& ev : out.events)
            frames.push_back(frame_reaction(ev).dump());
        std::lock_guard lock(mutex_);
        for (auto& s : sessions_)
            push_frames(*s, frames);
        reap_locked();
        // advance the join state past this tick
        join_.t_ms = out.t_ms + info_.tick_ms;
        join_.bin = out.bin;
        for (const auto& ev : out.events) {
            switch (ev.kind) {
            case reaction_event::type::movement:
                join_.movement = ev.movement;
                join_.playback_rate = ev.rate;
                join_.since_ms = ev.t_ms;
                break;
            case reaction_event::type::cheer:
                join_.sounds.push_back(
                    {to_string(ev.cheer), ev.t_ms + 4000});
                break;
            case reaction_event::type::singalong:
                join_.sounds.push_back({"singalong", ev.window_end_ms});
                break;
            }
        }
        auto expired = [&](const active_sound& s) {
            return s.until_ms <= join_.t_ms;
        };
        join_.sounds.erase(
            std::remove_if(join_.sounds.begin(), join_.sounds.end(), expired),
            join_.sounds.end());
    }

    void finish(std::int64_t bye_t_ms) {
        std::string bye = frame_bye(bye_t_ms).dump();
        {
            std::lock_guard lock(mutex_);
            for (auto& s : sessions_) {
                push_frames(*s, {bye});
                std::lock_guard qlock(s->mutex);
                s->closing = true;
                s->cv.notify_all();
            }
        }
        // give writers a moment to drain before tearing sockets down
        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::seconds(5);
        while (std::chrono::steady_clock::now() < deadline) {
            bool drained = true;
            {
                std::lock_guard lock(mutex_);
                for (const auto& s : sessions_) {
                    std::lock_guard qlock(s->mutex);
                    if (!s->dead && (!s->queue.empty() || s->writing))
                        drained = false;
                }
            }
            if (drained)
                break;
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        stop();
    }

    void stop() {
        if (stopped_.exchange(true))
            return;
        boost::beast::error_code ec;
        {
            // closing the acceptor does not wake a blocked accept, so poke
            // it with a throwaway connection first
            tcp_socket poke(ioc_);
            auto ep = acceptor_.local_endpoint(ec);
            if (!ec)
                poke.connect(ep, ec);
        }
        acceptor_.close(ec);
        if (accept_thread_.joinable())
            accept_thread_.join();
        std::vector<std::shared_ptr<session>> doomed;
        {
            std::lock_guard lock(mutex_);
            doomed = all_;
            all_.clear();
            sessions_.clear();
        }
        for (auto& s : doomed) {
            {
                std::lock_guard qlock(s->mutex);
                s->closing = true;
                // unblocks writers mid-write and greeters stuck in read
                s->ws.next_layer().shutdown(tcp_socket::shutdown_both, ec);
                s->cv.notify_all();
            }
            if (s->thread.joinable())
                s->thread.join();
        }
    }

private:
    struct session {
        explicit session(tcp_socket socket) : ws(std::move(socket)) {}
        ws_stream<tcp_socket> ws;
        std::thread thread;
        std::mutex mutex;
        std::condition_variable cv;
        std::deque<std::string> queue;
        bool dead = false;
        bool closing = false;
        bool writing = false;
    };

    struct join_state {
        std::int64_t t_ms = 0; // next tick to be delivered
        movement_kind movement = movement_kind::idle;
        double playback_rate = 1.0;
        std::int64_t since_ms = 0;
        emotion_bin bin;
        std::vector<active_sound> sounds;
    };

    void accept_loop() {
        while (true) {
            boost::beast::error_code ec;
            tcp_socket socket(ioc_);
            acceptor_.accept(socket, ec);
            if (ec || stopped_)
                return; // closed, or the stop() wake-up connection
            auto s = std::make_shared<session>(std::move(socket));
            {
                std::lock_guard lock(mutex_);
                all_.push_back(s);
            }
            s->thread = std::thread([this, s] { session_main(s); });
        }
    }

    void session_main(std::shared_ptr<session> s) {
        boost::beast::error_code ec;
        s->ws.accept(ec);
        if (ec) {
            mark_dead(*s);
            return;
        }
        boost::beast::flat_buffer buffer;
        s->ws.read(buffer, ec);
        if (ec) {
            mark_dead(*s);
            return;
        }
        auto hello = nlohmann::json::parse(
            boost::beast::buffers_to_string(buffer.data()), nullptr, false);
        if (hello.is_discarded() || hello.value("type", "") != "hello" ||
            hello.value("v", 0) != 1) {
            s->ws.close(boost::beast::websocket::close_code::policy_error,
                        ec);
            mark_dead(*s);
            return;
        }
        {
            // registration: welcome + snapshot enqueued atomically with the
            // join boundary, so the first tick this session sees is join_.t_ms
            std::lock_guard lock(mutex_);
            std::vector<std::string> greeting;
            greeting.push_back(frame_welcome(info_).dump());
            greeting.push_back(snapshot_frame_locked());
            push_frames(*s, greeting);
            sessions_.push_back(s);
            joined_cv_.notify_all();
        }
        write_loop(*s);
    }

    std::string snapshot_frame_locked() const {
        nlohmann::ordered_json sounds = nlohmann::ordered_json::array();
        for (const auto& snd : join_.sounds)
            sounds.push_back(nlohmann::ordered_json{
                {"kind", snd.kind}, {"until_ms", snd.until_ms}});
        nlohmann::ordered_json f{
            {"v", 1},
            {"type", "snapshot"},
            {"t_ms", join_.t_ms},
            {"movement", to_string(join_.movement)},
            {"playback_rate", join_.playback_rate},
            {"arousal", to_string(join_.bin.arousal)},
            {"valence", to_string(join_.bin.valence)},
            {"since_ms", join_.since_ms},
            {"active_sounds", std::move(sounds)}};
        return f.dump();
    }

    void push_frames(session& s, const std::vector<std::string>& frames) {
        std::lock_guard qlock(s.mutex);
        if (s.dead)
            return;
        if (s.queue.size() + frames.size() > queue_bound_) {
            // overflow: cut the session loose rather than stall the tick loop
            s.dead = true;
            boost::beast::error_code ec;
            s.ws.next_layer().shutdown(tcp_socket::shutdown_both, ec);
            s.cv.notify_all();
            return;
        }
        for (const auto& f : frames)
            s.queue.push_back(f);
        s.cv.notify_all();
    }

    void write_loop(session& s) {
        while (true) {
            std::string frame;
            {
                std::unique_lock qlock(s.mutex);
                s.cv.wait(qlock, [&] {
                    return s.dead || !s.queue.empty() || s.closing;
                });
                if (s.dead)
                    return;
                if (s.queue.empty()) {
                    if (s.closing)
                        break;
                    continue;
                }
                frame = std::move(s.queue.front());
                s.queue.pop_front();
                s.writing = true;
            }
            boost::beast::error_code ec;
            s.ws.text(true);
            s.ws.write(net::buffer(frame), ec);
            {
                std::lock_guard qlock(s.mutex);
                s.writing = false;
            }
            if (ec) {
                mark_dead(s);
                return;
            }
        }
        boost::beast::error_code ec;
        s.ws.close(boost::beast::websocket::close_code::normal, ec);
        mark_dead(s);
    }

    void mark_dead(session& s) {
        std::lock_guard qlock(s.mutex);
        s.dead = true;
        s.cv.notify_all();
    }

    // joins finished session threads; caller holds mutex_
    void reap_locked() {
        auto it = sessions_.begin();
        while (it != sessions_.end()) {
            auto& s = **it;
            bool dead;
            {
                std::lock_guard qlock(s.mutex);
                dead = s.dead;
            }
            if (dead) {
                if (s.thread.joinable())
                    s.thread.join();
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }

    welcome_info info_;
    std::size_t queue_bound_;
    net::io_context ioc_;
    net::ip::tcp::acceptor acceptor_;
    std::thread accept_thread_;
    std::mutex mutex_;
    std::condition_variable joined_cv_;
    std::vector<std::shared_ptr<session>> sessions_; // registered
    std::vector<std::shared_ptr<session>> all_;      // owns every thread
    join_state join_;
    std::atomic<bool> stopped_{false};
};

// ---- client ----------------------------------------------------------

struct simulate_options {
    std::string url = "ws://127.0.0.1:9100";
    std::string client_name = "simulator";
    int n_avatars = 0;                     // 0: take the welcome value
    std::optional<std::uint64_t> seed;     // fallback when welcome has none
    std::ostream* log = nullptr;           // canonical event log
    std::ostream* render = nullptr;        // one line per event
    std::function<void(const std::string&)> on_frame; // test hook
};

struct simulate_result {
    bool ok = false;
    bool protocol_violation = false;
    std::string error;
    std::int64_t ticks = 0;
    std::int64_t reactions = 0;
    std::optional<crowd> final_crowd;
};

namespace detail {

struct ws_url {
    std::string host;
    std::string port;
    std::string path;
};

inline ws_url parse_ws_url(const std::string& url) {
    std::string rest = url;
    const std::string scheme = "ws://";
    if (rest.rfind(scheme, 0) != 0)
        throw validation_error("url must start with ws://");
    rest = rest.substr(scheme.size());
    ws_url out;
    auto slash = rest.find('/');
    std::string hostport =
        slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = hostport.rfind(':');
    if (colon == std::string::npos) {
        out.host = hostport;
        out.port = "80";
    } else {
        out.host = hostport.substr(0, colon);
        out.port = hostport.substr(colon + 1);
    }
    if (out.host.empty())
        throw validation_error("url has no host");
    return out;
}

} // namespace detail

namespace detail {

inline simulate_result run_simulator_impl(const simulate_options& opt) {
    simulate_result res;
    auto fail = [&](const std::string& why, bool protocol) {
        res.ok = false;
        res.protocol_violation = protocol;
        res.error = why;
        return res;
    };

    net::io_context ioc;
    ws_stream<tcp_socket> ws(ioc);
    try {
        auto url = detail::parse_ws_url(opt.url);
        net::ip::tcp::resolver resolver(ioc);
        auto endpoints = resolver.resolve(url.host, url.port);
        net::connect(ws.next_layer(), endpoints);
        ws.handshake(url.host + ":" + url.port, url.path);
        ws.text(true);
        ws.write(net::buffer(frame_hello(opt.client_name).dump()));
    } catch (const std::exception& e) {
        return fail(std::string("connect: ") + e.what(), false);
    }

    auto read_frame = [&](nlohmann::json& doc) -> bool {
        boost::beast::flat_buffer buffer;
        boost::beast::error_code ec;
        ws.read(buffer, ec);
        if (ec)
            return false;
        doc = nlohmann::json::parse(
            boost::beast::buffers_to_string(buffer.data()), nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            doc = nlohmann::json::object();
        if (opt.on_frame)
            opt.on_frame(boost::beast::buffers_to_string(buffer.data()));
        return true;
    };

    nlohmann::json doc;
    if (!read_frame(doc))
        return fail("connection closed before welcome", true);
    if (doc.value("v", 0) != 1)
        return fail("version mismatch in welcome", true);
    if (doc.value("type", "") != "welcome")
        return fail("first frame is not welcome", true);
    std::int64_t tick_ms = doc.value("tick_ms", 0);
    if (tick_ms <= 0)
        return fail("welcome carries no usable tick_ms", true);
    int n_avatars = opt.n_avatars > 0 ? opt.n_avatars
                                      : doc.value("n_avatars", 0);
    if (n_avatars <= 0)
        return fail("welcome carries no usable n_avatars", true);
    std::uint64_t seed;
    if (doc.contains("seed"))
        seed = doc.at("seed").get<std::uint64_t>();
    else if (opt.seed)
        seed = *opt.seed;
    else
        return fail("no seed in welcome and none supplied", false);
    std::string config_hash = doc.value("config_hash", "");

    crowd state(n_avatars, seed);
    std::optional<log_writer> log;
    if (opt.log) {
        log.emplace(*opt.log);
        log->header(seed, config_hash);
    }

    bool have_snapshot = false;
    bool have_tick = false;
    bool saw_bye = false;
    std::int64_t expect_t = 0;
    std::int64_t cur_tick_t = -1;
    bool cur_surge = false;

    while (read_frame(doc)) {
        if (saw_bye)
            return fail("frame after bye", true);
        if (doc.value("v", 0) != 1)
            return fail("version mismatch mid-stream", true);
        std::string type = doc.value("type", "");
        if (type == "snapshot") {
            if (have_snapshot)
                return fail("duplicate snapshot", true);
            if (have_tick)
                return fail("snapshot after tick", true);
            have_snapshot = true;
            expect_t = doc.at("t_ms").get<std::int64_t>();
            movement_kind m =
                movement_from_string(doc.at("movement").get<std::string>());
            double rate = doc.at("playback_rate").get<double>();
            std::int64_t since = doc.value("since_ms", expect_t);
            std::vector<active_sound> sounds;
            if (doc.contains("active_sounds"))
                for (const auto& s : doc.at("active_sounds"))
                    sounds.push_back({s.at("kind").get<std::string>(),
                                      s.at("until_ms").get<std::int64_t>()});
            state.restore(m, rate, since, std::move(sounds));
        } else if (type == "tick") {
            if (!have_snapshot)
                return fail("tick before snapshot", true);
            std::int64_t t = doc.at("t_ms").get<std::int64_t>();
            if (t != expect_t)
                return fail("tick out of order: got t_ms " +
                                std::to_string(t) + ", expected " +
                                std::to_string(expect_t),
                            true);
            have_tick = true;
            cur_tick_t = t;
            cur_surge = doc.value("surge", false);
            expect_t = t + tick_ms;
            ++res.ticks;
            if (log) {
                tick_output out;
                out.t_ms = t;
                out.rate = doc.at("rate").get<double>();
                out.bin.arousal =
                    level_from_string(doc.at("arousal").get<std::string>());
                out.bin.valence =
                    level_from_string(doc.at("valence").get<std::string>());
                log->tick(out);
            }
            state.prune(t);
        } else if (type == "reaction") {
            if (!have_tick)
                return fail("reaction before first tick", true);
            std::int64_t t = doc.at("t_ms").get<std::int64_t>();
            if (t != cur_tick_t)
                return fail("reaction t_ms does not match current tick",
                            true);
            reaction_event ev;
            ev.t_ms = t;
            std::string kind = doc.value("kind", "");
            if (kind == "movement") {
                ev.kind = reaction_event::type::movement;
                ev.movement = movement_from_string(
                    doc.at("movement").get<std::string>());
                ev.rate = doc.at("playback_rate").get<double>();
            } else if (kind == "cheer") {
                if (!cur_surge)
                    return fail("cheer without surge flag on its tick", true);
                ev.kind = reaction_event::type::cheer;
                ev.cheer =
                    cheer_from_string(doc.at("cheer").get<std::string>());
            } else if (kind == "singalong") {
                ev.kind = reaction_event::type::singalong;
                ev.window_id = doc.at("window_id").get<std::string>();
                ev.window_end_ms = doc.value("until_ms", t);
            } else {
                return fail("unknown reaction kind '" + kind + "'", true);
            }
            state.apply_event(ev);
            ++res.reactions;
            if (log)
                log->event(ev);
            if (opt.render)
                *opt.render << "t=" << t << " " << log_event(ev).dump()
                            << "\n";
        } else if (type == "bye") {
            std::int64_t t = doc.at("t_ms").get<std::int64_t>();
            if (have_tick && t < cur_tick_t)
                return fail("bye goes back in time", true);
            saw_bye = true;
        } else if (type == "welcome") {
            return fail("duplicate welcome", true);
        }
        // unknown types ignored for forward compatibility
    }
    if (!saw_bye)
        return fail("stream ended without bye", true);
    res.ok = true;
    res.final_crowd = std::move(state);
    return res;
}

} // namespace detail

// Headless client: consumes the stream, maintains crowd state, checks the
// protocol invariants, and mirrors the server's event log byte for byte.
// A frame missing required fields counts as a protocol violation, not a
// crash.
inline simulate_result run_simulator(const simulate_options& opt) {
    try {
        return detail::run_simulator_impl(opt);
    } catch (const nlohmann::json::exception& e) {
        simulate_result res;
        res.protocol_violation = true;
        res.error = std::string("malformed frame: ") + e.what();
        return res;
    } catch (const validation_error& e) {
        simulate_result res;
        res.protocol_violation = true;
        res.error = std::string("malformed frame: ") + e.what();
        return res;
    }
}

} // namespace encore
