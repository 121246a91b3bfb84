#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <encore/config.hpp>
#include <encore/engine.hpp>
#include <encore/tempo.hpp>
#include <encore/transport.hpp>
#include <encore/wav.hpp>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_io = 2;
constexpr int exit_protocol = 3;

double parse_speed(const std::string& s) {
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !(v > 0))
        throw encore::validation_error("--speed must be a positive number or "
                                       "\"inf\"");
    return v;
}

void print_summary(const encore::run_summary& sum) {
    std::cout << "ticks: " << sum.ticks << "\n";
    std::cout << "messages: " << sum.messages << " (skipped "
              << sum.skipped_rows << ")\n";
    std::cout << "surges: " << sum.surges << "\n";
    std::cout << "cheers:";
    if (sum.cheers.empty())
        std::cout << " none";
    for (const auto& [kind, n] : sum.cheers)
        std::cout << " " << kind << "=" << n;
    std::cout << "\n";
    std::cout << "singalongs: " << sum.singalongs << "\n";
    std::cout << "movement transitions: " << sum.movement_transitions << "\n";
}

int cmd_analyze(const std::string& config_path,
                std::optional<std::uint64_t> seed_flag,
                const std::string& out_path) {
    auto cfg = encore::load_config(config_path);
    if (seed_flag)
        cfg.seed = *seed_flag;
    bool generated = !cfg.seed.has_value();
    std::uint64_t seed = encore::ensure_seed(cfg);
    if (generated)
        std::cout << "seed: " << seed << " (generated)\n";

    encore::engine eng(cfg);
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
        throw encore::io_error("cannot open output file: " + out_path);
    encore::log_writer log(out);
    log.header(seed, cfg.config_hash);
    auto sum = eng.run([&](const encore::tick_output& t) { log.tick(t); });
    out.flush();
    if (!out)
        throw encore::io_error("failed writing output file: " + out_path);
    print_summary(sum);
    return exit_ok;
}

int cmd_serve(const std::string& config_path,
              std::optional<std::uint64_t> seed_flag,
              std::optional<std::string> speed_flag, std::uint16_t port,
              std::size_t wait_clients) {
    auto cfg = encore::load_config(config_path);
    if (seed_flag)
        cfg.seed = *seed_flag;
    if (speed_flag)
        cfg.speed = parse_speed(*speed_flag);
    bool generated = !cfg.seed.has_value();
    std::uint64_t seed = encore::ensure_seed(cfg);
    if (generated)
        std::cout << "seed: " << seed << " (generated)\n";

    encore::engine eng(cfg);
    encore::welcome_info info{cfg.params.tick_ms, cfg.n_avatars, seed,
                              cfg.config_hash};
    encore::ws_server server(port, info, cfg.queue_bound);
    server.start();
    std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
    if (wait_clients > 0)
        server.wait_for_clients(wait_clients);

    encore::replay_clock clock(cfg.speed, cfg.params.tick_ms);
    auto sum = eng.run(
        [&](const encore::tick_output& t) { server.broadcast_tick(t); },
        [&](std::int64_t tick) { clock.wait_for_tick_end(tick); });
    server.finish(eng.total_ticks() * cfg.params.tick_ms);
    print_summary(sum);
    return exit_ok;
}

int cmd_simulate(const std::string& url, int avatars,
                 std::optional<std::uint64_t> seed_flag,
                 const std::string& out_path, bool render,
                 const std::string& name) {
    encore::simulate_options opt;
    opt.url = url;
    opt.n_avatars = avatars;
    opt.seed = seed_flag;
    opt.client_name = name;
    std::ofstream out;
    if (!out_path.empty()) {
        out.open(out_path, std::ios::binary);
        if (!out)
            throw encore::io_error("cannot open output file: " + out_path);
        opt.log = &out;
    }
    if (render)
        opt.render = &std::cout;

    auto res = encore::run_simulator(opt);
    if (!res.ok) {
        std::cerr << (res.protocol_violation ? "protocol violation: "
                                             : "error: ")
                  << res.error << "\n";
        return res.protocol_violation ? exit_protocol : exit_io;
    }
    std::cout << "ticks: " << res.ticks << "\n";
    std::cout << "reactions: " << res.reactions << "\n";
    return exit_ok;
}

int cmd_estimate_bpm(const std::string& wav_path) {
    auto track = encore::load_wav(wav_path);
    double bpm = encore::estimate_bpm(track);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", bpm);
    std::cout << buf << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chat-to-crowd reaction engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string url = "ws://127.0.0.1:9100";
    std::string wav_path;
    std::string client_name = "simulator";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> speed;
    std::uint16_t port = 9100;
    std::size_t wait_clients = 0;
    int avatars = 0;
    bool render = false;

    auto* analyze = app.add_subcommand(
        "analyze", "replay a chat log in batch and write the event log");
    analyze->add_option("--config", config_path, "engine config file")
        ->required();
    analyze->add_option("--seed", seed, "override the config seed");
    analyze->add_option("--out", out_path, "event log output path")
        ->required();

    auto* serve = app.add_subcommand(
        "serve", "replay a chat log and broadcast reactions over websocket");
    serve->add_option("--config", config_path, "engine config file")
        ->required();
    serve->add_option("--seed", seed, "override the config seed");
    serve->add_option("--speed", speed,
                      "replay speed (virtual seconds per second, or inf)");
    serve->add_option("--port", port, "listen port (0 picks a free one)");
    serve->add_option("--wait-clients", wait_clients,
                      "hold the first tick until this many clients joined");

    auto* simulate = app.add_subcommand(
        "simulate", "connect to a server and run the headless crowd");
    simulate->add_option("--url", url, "server url (ws://host:port)");
    simulate->add_option("--avatars", avatars,
                         "crowd size (default: the welcome value)");
    simulate->add_option("--seed", seed,
                         "crowd seed when the welcome has none");
    simulate->add_option("--out", out_path, "write the received event log");
    simulate->add_option("--client", client_name, "client name in hello");
    simulate->add_flag("--render", render, "print one line per event");

    auto* estimate = app.add_subcommand(
        "estimate-bpm", "estimate tempo from a wav file");
    estimate->add_option("wav", wav_path, "RIFF PCM16 wav file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze)
            return cmd_analyze(config_path, seed, out_path);
        if (*serve)
            return cmd_serve(config_path, seed, speed, port, wait_clients);
        if (*simulate)
            return cmd_simulate(url, avatars, seed, out_path, render,
                                client_name);
        if (*estimate)
            return cmd_estimate_bpm(wav_path);
    } catch (const encore::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const encore::protocol_error& e) {
        std::cerr << "protocol violation: " << e.what() << "\n";
        return exit_protocol;
    } catch (const encore::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const encore::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const encore::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const encore::too_short_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const encore::silent_track_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    }
    return exit_config;
}
