#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "chat.hpp"
#include "config.hpp"
#include "detectors.hpp"
#include "emotion.hpp"
#include "errors.hpp"
#include "event_log.hpp"
#include "reactor.hpp"
#include "timeline.hpp"

namespace encore {

struct run_summary {
    std::int64_t ticks = 0;
    std::size_t messages = 0;
    std::size_t skipped_rows = 0;
    std::int64_t surges = 0;
    std::map<std::string, std::int64_t> cheers; // by kind
    std::int64_t singalongs = 0;
    std::int64_t movement_transitions = 0;
};

// Owns the whole per-run pipeline. Construction loads and validates every
// input file; run() drives the tick loop to the end of the timeline.
class engine {
public:
    explicit engine(const engine_config& cfg)
        : cfg_(cfg), timeline_(load_timeline_file(cfg.timeline)),
          lexicon_(lexicon::from_file(cfg.lexicon)),
          bins_(label_bin_map::from_file(cfg.label_bins)),
          table_(mapping_table::from_file(cfg.mapping_table)),
          source_(cfg.chat_csv, cfg.columns),
          reactor_(timeline_, lexicon_, bins_, table_, cfg.params) {
        bins_.validate_against(lexicon_);
        if (timeline_.start_ms() != 0)
            throw validation_error(
                "timeline must start at 0 ms (ticks are indexed from 0)");
    }

    // Runs every tick through `sink(const tick_output&)`. The optional
    // `pace(tick_index)` hook runs before each tick is produced; serve uses
    // it for real-time delays, analyze leaves it empty.
    template <class Sink, class Pace>
    run_summary run(Sink&& sink, Pace&& pace) {
        tick_feed feed(source_, cfg_.params.tick_ms, timeline_.end_ms());
        run_summary sum;
        sum.skipped_rows = source_.stats().skipped;
        while (true) {
            auto batch = feed.next();
            if (!batch)
                break;
            if (batch->tick_index * cfg_.params.tick_ms >= timeline_.end_ms())
                break; // messages past the concert are dropped
            pace(batch->tick_index);
            auto out = reactor_.process_tick(*batch);
            ++sum.ticks;
            sum.messages += batch->messages.size();
            if (out.surge)
                ++sum.surges;
            for (const auto& ev : out.events) {
                switch (ev.kind) {
                case reaction_event::type::movement:
                    ++sum.movement_transitions;
                    break;
                case reaction_event::type::cheer:
                    ++sum.cheers[to_string(ev.cheer)];
                    break;
                case reaction_event::type::singalong:
                    ++sum.singalongs;
                    break;
                }
            }
            sink(static_cast<const tick_output&>(out));
        }
        return sum;
    }

    template <class Sink>
    run_summary run(Sink&& sink) {
        return run(std::forward<Sink>(sink), [](std::int64_t) {});
    }

    const concert_timeline& timeline() const { return timeline_; }
    const engine_config& config() const { return cfg_; }
    std::int64_t total_ticks() const {
        return (timeline_.end_ms() + cfg_.params.tick_ms - 1) /
               cfg_.params.tick_ms;
    }

private:
    engine_config cfg_;
    concert_timeline timeline_;
    lexicon lexicon_;
    label_bin_map bins_;
    mapping_table table_;
    csv_source source_;
    reactor reactor_;
};

} // namespace encore
