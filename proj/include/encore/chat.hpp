#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace encore {

struct chat_message {
    std::int64_t t_ms = 0;
    std::string author;
    std::string text; // may be empty; still counts toward rate
};

struct source_stats {
    std::size_t parsed = 0;
    std::size_t skipped = 0;
};

// Pull interface: next() yields messages in nondecreasing t_ms order.
class chat_source {
public:
    virtual ~chat_source() = default;
    virtual std::optional<chat_message> next() = 0;
    virtual const source_stats& stats() const = 0;
};

struct csv_columns {
    std::string time = "time_ms";
    std::string author = "author";
    std::string message = "message";
};

namespace detail {

// One CSV record, RFC 4180 quoting (doubled quotes, embedded commas and
// newlines). Returns false at end of stream with nothing read.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& out) {
    out.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch == '\r') {
            if (in.peek() == '\n')
                in.get();
            break;
        } else {
            field.push_back(ch);
        }
    }
    if (!any)
        return false;
    out.push_back(std::move(field));
    return true;
}

inline bool valid_utf8(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char b = s[i];
        std::size_t len;
        if (b < 0x80)
            len = 1;
        else if ((b & 0xE0) == 0xC0)
            len = 2;
        else if ((b & 0xF0) == 0xE0)
            len = 3;
        else if ((b & 0xF8) == 0xF0)
            len = 4;
        else
            return false;
        if (i + len > s.size())
            return false;
        for (std::size_t j = 1; j < len; ++j)
            if ((static_cast<unsigned char>(s[i + j]) & 0xC0) != 0x80)
                return false;
        i += len;
    }
    return true;
}

} // namespace detail

// Whole-file CSV source: parses, skips-and-counts malformed rows, sorts by
// t_ms (stable, so equal timestamps keep file order).
class csv_source : public chat_source {
public:
    csv_source(const std::string& path, const csv_columns& cols = {}) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw io_error("cannot open chat csv: " + path);
        load(in, cols);
    }

    csv_source(std::istream& in, const csv_columns& cols) { load(in, cols); }

    std::optional<chat_message> next() override {
        if (pos_ >= messages_.size())
            return std::nullopt;
        return messages_[pos_++];
    }

    const source_stats& stats() const override { return stats_; }
    const std::vector<chat_message>& messages() const { return messages_; }

private:
    void load(std::istream& in, const csv_columns& cols) {
        std::vector<std::string> row;
        if (!detail::read_csv_record(in, row))
            throw parse_error("chat csv: missing header row");
        auto find_col = [&](const std::string& name) {
            auto it = std::find(row.begin(), row.end(), name);
            if (it == row.end())
                throw parse_error("chat csv: no column named \"" + name +
                                  "\"");
            return static_cast<std::size_t>(it - row.begin());
        };
        std::size_t it_col = find_col(cols.time);
        std::size_t au_col = find_col(cols.author);
        std::size_t tx_col = find_col(cols.message);
        std::size_t want = std::max({it_col, au_col, tx_col}) + 1;
        while (detail::read_csv_record(in, row)) {
            if (row.size() == 1 && row[0].empty())
                continue; // blank line
            if (row.size() < want) {
                ++stats_.skipped;
                continue;
            }
            chat_message m;
            try {
                std::size_t used = 0;
                m.t_ms = std::stoll(row[it_col], &used);
                if (used != row[it_col].size() || m.t_ms < 0) {
                    ++stats_.skipped;
                    continue;
                }
            } catch (const std::exception&) {
                ++stats_.skipped;
                continue;
            }
            m.author = row[au_col];
            m.text = row[tx_col];
            if (!detail::valid_utf8(m.author) ||
                !detail::valid_utf8(m.text)) {
                ++stats_.skipped;
                continue;
            }
            messages_.push_back(std::move(m));
            ++stats_.parsed;
        }
        std::stable_sort(
            messages_.begin(), messages_.end(),
            [](const chat_message& a, const chat_message& b) {
                return a.t_ms < b.t_ms;
            });
    }

    std::vector<chat_message> messages_;
    source_stats stats_;
    std::size_t pos_ = 0;
};

// Newline-delimited JSON live source: {"t_ms","author","text"} per line.
// Regressing timestamps are clamped up to the previous value; malformed
// lines are skipped and counted.
class line_source : public chat_source {
public:
    explicit line_source(std::istream& in) : in_(in) {}

    std::optional<chat_message> next() override {
        std::string line;
        while (std::getline(in_, line)) {
            if (line.empty())
                continue;
            nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
            if (doc.is_discarded() || !doc.is_object() ||
                !doc.contains("t_ms") || !doc.contains("author") ||
                !doc.contains("text") ||
                !doc.at("t_ms").is_number_integer() ||
                !doc.at("author").is_string() ||
                !doc.at("text").is_string()) {
                ++stats_.skipped;
                continue;
            }
            chat_message m;
            m.t_ms = doc.at("t_ms").get<std::int64_t>();
            if (m.t_ms < last_t_)
                m.t_ms = last_t_;
            last_t_ = m.t_ms;
            m.author = doc.at("author").get<std::string>();
            m.text = doc.at("text").get<std::string>();
            ++stats_.parsed;
            return m;
        }
        return std::nullopt;
    }

    const source_stats& stats() const override { return stats_; }

private:
    std::istream& in_;
    source_stats stats_;
    std::int64_t last_t_ = 0;
};

struct tick_batch {
    std::int64_t tick_index = 0;
    std::vector<chat_message> messages;
};

// Paces tick delivery: tick i is due once virtual time passes its end
// boundary. speed is virtual-seconds per wall-second; infinity means batch
// mode (never wait).
class replay_clock {
public:
    replay_clock(double speed, std::int64_t tick_ms)
        : speed_(speed), tick_ms_(tick_ms),
          origin_(std::chrono::steady_clock::now()) {
        if (!(speed > 0))
            throw domain_error("replay speed must be positive");
    }

    static replay_clock batch(std::int64_t tick_ms) {
        return replay_clock(std::numeric_limits<double>::infinity(), tick_ms);
    }

    bool is_batch() const { return std::isinf(speed_); }

    void wait_for_tick_end(std::int64_t tick_index) const {
        if (is_batch())
            return;
        auto virtual_ms = static_cast<double>((tick_index + 1) * tick_ms_);
        auto due = origin_ + std::chrono::duration_cast<
                                 std::chrono::steady_clock::duration>(
                                 std::chrono::duration<double, std::milli>(
                                     virtual_ms / speed_));
        std::this_thread::sleep_until(due);
    }

private:
    double speed_;
    std::int64_t tick_ms_;
    std::chrono::steady_clock::time_point origin_;
};


// Slices a source into consecutive 1-tick batches, indices 0..N-1 with no
// skips. N covers the later of min_end_ms and the last message.
class tick_feed {
public:
    tick_feed(chat_source& source, std::int64_t tick_ms,
              std::int64_t min_end_ms)
        : source_(source), tick_ms_(tick_ms), min_end_ms_(min_end_ms) {
        if (tick_ms <= 0)
            throw domain_error("tick_ms must be positive");
        pending_ = source_.next();
    }

    std::optional<tick_batch> next() {
        std::int64_t boundary = (tick_ + 1) * tick_ms_;
        if (!pending_ && tick_ * tick_ms_ >= end_cover())
            return std::nullopt;
        tick_batch batch;
        batch.tick_index = tick_;
        while (pending_ && pending_->t_ms < boundary) {
            last_t_ = pending_->t_ms;
            batch.messages.push_back(std::move(*pending_));
            pending_ = source_.next();
        }
        ++tick_;
        return batch;
    }

private:
    std::int64_t end_cover() const {
        return std::max(min_end_ms_, last_t_ + 1);
    }

    chat_source& source_;
    std::int64_t tick_ms_;
    std::int64_t min_end_ms_;
    std::int64_t tick_ = 0;
    std::int64_t last_t_ = -1;
    std::optional<chat_message> pending_;
};

// Blocks per the clock, then returns the batch (immediately in batch mode).
inline std::optional<tick_batch> next_tick(tick_feed& feed,
                                           const replay_clock& clock,
                                           std::int64_t tick_index) {
    clock.wait_for_tick_end(tick_index);
    return feed.next();
}

} // namespace encore
