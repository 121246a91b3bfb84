#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_set>

#include "chat.hpp"
#include "errors.hpp"
#include "timeline.hpp"

namespace encore {

struct surge_event {
    std::int64_t tick_index = 0;
    double rate = 0.0;
    double z = 0.0;
};

// Moving-average z-score peak detector over the chat rate. Emits once per
// episode (rising edge). While in a surge the buffer absorbs the filtered
// value influence*rate + (1-influence)*mean so the baseline stays put.
class surge_detector {
public:
    surge_detector(std::size_t window = 5, double threshold_z = 1.0,
                   double influence = 0.0, double sigma_floor = 1.0)
        : window_(window), threshold_z_(threshold_z), influence_(influence),
          sigma_floor_(sigma_floor) {
        if (window_ == 0)
            throw domain_error("surge window must be positive");
        if (threshold_z_ <= 0)
            throw domain_error("surge threshold_z must be positive");
        if (influence_ < 0 || influence_ > 1)
            throw domain_error("surge influence must lie in [0,1]");
        if (sigma_floor_ <= 0)
            throw domain_error("surge sigma_floor must be positive");
    }

    std::optional<surge_event> step(double rate) {
        std::int64_t tick = tick_++;
        if (buf_.size() < window_) {
            buf_.push_back(rate); // warm-up: fill, never score
            return std::nullopt;
        }
        double mu = 0.0;
        for (double x : buf_)
            mu += x;
        mu /= static_cast<double>(window_);
        double var = 0.0;
        for (double x : buf_)
            var += (x - mu) * (x - mu);
        double sigma = std::sqrt(var / static_cast<double>(window_));
        double z = (rate - mu) / std::max(sigma, sigma_floor_);
        bool above = z > threshold_z_;
        bool rising = above && !in_surge_;
        in_surge_ = above;
        buf_.pop_front();
        buf_.push_back(above ? influence_ * rate + (1.0 - influence_) * mu
                             : rate);
        last_z_ = z;
        if (rising)
            return surge_event{tick, rate, z};
        return std::nullopt;
    }

    bool in_surge() const { return in_surge_; }
    double last_z() const { return last_z_; }
    std::size_t window() const { return window_; }
    double threshold_z() const { return threshold_z_; }
    double influence() const { return influence_; }
    double sigma_floor() const { return sigma_floor_; }

private:
    std::size_t window_;
    double threshold_z_;
    double influence_;
    double sigma_floor_;
    std::deque<double> buf_;
    bool in_surge_ = false;
    double last_z_ = 0.0;
    std::int64_t tick_ = 0;
};

// Lyric-ratio detector; each window fires at most once per run.
class singalong_detector {
public:
    explicit singalong_detector(double threshold_ratio = 0.3)
        : threshold_(threshold_ratio) {
        if (threshold_ <= 0 || threshold_ > 1)
            throw domain_error("singalong threshold must lie in (0,1]");
    }

    std::optional<std::string> step(const singalong_window& window,
                                    const tick_batch& batch) {
        if (triggered_.count(window.id))
            return std::nullopt;
        if (batch.messages.empty())
            return std::nullopt; // ratio defined as 0
        std::size_t matched = 0;
        for (const auto& m : batch.messages)
            if (match_lyric(m.text, window))
                ++matched;
        double ratio = static_cast<double>(matched) /
                       static_cast<double>(batch.messages.size());
        if (ratio > threshold_) {
            triggered_.insert(window.id);
            return window.id;
        }
        return std::nullopt;
    }

    bool triggered(const std::string& window_id) const {
        return triggered_.count(window_id) != 0;
    }
    double threshold() const { return threshold_; }

private:
    double threshold_;
    std::unordered_set<std::string> triggered_;
};

} // namespace encore
