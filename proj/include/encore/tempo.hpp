#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "wav.hpp"

namespace encore {

enum class tempo_class { fast, slow };

inline const char* to_string(tempo_class t) {
    return t == tempo_class::fast ? "fast" : "slow";
}

// Fast strictly above 100 BPM; 100 itself is slow.
inline tempo_class classify_bpm(double bpm, double fast_threshold = 100.0) {
    if (bpm <= 0)
        throw domain_error("bpm must be positive");
    return bpm > fast_threshold ? tempo_class::fast : tempo_class::slow;
}

// Offline estimator: per-frame energy flux (1024-sample frames, 50% hop),
// autocorrelated over lags for 60-180 BPM, maximum peak refined by
// parabolic interpolation.
inline double estimate_bpm(const pcm_track& track) {
    constexpr std::size_t frame = 1024;
    constexpr std::size_t hop = 512;
    constexpr double bpm_lo = 60.0;
    constexpr double bpm_hi = 180.0;

    if (track.samples.size() < 10 * static_cast<std::size_t>(track.sample_rate))
        throw too_short_error("track shorter than 10 seconds");

    std::vector<double> energy;
    for (std::size_t pos = 0; pos + frame <= track.samples.size();
         pos += hop) {
        double e = 0.0;
        for (std::size_t i = 0; i < frame; ++i)
            e += track.samples[pos + i] * track.samples[pos + i];
        energy.push_back(e);
    }

    std::vector<double> flux(energy.size() > 1 ? energy.size() - 1 : 0);
    double total = 0.0;
    for (std::size_t i = 1; i < energy.size(); ++i) {
        flux[i - 1] = std::max(0.0, energy[i] - energy[i - 1]);
        total += flux[i - 1];
    }
    if (total == 0.0)
        throw silent_track_error("no onsets in track");

    double mean = total / static_cast<double>(flux.size());
    for (double& f : flux)
        f -= mean;

    double fps = static_cast<double>(track.sample_rate) / hop;
    auto lag_min = static_cast<std::size_t>(std::ceil(60.0 * fps / bpm_hi));
    auto lag_max = static_cast<std::size_t>(std::floor(60.0 * fps / bpm_lo));

    std::vector<double> corr(lag_max + 1, 0.0);
    std::size_t best = 0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
        double acc = 0.0;
        for (std::size_t i = lag; i < flux.size(); ++i)
            acc += flux[i] * flux[i - lag];
        corr[lag] = acc;
        if (best == 0 || acc > corr[best])
            best = lag;
    }

    double refined = static_cast<double>(best);
    if (best > lag_min && best < lag_max) {
        double y0 = corr[best - 1], y1 = corr[best], y2 = corr[best + 1];
        double denom = y0 - 2.0 * y1 + y2;
        if (denom != 0.0)
            refined += 0.5 * (y0 - y2) / denom;
    }
    return 60.0 * fps / refined;
}

} // namespace encore
