#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace encore {

struct pcm_track {
    int sample_rate = 0;
    std::vector<double> samples; // mono, [-1, 1]
};

namespace detail {

inline std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] |
                                      (static_cast<std::uint16_t>(b[1]) << 8));
}

} // namespace detail

// RIFF WAVE, PCM 16-bit, mono or stereo (stereo averaged down).
inline pcm_track load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open wav file: " + path);
    char tag[4];
    in.read(tag, 4);
    if (!in || std::string(tag, 4) != "RIFF")
        throw parse_error("wav: not a RIFF file: " + path);
    detail::read_u32(in); // riff size
    in.read(tag, 4);
    if (!in || std::string(tag, 4) != "WAVE")
        throw parse_error("wav: not a WAVE file: " + path);

    int channels = 0;
    int sample_rate = 0;
    int bits = 0;
    std::vector<char> data;
    while (in.read(tag, 4)) {
        std::uint32_t size = detail::read_u32(in);
        std::string id(tag, 4);
        if (id == "fmt ") {
            std::uint16_t format = detail::read_u16(in);
            channels = detail::read_u16(in);
            sample_rate = static_cast<int>(detail::read_u32(in));
            detail::read_u32(in); // byte rate
            detail::read_u16(in); // block align
            bits = detail::read_u16(in);
            if (size > 16)
                in.seekg(size - 16, std::ios::cur);
            if (format != 1)
                throw parse_error("wav: only PCM supported");
        } else if (id == "data") {
            data.resize(size);
            in.read(data.data(), size);
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    if (channels == 0 || data.empty())
        throw parse_error("wav: missing fmt or data chunk");
    if (bits != 16)
        throw parse_error("wav: only 16-bit PCM supported");
    if (channels != 1 && channels != 2)
        throw parse_error("wav: only mono or stereo supported");
    if (sample_rate < 8000)
        throw validation_error("wav: sample rate below 8000 Hz");

    pcm_track track;
    track.sample_rate = sample_rate;
    std::size_t frames = data.size() / (2 * channels);
    track.samples.reserve(frames);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            std::size_t off = (i * channels + c) * 2;
            std::int16_t v = static_cast<std::int16_t>(
                p[off] | (static_cast<std::uint16_t>(p[off + 1]) << 8));
            acc += v / 32768.0;
        }
        track.samples.push_back(acc / channels);
    }
    return track;
}

} // namespace encore
