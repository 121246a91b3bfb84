#pragma once

#include <stdexcept>
#include <string>

namespace encore {

// Thrown for unreadable/unparsable input documents.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a document parses but violates a named invariant.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem / socket trouble.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the operation's domain (n <= 0, bpm <= 0, ...).
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Query outside the timeline span.
struct out_of_range_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Audio shorter than the estimator needs.
struct too_short_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Audio with an all-zero onset function.
struct silent_track_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wire-protocol invariant broken (ordering, version, missing snapshot...).
struct protocol_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace encore
