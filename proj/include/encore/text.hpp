#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace encore {

// ASCII-only case fold; multibyte sequences pass through untouched.
inline std::string ascii_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text)
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c);
    return out;
}

inline bool is_ascii_punct(char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Case-fold, drop ASCII punctuation (emoji and other multibyte text kept),
// split on whitespace. This is the whole tokenizer contract: anything
// smarter belongs in a swapped-in classifier.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::string folded = ascii_lower(text);
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : folded) {
        if (is_ascii_punct(c))
            continue;
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
            c == '\f' || c == '\v') {
            if (!cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        tokens.push_back(cur);
    return tokens;
}

} // namespace encore
