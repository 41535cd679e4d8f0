#pragma once

// Lossless sentence segmentation for clinical note text. Units end at
// newlines (headers and bullets stand alone) or at terminal punctuation
// followed by whitespace, guarded against clinical and common abbreviations,
// single initials, and numbered list markers. Joining the recorded pieces
// reproduces the input byte-for-byte.

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "cohortforge/errors.hpp"

namespace cohortforge {

struct SentencePart {
    std::string text;      // non-empty, no leading/trailing split whitespace
    std::string separator; // whitespace that followed the unit (may be empty at EOF)
};

struct Segmentation {
    std::string leading; // whitespace before the first unit
    std::vector<SentencePart> parts;
};

inline std::string join_segmentation(const Segmentation& seg) {
    std::string out = seg.leading;
    for (const auto& part : seg.parts) {
        out += part.text;
        out += part.separator;
    }
    return out;
}

namespace detail {

// Token endings (including the period) that do not terminate a sentence.
inline constexpr std::array<std::string_view, 19> kAbbreviations = {
    "dr.",  "mr.",    "mrs.",   "ms.",  "prof.",  "st.",    "vs.",
    "e.g.", "i.e.",   "etc.",   "approx.", "b.i.d.", "t.i.d.", "q.d.",
    "q.i.d.", "p.r.n.", "a.m.", "p.m.", "no.",
};

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

// Decides whether the period at `dot` (with whitespace or EOF after it) ends
// a sentence. `unit_start` is where the current unit's text began.
inline bool period_ends_sentence(std::string_view text, std::size_t dot, std::size_t unit_start) {
    // Token = maximal run of [A-Za-z0-9.] ending at the period.
    std::size_t start = dot;
    while (start > unit_start) {
        const char c = text[start - 1];
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.') {
            --start;
        } else {
            break;
        }
    }
    const std::size_t token_len = dot - start + 1; // includes the period
    if (token_len <= 1) {
        return true; // bare period
    }
    // Single initial, e.g. "J. Smith".
    if (token_len == 2 && std::isalpha(static_cast<unsigned char>(text[start]))) {
        return false;
    }
    // Numbered list marker at the start of the unit, e.g. "3. Refer to ...".
    bool all_digits = true;
    for (std::size_t i = start; i < dot; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            all_digits = false;
            break;
        }
    }
    if (all_digits && start == unit_start) {
        return false;
    }
    // Abbreviation allowlist, case-insensitive.
    std::string token;
    token.reserve(token_len);
    for (std::size_t i = start; i <= dot; ++i) {
        token.push_back(lower(text[i]));
    }
    for (const auto abbrev : kAbbreviations) {
        if (token == abbrev) {
            return false;
        }
        // Also guard tokens that merely end with a dotted abbreviation, such
        // as "(e.g." inside parentheses stripped by the token scan.
        if (token.size() > abbrev.size() &&
            std::string_view(token).substr(token.size() - abbrev.size()) == abbrev &&
            token[token.size() - abbrev.size() - 1] == '.') {
            return false;
        }
    }
    return true;
}

} // namespace detail

inline Segmentation segment_sentences(std::string_view text) {
    if (text.empty()) {
        throw ValidationError("segment_sentences: empty note text");
    }
    Segmentation seg;
    std::size_t pos = 0;
    while (pos < text.size() && detail::is_space(text[pos])) {
        ++pos;
    }
    seg.leading.assign(text.substr(0, pos));
    while (pos < text.size()) {
        const std::size_t unit_start = pos;
        std::size_t end = text.size(); // one past the last character of the unit
        for (std::size_t i = pos; i < text.size(); ++i) {
            const char c = text[i];
            if (c == '\n') {
                end = i;
                break;
            }
            if ((c == '.' || c == '!' || c == '?') &&
                (i + 1 == text.size() || detail::is_space(text[i + 1]))) {
                if (c != '.' || detail::period_ends_sentence(text, i, unit_start)) {
                    end = i + 1;
                    break;
                }
            }
        }
        SentencePart part;
        part.text.assign(text.substr(unit_start, end - unit_start));
        std::size_t after = end;
        while (after < text.size() && detail::is_space(text[after])) {
            ++after;
        }
        part.separator.assign(text.substr(end, after - end));
        seg.parts.push_back(std::move(part));
        pos = after;
    }
    return seg;
}

// Convenience view of just the unit texts.
inline std::vector<std::string> sentence_texts(const Segmentation& seg) {
    std::vector<std::string> out;
    out.reserve(seg.parts.size());
    for (const auto& part : seg.parts) {
        out.push_back(part.text);
    }
    return out;
}

} // namespace cohortforge
