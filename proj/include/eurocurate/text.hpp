#pragma once

// UTF-8 and hashing helpers shared by the pipeline modules.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace eurocurate::text {

/// Decodes UTF-8; ill-formed sequences become U+FFFD.
std::u32string decode_utf8(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view cps);

std::size_t codepoint_count(std::string_view s);

bool is_space(char32_t cp);
bool is_letter(char32_t cp);
bool is_upper(char32_t cp);

/// Simple (one-to-one) Unicode lowercase mapping per code point.
std::string to_lower(std::string_view s);

/// Splits on Unicode whitespace; no empty tokens.
std::vector<std::string_view> split_whitespace(std::string_view s);
std::size_t count_whitespace_tokens(std::string_view s);

/// Splits on a single byte; keeps empty pieces.
std::vector<std::string_view> split(std::string_view s, char sep);

std::string_view trim(std::string_view s);

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable across platforms and runs (FNV-1a folded through splitmix64).
std::uint64_t hash64(std::string_view s, std::uint64_t seed = 0);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// v rounded to `digits` significant decimal digits.
double round_significant(double v, int digits);

}  // namespace eurocurate::text
