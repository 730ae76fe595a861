#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rsum::text {

// Lowercased alphanumeric runs; every other character separates tokens.
std::vector<std::string> word_tokens(std::string_view s);

// Lowercased whitespace-delimited tokens, punctuation kept.
std::vector<std::string> whitespace_tokens(std::string_view s);

std::size_t word_count(std::string_view s);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// Lowercase and collapse runs of whitespace to one space.
std::string normalize(std::string_view s);

bool is_stopword(std::string_view token);
bool is_numeral(std::string_view token);
bool is_punctuation(std::string_view token);

// Noun-oriented suffix lemmatizer ("rooms" -> "room", "spacious" unchanged).
std::string lemmatize(std::string_view token);

// Content hashing for caches and manifests.
std::string sha256_hex(std::string_view data);
std::uint64_t stable_hash64(std::string_view data);

}  // namespace rsum::text
