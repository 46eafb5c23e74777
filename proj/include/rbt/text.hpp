#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rbt::text {

struct Token {
  std::string text;  // lower-cased
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Splits on whitespace, emits each comma as its own token and drops a single
// trailing period. Apostrophes and other punctuation stay inside words.
std::vector<Token> tokenize(std::string_view input);

// Lower-case, whitespace-collapsed form used as the key for phrase matching.
std::string normalize(std::string_view input);

std::vector<std::string> words(std::string_view input);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::optional<double> parse_number(std::string_view token);

// Shortest representation that parses back to the same value ("10", "0.4").
std::string format_number(double value);

}  // namespace rbt::text
