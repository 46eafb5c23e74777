#include "rbt/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace rbt::text {

std::vector<Token> tokenize(std::string_view input) {
  std::size_t limit = input.size();
  while (limit > 0 && std::isspace(static_cast<unsigned char>(input[limit - 1]))) --limit;
  if (limit > 0 && input[limit - 1] == '.') --limit;

  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < limit) {
    const auto c = static_cast<unsigned char>(input[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == ',') {
      tokens.push_back({",", i, i + 1});
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::string word;
    while (i < limit) {
      const auto d = static_cast<unsigned char>(input[i]);
      if (std::isspace(d) || d == ',') break;
      word.push_back(static_cast<char>(std::tolower(d)));
      ++i;
    }
    tokens.push_back({std::move(word), start, i});
  }
  return tokens;
}

std::vector<std::string> words(std::string_view input) {
  std::vector<std::string> out;
  for (auto& t : tokenize(input)) out.push_back(std::move(t.text));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string normalize(std::string_view input) { return join(words(input), " "); }

std::optional<double> parse_number(std::string_view token) {
  if (token.empty()) return std::nullopt;
  double value = 0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_number(double value) { return fmt::format("{}", value); }

}  // namespace rbt::text
