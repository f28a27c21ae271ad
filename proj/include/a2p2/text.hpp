#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace a2p2::text {

// A lowercase word and the byte range it came from in the source string.
struct Token {
  std::string word;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Splits on non-alphanumeric boundaries after lowercasing. Apostrophes
// (ASCII and U+2019) are dropped inside words, so "haven't" -> "havent".
std::vector<Token> tokenize(std::string_view input);

std::vector<std::string> words(std::string_view input);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace a2p2::text
