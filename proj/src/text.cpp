#include "a2p2/text.hpp"

namespace a2p2::text {

namespace {

bool is_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

// Length of an apostrophe sequence starting at i, or 0.
std::size_t apostrophe_at(std::string_view s, std::size_t i) {
  if (s[i] == '\'') return 1;
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80 && static_cast<unsigned char>(s[i + 2]) == 0x99) {
    return 3;
  }
  return 0;
}

}  // namespace

std::vector<Token> tokenize(std::string_view input) {
  std::vector<Token> tokens;
  Token current;
  bool open = false;
  for (std::size_t i = 0; i < input.size();) {
    const auto c = static_cast<unsigned char>(input[i]);
    if (is_alnum(c)) {
      if (!open) {
        current = Token{{}, i, i};
        open = true;
      }
      current.word.push_back(lower(c));
      current.end = ++i;
      continue;
    }
    if (const std::size_t n = apostrophe_at(input, i); n > 0 && open) {
      // Only join when a letter follows ("don't"); a trailing quote closes the word.
      if (i + n < input.size() && is_alnum(static_cast<unsigned char>(input[i + n]))) {
        i += n;
        continue;
      }
    }
    if (open) {
      tokens.push_back(std::move(current));
      open = false;
    }
    ++i;
  }
  if (open) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> words(std::string_view input) {
  std::vector<std::string> out;
  for (auto& t : tokenize(input)) out.push_back(std::move(t.word));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace a2p2::text
