#include "a2p2/nlu.hpp"

#include <algorithm>
#include <fstream>

#include "a2p2/error.hpp"
#include "a2p2/text.hpp"

namespace a2p2::nlu {

using nlohmann::json;

bool is_emotion(std::string_view label) noexcept {
  return std::find(kEmotions.begin(), kEmotions.end(), label) != kEmotions.end();
}

namespace {

std::vector<std::string> pattern_words(std::string_view phrase) {
  // Split on "*" first so the wildcard survives tokenization.
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto star = phrase.find('*', start);
    for (auto& w : text::words(phrase.substr(start, star == std::string_view::npos ? phrase.npos : star - start))) {
      out.push_back(std::move(w));
    }
    if (star == std::string_view::npos) break;
    out.emplace_back("*");
    start = star + 1;
  }
  return out;
}

// Matches `words` starting at token i. Returns one past the last matched token.
std::optional<std::size_t> match_at(const std::vector<text::Token>& tokens, std::size_t i,
                                    const std::vector<std::string>& words) {
  std::size_t j = i;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (words[k] == "*") {
      // Shortest gap that lets the next literal word match.
      const std::string& next = words[k + 1];
      std::optional<std::size_t> found;
      for (std::size_t gap = 0; gap <= kMaxGap && j + gap < tokens.size(); ++gap) {
        if (tokens[j + gap].word == next) {
          found = j + gap;
          break;
        }
      }
      if (!found) return std::nullopt;
      j = *found;
      continue;
    }
    if (j >= tokens.size() || tokens[j].word != words[k]) return std::nullopt;
    ++j;
  }
  return j;
}

}  // namespace

Lexicon::Lexicon(const std::map<std::string, std::vector<std::string>>& phrases_by_label) {
  for (const auto& [label, phrases] : phrases_by_label) {
    for (const auto& phrase : phrases) {
      auto words = pattern_words(phrase);
      if (words.empty() || words.front() == "*" || words.back() == "*") {
        throw Error(Errc::validation_error, "bad lexicon phrase '" + phrase + "' for '" + label + "'");
      }
      for (std::size_t k = 1; k < words.size(); ++k) {
        if (words[k] == "*" && words[k - 1] == "*") {
          throw Error(Errc::validation_error, "adjacent wildcards in '" + phrase + "'");
        }
      }
      patterns_.push_back({label, phrase, std::move(words)});
    }
  }
}

Lexicon Lexicon::from_graph(const ckg::ClinicalGraph& graph) {
  std::map<std::string, std::vector<std::string>> phrases;
  for (const auto& s : graph.symptoms()) phrases[s.id] = s.lexicon;
  return Lexicon(phrases);
}

Lexicon Lexicon::emotions_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::parse_error, "emotion lexicon must be an object");
  std::map<std::string, std::vector<std::string>> phrases;
  for (const auto& [label, list] : doc.items()) {
    if (!is_emotion(label)) throw Error(Errc::validation_error, "'" + label + "' is not in the emotion taxonomy");
    if (!list.is_array()) throw Error(Errc::parse_error, "phrases for '" + label + "' must be an array");
    for (const auto& p : list) {
      if (!p.is_string()) throw Error(Errc::parse_error, "phrases for '" + label + "' must be strings");
      phrases[label].push_back(p.get<std::string>());
    }
  }
  return Lexicon(phrases);
}

Lexicon Lexicon::emotions_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open emotion lexicon " + path.string());
  try {
    return emotions_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

std::optional<Detection> Lexicon::longest_match(std::string_view utterance) const {
  const auto tokens = text::tokenize(utterance);
  std::optional<Detection> best;
  std::size_t best_len = 0;
  for (const auto& p : patterns_) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto end = match_at(tokens, i, p.words);
      if (!end) continue;
      std::size_t len = *end - i - 1;  // separating spaces
      for (std::size_t t = i; t < *end; ++t) len += tokens[t].word.size();
      const bool better = !best || len > best_len || (len == best_len && p.label < best->label);
      if (better) {
        best = Detection{p.label, {p.phrase, tokens[i].begin, tokens[*end - 1].end}};
        best_len = len;
      }
    }
  }
  return best;
}

std::optional<Detection> detect_symptom(std::string_view utterance, const ckg::ClinicalGraph& graph) {
  return Lexicon::from_graph(graph).longest_match(utterance);
}

std::optional<Detection> infer_emotion(std::string_view utterance, const Lexicon& emotions) {
  return emotions.longest_match(utterance);
}

Analyzer::Analyzer(const ckg::ClinicalGraph& graph, Lexicon emotions)
    : symptoms_(Lexicon::from_graph(graph)), emotions_(std::move(emotions)) {}

NluResult Analyzer::analyze(std::string_view utterance) const {
  NluResult r;
  if (auto s = symptoms_.longest_match(utterance)) {
    r.symptom = s->label;
    r.matches.push_back(s->evidence);
  }
  if (auto e = emotions_.longest_match(utterance)) {
    r.emotion = e->label;
    r.matches.push_back(e->evidence);
  }
  return r;
}

json to_json(const NluResult& r) {
  json matches = json::array();
  for (const auto& m : r.matches) matches.push_back({{"phrase", m.phrase}, {"span", {m.begin, m.end}}});
  return json{{"symptom", r.symptom ? json(*r.symptom) : json(nullptr)},
              {"emotion", r.emotion ? json(*r.emotion) : json(nullptr)},
              {"matches", matches}};
}

NluResult nlu_result_from_json(const json& j) {
  NluResult r;
  if (j.contains("symptom") && j["symptom"].is_string()) r.symptom = j["symptom"].get<std::string>();
  if (j.contains("emotion") && j["emotion"].is_string()) r.emotion = j["emotion"].get<std::string>();
  if (j.contains("matches")) {
    for (const auto& m : j["matches"]) {
      r.matches.push_back({m.at("phrase").get<std::string>(), m.at("span").at(0).get<std::size_t>(),
                           m.at("span").at(1).get<std::size_t>()});
    }
  }
  return r;
}

}  // namespace a2p2::nlu
