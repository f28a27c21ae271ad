#pragma once

// Deterministic lexicon matcher standing in for a trained NLU pipeline.
//
// A phrase matches a contiguous run of utterance words (see text::tokenize).
// A "*" word inside a phrase matches a gap of up to kMaxGap words, so
// "thinking about * attack" matches "thinking about my child having an
// asthma attack". Among all matches the longest wins, measured as the length
// of the matched words joined by single spaces; ties go to the smaller label.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a2p2/ckg.hpp"

namespace a2p2::nlu {

inline constexpr std::size_t kMaxGap = 8;

inline constexpr std::array<std::string_view, 6> kEmotions = {"worried", "stressed", "overwhelmed",
                                                              "sad",     "tired",    "frustrated"};

bool is_emotion(std::string_view label) noexcept;

struct Evidence {
  std::string phrase;     // lexicon entry that fired
  std::size_t begin = 0;  // byte span in the original utterance
  std::size_t end = 0;

  bool operator==(const Evidence&) const = default;
};

struct Detection {
  std::string label;
  Evidence evidence;

  bool operator==(const Detection&) const = default;
};

struct NluResult {
  std::optional<std::string> symptom;
  std::optional<std::string> emotion;
  std::vector<Evidence> matches;

  bool operator==(const NluResult&) const = default;
};

class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::map<std::string, std::vector<std::string>>& phrases_by_label);

  static Lexicon from_graph(const ckg::ClinicalGraph& graph);
  // {emotion: [phrases]}; every key must be in kEmotions.
  static Lexicon emotions_from_json(const nlohmann::json& doc);
  static Lexicon emotions_from_file(const std::filesystem::path& path);

  std::optional<Detection> longest_match(std::string_view utterance) const;

  std::size_t size() const noexcept { return patterns_.size(); }

 private:
  struct Pattern {
    std::string label;
    std::string phrase;
    std::vector<std::string> words;  // "*" marks a gap
  };
  std::vector<Pattern> patterns_;
};

std::optional<Detection> detect_symptom(std::string_view utterance, const ckg::ClinicalGraph& graph);
std::optional<Detection> infer_emotion(std::string_view utterance, const Lexicon& emotions);

// Holds both compiled lexicons so a session can analyze each message once.
class Analyzer {
 public:
  Analyzer(const ckg::ClinicalGraph& graph, Lexicon emotions);

  NluResult analyze(std::string_view utterance) const;

 private:
  Lexicon symptoms_;
  Lexicon emotions_;
};

nlohmann::json to_json(const NluResult& result);
NluResult nlu_result_from_json(const nlohmann::json& j);

}  // namespace a2p2::nlu
