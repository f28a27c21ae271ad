#pragma once

// Empathic response bank with a transparent ranker.
//
//   score = w_emotion * [inferred emotion in emotion_tags]
//         + w_symptom * [inferred symptom in symptom_tags]
//         + w_overlap * |U & R| / |R|
//
// where U and R are the distinct non-stop-word tokens of the utterance and of
// the response text. Ties go to the smaller response id. The control
// condition gets a seeded Fisher-Yates permutation instead.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a2p2/ckg.hpp"
#include "a2p2/nlu.hpp"

namespace a2p2::empathy {

inline constexpr std::size_t kBankSize = 78;

enum class Depth { simple, complex };

struct EmpathicResponse {
  std::string id;
  std::string text;
  std::set<std::string> emotion_tags;
  std::set<std::string> symptom_tags;
  Depth depth = Depth::simple;
};

struct ScorerConfig {
  double emotion_weight = 3.0;
  double symptom_weight = 2.0;
  double overlap_weight = 1.0;
  std::set<std::string> stop_words;

  static ScorerConfig from_json(const nlohmann::json& doc);
  static ScorerConfig load_file(const std::filesystem::path& path);
};

class ResponseBank {
 public:
  // `graph`, when given, is used to check symptom tags. `expected_size` is the
  // shipped bank size; pass nullopt for hand-built fixtures.
  static ResponseBank from_json(const nlohmann::json& doc, const ckg::ClinicalGraph* graph = nullptr,
                                std::optional<std::size_t> expected_size = kBankSize);
  static ResponseBank load_file(const std::filesystem::path& path, const ckg::ClinicalGraph* graph = nullptr,
                                std::optional<std::size_t> expected_size = kBankSize);
  static ResponseBank from_responses(std::vector<EmpathicResponse> responses);

  const std::vector<EmpathicResponse>& responses() const noexcept { return responses_; }
  const EmpathicResponse* find(std::string_view id) const;
  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::vector<EmpathicResponse> responses_;  // file order
};

struct RankedSuggestion {
  std::string response_id;
  double score = 0.0;
  int rank = 0;  // 1-based

  bool operator==(const RankedSuggestion&) const = default;
};

double overlap(std::string_view utterance, std::string_view response, const std::set<std::string>& stop_words);

double score(const EmpathicResponse& response, const ScorerConfig& config, std::string_view utterance,
             const nlu::NluResult& nlu);

// The whole bank, best first.
std::vector<RankedSuggestion> rank(const ResponseBank& bank, const ScorerConfig& config, std::string_view utterance,
                                   const nlu::NluResult& nlu);

// The whole bank in a seeded Fisher-Yates order over bank-file order
// (Rng = std::mt19937_64 seeded with `seed`). All scores are zero.
std::vector<RankedSuggestion> control_order(const ResponseBank& bank, std::uint64_t seed);

nlohmann::json to_json(const std::vector<RankedSuggestion>& list);
std::vector<RankedSuggestion> ranked_from_json(const nlohmann::json& j);

}  // namespace a2p2::empathy
