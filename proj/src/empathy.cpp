#include "a2p2/empathy.hpp"

#include <algorithm>
#include <fstream>

#include "a2p2/error.hpp"
#include "a2p2/random.hpp"
#include "a2p2/text.hpp"

namespace a2p2::empathy {

using nlohmann::json;

ScorerConfig ScorerConfig::from_json(const json& doc) {
  ScorerConfig c;
  try {
    if (doc.contains("weights")) {
      const auto& w = doc["weights"];
      c.emotion_weight = w.value("emotion", c.emotion_weight);
      c.symptom_weight = w.value("symptom", c.symptom_weight);
      c.overlap_weight = w.value("overlap", c.overlap_weight);
    }
    for (const auto& s : doc.value("stop_words", json::array())) {
      for (auto& w : text::words(s.get<std::string>())) c.stop_words.insert(std::move(w));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad scorer config: ") + e.what());
  }
  if (c.emotion_weight < 0 || c.symptom_weight < 0 || c.overlap_weight < 0) {
    throw Error(Errc::validation_error, "scorer weights must be non-negative");
  }
  return c;
}

ScorerConfig ScorerConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open scorer config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

ResponseBank ResponseBank::from_json(const json& doc, const ckg::ClinicalGraph* graph,
                                     std::optional<std::size_t> expected_size) {
  if (!doc.is_array()) throw Error(Errc::parse_error, "response bank must be a JSON array");
  std::vector<EmpathicResponse> responses;
  for (const auto& e : doc) {
    EmpathicResponse r;
    try {
      r.id = e.at("id").get<std::string>();
      r.text = e.at("text").get<std::string>();
      for (const auto& t : e.value("emotion_tags", json::array())) r.emotion_tags.insert(t.get<std::string>());
      for (const auto& t : e.value("symptom_tags", json::array())) r.symptom_tags.insert(t.get<std::string>());
      const auto depth = e.value("depth", std::string("simple"));
      if (depth == "simple") {
        r.depth = Depth::simple;
      } else if (depth == "complex") {
        r.depth = Depth::complex;
      } else {
        throw Error(Errc::validation_error, "response '" + r.id + "' has unknown depth '" + depth + "'");
      }
    } catch (const json::exception& ex) {
      throw Error(Errc::parse_error, std::string("bad response entry: ") + ex.what());
    }
    for (const auto& t : r.emotion_tags) {
      if (!nlu::is_emotion(t)) throw Error(Errc::validation_error, "response '" + r.id + "' has unknown emotion tag '" + t + "'");
    }
    if (graph) {
      for (const auto& t : r.symptom_tags) {
        if (!graph->find_symptom(t)) {
          throw Error(Errc::validation_error, "response '" + r.id + "' has unknown symptom tag '" + t + "'");
        }
      }
    }
    responses.push_back(std::move(r));
  }
  if (expected_size && responses.size() != *expected_size) {
    throw Error(Errc::validation_error, "response bank must hold " + std::to_string(*expected_size) + " entries, found " +
                                            std::to_string(responses.size()));
  }
  return from_responses(std::move(responses));
}

ResponseBank ResponseBank::load_file(const std::filesystem::path& path, const ckg::ClinicalGraph* graph,
                                     std::optional<std::size_t> expected_size) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open response bank " + path.string());
  try {
    return from_json(json::parse(in), graph, expected_size);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

ResponseBank ResponseBank::from_responses(std::vector<EmpathicResponse> responses) {
  std::set<std::string> ids;
  for (const auto& r : responses) {
    if (r.text.empty()) throw Error(Errc::validation_error, "response '" + r.id + "' has empty text");
    if (!ids.insert(r.id).second) throw Error(Errc::validation_error, "duplicate response id '" + r.id + "'");
  }
  ResponseBank bank;
  bank.responses_ = std::move(responses);
  return bank;
}

const EmpathicResponse* ResponseBank::find(std::string_view id) const {
  for (const auto& r : responses_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

namespace {

std::set<std::string> content_words(std::string_view s, const std::set<std::string>& stop_words) {
  std::set<std::string> out;
  for (auto& w : text::words(s)) {
    if (!stop_words.contains(w)) out.insert(std::move(w));
  }
  return out;
}

}  // namespace

double overlap(std::string_view utterance, std::string_view response, const std::set<std::string>& stop_words) {
  const auto r = content_words(response, stop_words);
  if (r.empty()) return 0.0;
  const auto u = content_words(utterance, stop_words);
  std::size_t shared = 0;
  for (const auto& w : r) shared += u.contains(w) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(r.size());
}

double score(const EmpathicResponse& response, const ScorerConfig& config, std::string_view utterance,
             const nlu::NluResult& nlu) {
  double s = config.overlap_weight * overlap(utterance, response.text, config.stop_words);
  if (nlu.emotion && response.emotion_tags.contains(*nlu.emotion)) s += config.emotion_weight;
  if (nlu.symptom && response.symptom_tags.contains(*nlu.symptom)) s += config.symptom_weight;
  return s;
}

std::vector<RankedSuggestion> rank(const ResponseBank& bank, const ScorerConfig& config, std::string_view utterance,
                                   const nlu::NluResult& nlu) {
  std::vector<RankedSuggestion> out;
  out.reserve(bank.size());
  for (const auto& r : bank.responses()) out.push_back({r.id, score(r, config, utterance, nlu), 0});
  std::sort(out.begin(), out.end(), [](const RankedSuggestion& a, const RankedSuggestion& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.response_id < b.response_id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

std::vector<RankedSuggestion> control_order(const ResponseBank& bank, std::uint64_t seed) {
  std::vector<RankedSuggestion> out;
  out.reserve(bank.size());
  for (const auto& r : bank.responses()) out.push_back({r.id, 0.0, 0});
  Rng rng(seed);
  shuffle(std::span<RankedSuggestion>(out), rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

json to_json(const std::vector<RankedSuggestion>& list) {
  json arr = json::array();
  for (const auto& s : list) arr.push_back({{"id", s.response_id}, {"score", s.score}, {"rank", s.rank}});
  return arr;
}

std::vector<RankedSuggestion> ranked_from_json(const json& j) {
  std::vector<RankedSuggestion> out;
  for (const auto& e : j) out.push_back({e.at("id").get<std::string>(), e.at("score").get<double>(), e.at("rank").get<int>()});
  return out;
}

}  // namespace a2p2::empathy
