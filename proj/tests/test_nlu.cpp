#include <gtest/gtest.h>

#include <fstream>

#include "a2p2/error.hpp"
#include "a2p2/nlu.hpp"
#include "a2p2/text.hpp"
#include "support.hpp"

using namespace a2p2;
using nlohmann::json;

namespace {
using Phrases = std::map<std::string, std::vector<std::string>>;


const nlu::Analyzer& analyzer() { return a2p2::testing::shipped()->analyzer; }
const ckg::ClinicalGraph& graph() { return a2p2::testing::shipped()->graph; }

std::vector<std::string> scenario_utterances() {
  std::vector<std::string> out;
  for (const char* name : {"sleep_disturbance.json", "stress.json"}) {
    std::ifstream in(a2p2::testing::data_dir() / "scenarios" / name);
    for (const auto& t : json::parse(in)["turns"]) out.push_back(t["client_text"]);
  }
  return out;
}

// Symptoms whose lexicon has a wildcard-free phrase occurring as a contiguous
// token run in the utterance, read straight from the graph file.
std::set<std::string> oracle_symptoms(const std::string& utterance) {
  std::ifstream in(a2p2::testing::data_dir() / "graph.json");
  const json doc = json::parse(in);
  const std::string hay = " " + text::join(text::words(utterance), " ") + " ";
  std::set<std::string> out;
  for (const auto& s : doc["symptoms"]) {
    for (const auto& phrase : s["lexicon"]) {
      const std::string p = phrase;
      if (p.find('*') != std::string::npos) continue;
      if (hay.find(" " + text::join(text::words(p), " ") + " ") != std::string::npos) out.insert(s["id"]);
    }
  }
  return out;
}

}  // namespace

TEST(DetectSymptom, SleepUtterance) {
  const auto d = nlu::detect_symptom("I haven't been sleeping well lately", graph());
  ASSERT_TRUE(d);
  EXPECT_EQ(d->label, "sleep_disturbance");
  EXPECT_EQ(oracle_symptoms("I haven't been sleeping well lately"), std::set<std::string>{"sleep_disturbance"});
}

TEST(DetectSymptom, StressUtterance) {
  const auto d = nlu::detect_symptom("work has been so stressful", graph());
  ASSERT_TRUE(d);
  EXPECT_EQ(d->label, "stress");
  EXPECT_EQ(oracle_symptoms("work has been so stressful"), std::set<std::string>{"stress"});
}

TEST(DetectSymptom, EmptyTextIsNone) {
  EXPECT_FALSE(nlu::detect_symptom("", graph()));
  EXPECT_FALSE(nlu::detect_symptom("   ", graph()));
}

TEST(DetectSymptom, EvidenceSpanCoversThePhrase) {
  const std::string u = "Honestly I haven't been Sleeping  Well lately";
  const auto d = nlu::detect_symptom(u, graph());
  ASSERT_TRUE(d);
  EXPECT_EQ(u.substr(d->evidence.begin, d->evidence.end - d->evidence.begin), "Sleeping  Well");
}

TEST(InferEmotion, AsthmaWorryIsWorried) {
  const auto r = analyzer().analyze("I kept thinking about my child having an asthma attack.");
  ASSERT_TRUE(r.emotion);
  EXPECT_EQ(*r.emotion, "worried");
}

TEST(InferEmotion, Overwhelmed) {
  const auto r = analyzer().analyze("I feel so overwhelmed");
  ASSERT_TRUE(r.emotion);
  EXPECT_EQ(*r.emotion, "overwhelmed");
}

TEST(InferEmotion, EmptyTextIsNone) {
  const auto r = analyzer().analyze("");
  EXPECT_FALSE(r.emotion);
  EXPECT_FALSE(r.symptom);
  EXPECT_TRUE(r.matches.empty());
}

TEST(Lexicon, LongestMatchWins) {
  const nlu::Lexicon lex(Phrases{{"a_short", {"tired"}}, {"b_long", {"so very tired"}}});
  const auto d = lex.longest_match("I am so very tired today");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->label, "b_long");
}

TEST(Lexicon, EqualLengthTieGoesToSmallerLabel) {
  const nlu::Lexicon tie({{"zeta", {"sad week"}}, {"alpha", {"bad week"}}});
  const auto d = tie.longest_match("a sad week and a bad week");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->label, "alpha");
  const nlu::Lexicon flipped({{"alpha", {"sad week"}}, {"zeta", {"bad week"}}});
  EXPECT_EQ(flipped.longest_match("a sad week and a bad week")->label, "alpha");
  EXPECT_FALSE(tie.longest_match("nothing here"));
}

TEST(Lexicon, WildcardSpansABoundedGap) {
  const nlu::Lexicon lex(Phrases{{"worried", {"thinking about * attack"}}});
  EXPECT_TRUE(lex.longest_match("thinking about my child having an asthma attack"));
  EXPECT_TRUE(lex.longest_match("thinking about attack"));
  EXPECT_FALSE(lex.longest_match("thinking about a b c d e f g h i attack"));
}

TEST(Lexicon, RejectsMalformedPatterns) {
  EXPECT_THROW(nlu::Lexicon(Phrases{{"x", {"* start"}}}), Error);
  EXPECT_THROW(nlu::Lexicon(Phrases{{"x", {"end *"}}}), Error);
  EXPECT_THROW(nlu::Lexicon(Phrases{{"x", {"a * * b"}}}), Error);
}

TEST(Lexicon, EmotionLabelsMustBeInTheTaxonomy) {
  EXPECT_THROW(nlu::Lexicon::emotions_from_json(json{{"angry", {"furious"}}}), Error);
  EXPECT_NO_THROW(nlu::Lexicon::emotions_from_json(json{{"sad", {"down"}}}));
}

TEST(NluProperty, DeterministicAndCaseInsensitive) {
  for (const auto& u : scenario_utterances()) {
    const auto a = analyzer().analyze(u);
    EXPECT_EQ(a, analyzer().analyze(u));
    std::string upper = u;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    const auto b = analyzer().analyze(upper);
    EXPECT_EQ(a.symptom, b.symptom) << u;
    EXPECT_EQ(a.emotion, b.emotion) << u;
    std::string spaced;
    for (char c : u) spaced += (c == ' ') ? std::string("   ") : std::string(1, c);
    EXPECT_EQ(a.symptom, analyzer().analyze(spaced).symptom) << u;
  }
}

TEST(NluProperty, NoLabelWithoutEvidence) {
  for (const auto& u : scenario_utterances()) {
    const auto r = analyzer().analyze(u);
    if (r.symptom || r.emotion) EXPECT_FALSE(r.matches.empty()) << u;
    if (r.symptom) {
      EXPECT_NE(graph().find_symptom(*r.symptom), nullptr);
    }
    if (r.emotion) EXPECT_TRUE(nlu::is_emotion(*r.emotion));
  }
}

TEST(NluProperty, DetectedSymptomIsAmongTheOracleMatches) {
  for (const auto& u : scenario_utterances()) {
    const auto d = nlu::detect_symptom(u, graph());
    const auto oracle = oracle_symptoms(u);
    if (d) {
      EXPECT_TRUE(oracle.count(d->label)) << u;
    } else {
      EXPECT_TRUE(oracle.empty()) << u;
    }
  }
}

TEST(NluResult, JsonRoundTrip) {
  const auto r = analyzer().analyze("Work can be very stressful and I'm overwhelmed");
  EXPECT_EQ(nlu::nlu_result_from_json(nlu::to_json(r)), r);
}
