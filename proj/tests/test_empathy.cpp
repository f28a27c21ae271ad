#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "a2p2/empathy.hpp"
#include "a2p2/error.hpp"
#include "a2p2/random.hpp"
#include "a2p2/text.hpp"
#include "support.hpp"

using namespace a2p2;
using nlohmann::json;

namespace {

const empathy::ResponseBank& bank() { return a2p2::testing::shipped()->bank; }
const empathy::ScorerConfig& scorer() { return a2p2::testing::shipped()->scorer; }

json raw(const char* file) {
  std::ifstream in(a2p2::testing::data_dir() / file);
  return json::parse(in);
}

// Scores straight from the raw files, sorted best first with id tie-break.
std::vector<std::pair<double, std::string>> oracle_ranking(const std::string& utterance, const nlu::NluResult& nlu) {
  const json cfg = raw("scorer.json");
  std::set<std::string> stop(cfg["stop_words"].begin(), cfg["stop_words"].end());
  const auto content = [&](const std::string& s) {
    std::set<std::string> out;
    for (const auto& w : text::words(s)) {
      if (!stop.count(w)) out.insert(w);
    }
    return out;
  };
  const auto u = content(utterance);
  std::vector<std::pair<double, std::string>> out;
  for (const auto& e : raw("responses.json")) {
    const auto r = content(e["text"]);
    std::size_t common = 0;
    for (const auto& w : r) common += u.count(w);
    double s = r.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(r.size());
    for (const auto& t : e["emotion_tags"]) {
      if (nlu.emotion && t == *nlu.emotion) s += cfg["weights"]["emotion"].get<double>();
    }
    for (const auto& t : e["symptom_tags"]) {
      if (nlu.symptom && t == *nlu.symptom) s += cfg["weights"]["symptom"].get<double>();
    }
    out.emplace_back(s, e["id"]);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  return out;
}

std::vector<std::string> ids(const std::vector<empathy::RankedSuggestion>& list) {
  std::vector<std::string> out;
  for (const auto& r : list) out.push_back(r.response_id);
  return out;
}

// The tracker's view on an open-ended turn: whatever this utterance carries,
// falling back to the symptom established earlier in the scenario.
nlu::NluResult context(const std::string& utterance, const std::string& symptom) {
  auto r = a2p2::testing::shipped()->analyzer.analyze(utterance);
  if (!r.symptom) r.symptom = symptom;
  return r;
}

struct OpenTurn {
  std::string scenario, symptom, text, gold;
};

std::vector<OpenTurn> open_turns() {
  std::vector<OpenTurn> out;
  for (const char* name : {"sleep_disturbance.json", "stress.json"}) {
    std::ifstream in(a2p2::testing::data_dir() / "scenarios" / name);
    const json doc = json::parse(in);
    for (const auto& t : doc["turns"]) {
      if (t["kind"] == "open_ended") out.push_back({doc["id"], doc["symptom_gold"], t["client_text"], t["empathic_gold"]});
    }
  }
  return out;
}

}  // namespace

TEST(ResponseBank, HoldsExactly78) {
  EXPECT_EQ(bank().size(), 78u);
  EXPECT_EQ(empathy::kBankSize, 78u);
  std::set<std::string> seen;
  for (const auto& r : bank().responses()) {
    EXPECT_FALSE(r.text.empty());
    EXPECT_TRUE(seen.insert(r.id).second);
    for (const auto& t : r.emotion_tags) EXPECT_TRUE(nlu::is_emotion(t)) << r.id;
  }
}

TEST(ResponseBank, HasAtLeastTenSimpleReflections) {
  int simple = 0;
  for (const auto& r : bank().responses()) simple += r.depth == empathy::Depth::simple ? 1 : 0;
  EXPECT_GE(simple, 10);
  bool sorry = false;
  for (const auto& r : bank().responses()) sorry |= r.text == "I'm sorry to hear that.";
  EXPECT_TRUE(sorry);
}

TEST(ResponseBank, RejectsWrongSizeAndBadTags) {
  json doc = raw("responses.json");
  doc.erase(doc.begin());
  EXPECT_THROW(empathy::ResponseBank::from_json(doc), Error);
  EXPECT_NO_THROW(empathy::ResponseBank::from_json(doc, nullptr, std::nullopt));
  json bad = raw("responses.json");
  bad[0]["emotion_tags"] = {"angry"};
  EXPECT_THROW(empathy::ResponseBank::from_json(bad), Error);
  bad = raw("responses.json");
  bad[0]["symptom_tags"] = {"hiccups"};
  EXPECT_THROW(empathy::ResponseBank::from_json(bad, &a2p2::testing::shipped()->graph), Error);
}

TEST(Rank, SleepPromptPutsSleepReflectionFirst) {
  const auto turns = open_turns();
  const auto& t = turns[0];
  ASSERT_EQ(t.scenario, "sleep_disturbance");
  const auto list = empathy::rank(bank(), scorer(), t.text, context(t.text, t.symptom));
  EXPECT_EQ(bank().find(list[0].response_id)->text,
            "I'm sorry to hear you haven't been sleeping well. It's hard to feel refreshed and ready for the day "
            "ahead when you didn't get a good night of sleep.");
}

TEST(Rank, ChildPromptPutsKidsReflectionFirst) {
  const auto turns = open_turns();
  const auto& t = turns[2];
  ASSERT_EQ(t.scenario, "stress");
  const auto list = empathy::rank(bank(), scorer(), t.text, context(t.text, t.symptom));
  EXPECT_EQ(bank().find(list[0].response_id)->text,
            "That sounds difficult. Kids bring us joy but sometimes can be hard to deal with.");
}

TEST(Rank, EveryGoldRanksFirst) {
  for (const auto& t : open_turns()) {
    const auto list = empathy::rank(bank(), scorer(), t.text, context(t.text, t.symptom));
    EXPECT_EQ(list[0].response_id, t.gold) << t.scenario << ": " << t.text;
  }
}

TEST(Rank, NoTagMatchFallsBackToOverlapThenId) {
  const std::string u = "The garden needs weeding before the neighbours visit on Sunday.";
  const auto got = empathy::rank(bank(), scorer(), u, nlu::NluResult{});
  const auto oracle = oracle_ranking(u, nlu::NluResult{});
  ASSERT_EQ(got.size(), oracle.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].response_id, oracle[i].second) << i;
    EXPECT_NEAR(got[i].score, oracle[i].first, 1e-12);
  }
}

TEST(Rank, MatchesBruteForceScoresForEveryScenarioUtterance) {
  for (const char* name : {"sleep_disturbance.json", "stress.json"}) {
    std::ifstream in(a2p2::testing::data_dir() / "scenarios" / name);
    const json doc = json::parse(in);
    for (const auto& t : doc["turns"]) {
      const std::string u = t["client_text"];
      const auto nlu = context(u, doc["symptom_gold"]);
      const auto got = empathy::rank(bank(), scorer(), u, nlu);
      const auto oracle = oracle_ranking(u, nlu);
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_EQ(got[i].response_id, oracle[i].second) << u;
        ASSERT_NEAR(got[i].score, oracle[i].first, 1e-12);
      }
    }
  }
}

TEST(Overlap, NormalizedByResponseContentWords) {
  std::set<std::string> stop = {"the", "is"};
  EXPECT_DOUBLE_EQ(empathy::overlap("sleep is hard", "the sleep is gone", stop), 0.5);
  EXPECT_DOUBLE_EQ(empathy::overlap("anything", "the is", stop), 0.0);
}

TEST(EmpathyProperty, RankIsAPermutationWithContiguousRanks) {
  for (const auto& t : open_turns()) {
    const auto list = empathy::rank(bank(), scorer(), t.text, context(t.text, t.symptom));
    ASSERT_EQ(list.size(), 78u);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_EQ(list[i].rank, static_cast<int>(i) + 1);
      EXPECT_TRUE(seen.insert(list[i].response_id).second);
      EXPECT_GE(list[i].score, 0.0);
      if (i > 0) EXPECT_LE(list[i].score, list[i - 1].score);
    }
  }
}

TEST(EmpathyProperty, AddingTheInferredEmotionNeverLowersRank) {
  const std::string u = "I feel so overwhelmed with everything going on";
  const nlu::NluResult nlu{"stress", "overwhelmed", {{"overwhelmed", 9, 20}}};
  const auto base = empathy::rank(bank(), scorer(), u, nlu);
  const auto rank_of = [](const std::vector<empathy::RankedSuggestion>& l, const std::string& id) {
    for (const auto& r : l) {
      if (r.response_id == id) return r.rank;
    }
    return -1;
  };
  for (const auto& target : bank().responses()) {
    if (target.emotion_tags.count("overwhelmed")) continue;
    auto responses = bank().responses();
    for (auto& r : responses) {
      if (r.id == target.id) r.emotion_tags.insert("overwhelmed");
    }
    const auto changed = empathy::rank(empathy::ResponseBank::from_responses(responses), scorer(), u, nlu);
    EXPECT_LE(rank_of(changed, target.id), rank_of(base, target.id)) << target.id;
  }
}

TEST(EmpathyProperty, ScoreIgnoresBankFileOrder) {
  auto responses = bank().responses();
  std::reverse(responses.begin(), responses.end());
  const auto t = open_turns()[1];
  const auto nlu = context(t.text, t.symptom);
  EXPECT_EQ(empathy::rank(empathy::ResponseBank::from_responses(responses), scorer(), t.text, nlu),
            empathy::rank(bank(), scorer(), t.text, nlu));
}

TEST(ControlOrder, SameSeedSamePermutation) {
  EXPECT_EQ(empathy::control_order(bank(), 42), empathy::control_order(bank(), 42));
}

TEST(ControlOrder, DifferentSeedsDiffer) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    EXPECT_NE(ids(empathy::control_order(bank(), s)), ids(empathy::control_order(bank(), s + 100))) << s;
  }
  EXPECT_NE(ids(empathy::control_order(bank(), 1)), ids(empathy::control_order(bank(), 2)));
}

TEST(ControlOrder, IsAPermutationOfTheBank) {
  for (std::uint64_t s : {0ULL, 7ULL, 42ULL, 123456789ULL}) {
    auto got = ids(empathy::control_order(bank(), s));
    std::vector<std::string> expected;
    for (const auto& r : bank().responses()) expected.push_back(r.id);
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(got, expected);
  }
}

TEST(ControlOrder, RecomputableFromFileOrderAndSeed) {
  std::vector<std::string> expected;
  for (const auto& e : raw("responses.json")) expected.push_back(e["id"]);
  Rng rng(42);
  shuffle(std::span<std::string>(expected), rng);
  const auto got = empathy::control_order(bank(), 42);
  EXPECT_EQ(ids(got), expected);
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].rank, static_cast<int>(i) + 1);
    EXPECT_EQ(got[i].score, 0.0);
  }
}

TEST(RankedSuggestion, JsonRoundTrip) {
  const auto list = empathy::control_order(bank(), 5);
  EXPECT_EQ(empathy::ranked_from_json(empathy::to_json(list)), list);
}
