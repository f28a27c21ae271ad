#include "a2p2/patientsim.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "a2p2/error.hpp"
#include "a2p2/random.hpp"

namespace a2p2::patientsim {

using nlohmann::json;
using session::Actor;
using session::Event;
using session::EventKind;

std::string_view to_string(TurnKind kind) noexcept {
  return kind == TurnKind::open_ended ? "open_ended" : "scripted";
}

namespace {

TurnKind parse_turn_kind(const std::string& text) {
  if (text == "scripted") return TurnKind::scripted;
  if (text == "open_ended") return TurnKind::open_ended;
  throw Error(Errc::validation_error, "unknown turn kind '" + text + "'", text);
}

}  // namespace

Scenario load_scenario(const json& doc, const ckg::ClinicalGraph& graph, const empathy::ResponseBank& bank) {
  Scenario sc;
  try {
    sc.id = doc.at("id").get<std::string>();
    sc.authored = doc.value("authored", true);
    sc.symptom_gold = doc.at("symptom_gold").get<std::string>();
    const auto& goals = doc.at("goal_gold");
    if (!goals.is_array() || goals.size() != 2) throw Error(Errc::validation_error, "goal_gold must hold two goal ids");
    sc.goal_gold = {goals[0].get<std::string>(), goals[1].get<std::string>()};
    for (const auto& t : doc.at("turns")) {
      ScenarioTurn turn;
      turn.client_text = t.at("client_text").get<std::string>();
      turn.kind = parse_turn_kind(t.at("kind").get<std::string>());
      if (t.contains("empathic_gold") && !t["empathic_gold"].is_null()) {
        turn.empathic_gold = t["empathic_gold"].get<std::string>();
      }
      sc.turns.push_back(std::move(turn));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("scenario: ") + e.what());
  }

  if (sc.id.empty()) throw Error(Errc::validation_error, "scenario id is empty");
  if (!graph.find_symptom(sc.symptom_gold)) {
    throw Error(Errc::validation_error, "scenario symptom_gold '" + sc.symptom_gold + "' is not in the graph", sc.symptom_gold);
  }
  int open = 0;
  for (const auto& t : sc.turns) {
    if (t.client_text.empty()) throw Error(Errc::validation_error, "scenario turn has empty client_text");
    if (t.kind == TurnKind::open_ended) {
      ++open;
      if (!t.empathic_gold) throw Error(Errc::validation_error, "open-ended turn without empathic_gold");
    }
    if (t.empathic_gold && !bank.find(*t.empathic_gold)) {
      throw Error(Errc::validation_error, "empathic_gold '" + *t.empathic_gold + "' is not in the bank", *t.empathic_gold);
    }
    if (t.kind == TurnKind::scripted && t.empathic_gold) {
      throw Error(Errc::validation_error, "scripted turn carries an empathic_gold", *t.empathic_gold);
    }
  }
  if (open != 2) {
    throw Error(Errc::validation_error, "scenario needs exactly two open-ended turns, found " + std::to_string(open));
  }
  std::vector<std::string> exclusive;
  for (const auto* g : graph.exclusive_goals(sc.symptom_gold)) exclusive.push_back(g->id);
  std::vector<std::string> gold(sc.goal_gold.begin(), sc.goal_gold.end());
  std::sort(gold.begin(), gold.end());
  for (const auto& g : gold) {
    if (!graph.find_goal(g)) throw Error(Errc::validation_error, "goal_gold '" + g + "' is not in the graph", g);
  }
  if (exclusive.size() < 2 || gold != std::vector<std::string>(exclusive.begin(), exclusive.begin() + 2)) {
    throw Error(Errc::validation_error, "goal_gold is not the exclusive goal pair of '" + sc.symptom_gold + "'");
  }
  return sc;
}

Scenario load_scenario(std::string_view document, const ckg::ClinicalGraph& graph, const empathy::ResponseBank& bank) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("scenario: ") + e.what());
  }
  return load_scenario(doc, graph, bank);
}

Scenario load_scenario_file(const std::filesystem::path& path, const ckg::ClinicalGraph& graph,
                            const empathy::ResponseBank& bank) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::parse_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(std::string_view(ss.str()), graph, bank);
}

InProcessEndpoint::InProcessEndpoint(session::SessionService& service, std::shared_ptr<ManualClock> clock)
    : service_(service), clock_(std::move(clock)) {}

std::string InProcessEndpoint::create_session(const json& request) {
  return service_.create_session(request.at("profile").get<ckg::ClientProfile>(),
                                 dialog::parse_condition(request.at("condition").get<std::string>()),
                                 request.value("seed", std::uint64_t{0}), request.value("session_number", 1),
                                 request.value("metadata", json::object()));
}

json InProcessEndpoint::post_client_message(const std::string& id, const std::string& text) {
  return session::to_json(service_.post_client_message(id, text));
}

json InProcessEndpoint::get_suggestions(const std::string& id, const std::string& step) {
  return session::to_json(service_.get_suggestions(id, step));
}

json InProcessEndpoint::present_goals(const std::string& id) { return session::to_json(service_.present_goals(id)); }

json InProcessEndpoint::post_provider_message(const std::string& id, const json& message) {
  session::ProviderMessage msg;
  msg.text = message.at("text").get<std::string>();
  if (message.contains("suggestion_id") && !message["suggestion_id"].is_null()) {
    msg.suggestion_id = message["suggestion_id"].get<std::string>();
  }
  msg.goal_ids = message.value("goal_ids", std::vector<std::string>{});
  msg.solution_ids = message.value("solution_ids", std::vector<std::string>{});
  return session::to_json(service_.post_provider_message(id, msg));
}

json InProcessEndpoint::state(const std::string& id) { return dialog::to_json(service_.state(id)); }

std::vector<Event> InProcessEndpoint::events_since(const std::string& id, std::uint64_t since,
                                                   std::chrono::milliseconds wait) {
  return service_.events_since(id, since, wait);
}

void InProcessEndpoint::close_session(const std::string& id) { service_.close_session(id); }

void InProcessEndpoint::elapse(std::chrono::milliseconds ms) {
  if (clock_) {
    clock_->advance(ms);
  } else {
    std::this_thread::sleep_for(ms);
  }
}

namespace {

bool has_action(const json& suggestions, std::string_view action) {
  for (const char* group : {"therapeutic", "blocked"}) {
    for (const auto& s : suggestions.at(group)) {
      if (s.at("action").get<std::string>() == action) return true;
    }
  }
  return false;
}

json auto_reply(SessionEndpoint& endpoint, const std::string& id, const std::string& step) {
  const json sugg = endpoint.get_suggestions(id, step);
  json msg{{"goal_ids", json::array()}, {"solution_ids", json::array()}};
  const auto& therapeutic = sugg.at("therapeutic");
  const auto& empathic = sugg.at("empathic");
  if (!empathic.empty()) {
    msg["text"] = empathic[0].at("text");
    msg["suggestion_id"] = empathic[0].at("id");
    return msg;
  }
  if (therapeutic.empty()) throw Error(Errc::protocol_error, "no suggestion available on step '" + step + "'", step);
  msg["text"] = therapeutic[0].at("text");
  msg["suggestion_id"] = therapeutic[0].at("id");
  if (has_action(sugg, "recommend_goals")) {
    const json goals = endpoint.present_goals(id);
    const auto& options = goals.at("options");
    for (std::size_t i = 0; i < std::min<std::size_t>(2, options.size()); ++i) msg["goal_ids"].push_back(options[i]);
  } else if (!sugg.at("solutions").empty()) {
    msg["solution_ids"].push_back(sugg.at("solutions")[0].at("id"));
  }
  return msg;
}

// Blocks until a provider message answers the client message at `client_seq`.
void await_provider(SessionEndpoint& endpoint, const std::string& id, std::uint64_t client_seq,
                    std::chrono::milliseconds timeout) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + timeout;
  std::uint64_t next = client_seq + 1;
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    if (left.count() <= 0) throw Error(Errc::timeout, "provider did not answer within " + std::to_string(timeout.count()) + " ms", id);
    for (const auto& e : endpoint.events_since(id, next, std::min(left, std::chrono::milliseconds{1000}))) {
      if (e.seq != next) throw Error(Errc::protocol_error, "event sequence gap at " + std::to_string(next), id);
      ++next;
      if (e.kind == EventKind::close) throw Error(Errc::protocol_error, "session closed mid-scenario", id);
      if (e.kind != EventKind::message) continue;
      if (e.actor == Actor::client) throw Error(Errc::protocol_error, "unexpected client message", id);
      if (e.actor == Actor::provider) return;
    }
  }
}

}  // namespace

DriveResult drive(const Scenario& scenario, SessionEndpoint& endpoint, const DriveOptions& options) {
  ckg::ClientProfile profile;
  profile.client_id = options.client_id;
  profile.name = options.client_name;
  json metadata = options.metadata.is_object() ? options.metadata : json::object();
  metadata["scenario"] = scenario.id;
  const std::string id = endpoint.create_session(json{{"profile", profile},
                                                      {"condition", dialog::to_string(options.condition)},
                                                      {"seed", options.seed},
                                                      {"metadata", metadata}});
  Rng think(derive_seed(options.seed, 3));
  std::optional<std::uint64_t> last_seq;

  for (const auto& turn : scenario.turns) {
    const json ack = endpoint.post_client_message(id, turn.client_text);
    const auto seq = ack.at("seq").get<std::uint64_t>();
    if (last_seq && seq <= *last_seq) throw Error(Errc::protocol_error, "client message acknowledged out of order", id);
    last_seq = seq;

    if (options.provider == ProviderMode::human) {
      await_provider(endpoint, id, seq, options.provider_timeout);
    } else {
      const auto jitter = options.think_jitter.count() > 0
                              ? uniform_below(think, static_cast<std::uint64_t>(options.think_jitter.count()) + 1)
                              : 0;
      endpoint.elapse(options.think_time + std::chrono::milliseconds(jitter));
      const std::string step = endpoint.state(id).at("selected_step").get<std::string>();
      const json reply = endpoint.post_provider_message(id, auto_reply(endpoint, id, step));
      const auto rseq = reply.at("seq").get<std::uint64_t>();
      if (rseq <= *last_seq) throw Error(Errc::protocol_error, "provider message acknowledged out of order", id);
      last_seq = rseq;
    }
    endpoint.elapse(options.client_gap);
  }
  endpoint.close_session(id);
  return {id, session::SessionRecord::from_events(endpoint.events_since(id, 0, std::chrono::milliseconds{0}))};
}

AccuracyReport score(const session::SessionRecord& record, const Scenario& scenario) {
  AccuracyReport r;
  r.scenario_id = scenario.id;
  r.condition = record.condition;

  std::map<std::string, std::vector<empathy::RankedSuggestion>> lists;  // latest list per step
  std::vector<std::pair<std::optional<std::string>, std::optional<int>>> empathic;  // selected id, gold rank
  std::set<std::string> selected_goals;
  bool any_goal_selection = false;
  std::optional<std::string> linked_symptom;

  for (const auto& e : record.events) {
    if (e.kind == EventKind::suggestion_list) {
      lists[e.payload.at("step").get<std::string>()] = empathy::ranked_from_json(e.payload.at("list"));
    } else if (e.kind == EventKind::message && e.actor == Actor::provider && e.payload.value("empathic", false)) {
      const std::size_t k = empathic.size();
      std::optional<std::string> chosen;
      if (e.payload.contains("suggestion_id") && !e.payload["suggestion_id"].is_null()) {
        chosen = e.payload["suggestion_id"].get<std::string>();
      }
      std::optional<int> gold_rank;
      std::size_t open_index = 0;
      for (const auto& t : scenario.turns) {
        if (t.kind != TurnKind::open_ended) continue;
        if (open_index++ != k) continue;
        if (auto it = lists.find(e.payload.at("step").get<std::string>()); it != lists.end()) {
          for (const auto& s : it->second) {
            if (s.response_id == *t.empathic_gold) gold_rank = s.rank;
          }
        }
      }
      empathic.emplace_back(chosen, gold_rank);
    } else if (e.kind == EventKind::selection) {
      for (const auto& g : e.payload.value("goal_ids", std::vector<std::string>{})) {
        selected_goals.insert(g);
        any_goal_selection = true;
      }
    } else if (e.kind == EventKind::link && e.payload.at("kind").get<std::string>() == "symptom") {
      linked_symptom = e.payload.at("node").get<std::string>();
    }
  }

  if (empathic.size() < 2) {
    throw Error(Errc::incomplete_record, "record answers " + std::to_string(empathic.size()) + " of 2 open-ended turns",
                record.session_id);
  }
  if (!any_goal_selection) throw Error(Errc::incomplete_record, "record selects no goals", record.session_id);

  std::size_t k = 0;
  for (const auto& t : scenario.turns) {
    if (t.kind != TurnKind::open_ended) continue;
    const auto& [chosen, rank] = empathic[k++];
    if (chosen && *chosen == *t.empathic_gold) ++r.empathic_correct;
    r.empathic_selected.push_back(chosen);
    r.gold_rank.push_back(rank);
  }
  for (const auto& g : scenario.goal_gold) r.goal_correct += selected_goals.count(g) ? 1 : 0;
  r.symptom_identified = linked_symptom == scenario.symptom_gold;
  for (const auto& turn : session::provider_turns(record)) {
    if (turn.rt_ms) r.per_turn_rt.push_back(static_cast<double>(*turn.rt_ms) / 1000.0);
  }
  return r;
}

json to_json(const AccuracyReport& report) {
  json selected = json::array();
  for (const auto& s : report.empathic_selected) selected.push_back(s ? json(*s) : json(nullptr));
  json ranks = json::array();
  for (const auto& r : report.gold_rank) ranks.push_back(r ? json(*r) : json(nullptr));
  return json{{"scenario", report.scenario_id},
              {"condition", dialog::to_string(report.condition)},
              {"empathic_correct", report.empathic_correct},
              {"goal_correct", report.goal_correct},
              {"symptom_identified", report.symptom_identified},
              {"per_turn_rt", report.per_turn_rt},
              {"empathic_selected", selected},
              {"gold_rank", ranks}};
}

}  // namespace a2p2::patientsim
