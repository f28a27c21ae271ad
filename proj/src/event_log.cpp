#include "a2p2/event_log.hpp"

#include <fstream>
#include <sstream>

#include "a2p2/error.hpp"
#include "a2p2/nlu.hpp"

namespace a2p2::session {

using nlohmann::json;

std::string_view to_string(Actor a) noexcept {
  switch (a) {
    case Actor::client: return "client";
    case Actor::provider: return "provider";
    case Actor::system: return "system";
  }
  return "?";
}

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::init: return "init";
    case EventKind::message: return "message";
    case EventKind::suggestion_list: return "suggestion_list";
    case EventKind::goal_options: return "goal_options";
    case EventKind::selection: return "selection";
    case EventKind::link: return "link";
    case EventKind::step_select: return "step_select";
    case EventKind::step_complete: return "step_complete";
    case EventKind::close: return "close";
  }
  return "?";
}

Actor parse_actor(std::string_view text) {
  if (text == "client") return Actor::client;
  if (text == "provider") return Actor::provider;
  if (text == "system") return Actor::system;
  throw Error(Errc::parse_error, "unknown actor '" + std::string(text) + "'");
}

EventKind parse_event_kind(std::string_view text) {
  for (auto k : {EventKind::init, EventKind::message, EventKind::suggestion_list, EventKind::goal_options,
                 EventKind::selection, EventKind::link, EventKind::step_select, EventKind::step_complete,
                 EventKind::close}) {
    if (to_string(k) == text) return k;
  }
  throw Error(Errc::parse_error, "unknown event kind '" + std::string(text) + "'");
}

json to_json(const Event& e) {
  return json{{"seq", e.seq},
              {"ts", format_iso8601(e.ts)},
              {"actor", to_string(e.actor)},
              {"kind", to_string(e.kind)},
              {"payload", e.payload}};
}

Event event_from_json(const json& j) {
  try {
    return Event{j.at("seq").get<std::uint64_t>(), parse_iso8601(j.at("ts").get<std::string>()),
                 parse_actor(j.at("actor").get<std::string>()), parse_event_kind(j.at("kind").get<std::string>()),
                 j.value("payload", json::object())};
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad event: ") + e.what());
  }
}

std::string to_json_line(const Event& e) { return to_json(e).dump() + "\n"; }

bool SessionRecord::closed() const { return !events.empty() && events.back().kind == EventKind::close; }

SessionRecord SessionRecord::from_events(std::vector<Event> events) {
  if (events.empty() || events.front().kind != EventKind::init) {
    throw Error(Errc::parse_error, "session log must start with an init event");
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].seq != i) throw Error(Errc::protocol_error, "event seq " + std::to_string(events[i].seq) + " out of order");
    if (i > 0 && events[i].ts < events[i - 1].ts) {
      throw Error(Errc::protocol_error, "event timestamps go backwards at seq " + std::to_string(i));
    }
    if (i > 0 && events[i].kind == EventKind::init) throw Error(Errc::protocol_error, "second init event");
  }
  const auto& p = events.front().payload;
  SessionRecord r;
  try {
    r.session_id = p.at("session_id").get<std::string>();
    r.profile = p.at("profile").get<ckg::ClientProfile>();
    r.condition = dialog::parse_condition(p.at("condition").get<std::string>());
    r.seed = p.at("seed").get<std::uint64_t>();
    r.session_number = p.value("session_number", 1);
    r.utc_offset_minutes = p.value("utc_offset_minutes", 0);
    r.metadata = p.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad init event: ") + e.what());
  }
  r.events = std::move(events);
  return r;
}

SessionRecord SessionRecord::from_jsonl(std::string_view text) {
  std::vector<Event> events;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(Errc::parse_error, e.what());
    }
  }
  return from_events(std::move(events));
}

SessionRecord SessionRecord::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::parse_error, "cannot open transcript " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

std::string SessionRecord::to_jsonl() const {
  std::string out;
  for (const auto& e : events) out += to_json_line(e);
  return out;
}

namespace {

std::vector<std::string> string_list(const json& payload, const char* key) {
  std::vector<std::string> out;
  if (auto it = payload.find(key); it != payload.end() && it->is_array()) {
    for (const auto& v : *it) out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

dialog::ConversationState replay_state(const dialog::Policy& policy, const SessionRecord& record) {
  const auto& init = record.events.front();
  auto state = dialog::init_session(policy, record.profile, record.session_number, record.condition, init.ts,
                                    std::chrono::minutes(record.utc_offset_minutes));
  for (std::size_t i = 1; i < record.events.size(); ++i) {
    const auto& e = record.events[i];
    switch (e.kind) {
      case EventKind::message:
        if (e.actor == Actor::client) state = dialog::absorb(std::move(state), nlu::nlu_result_from_json(e.payload.at("nlu")));
        break;
      case EventKind::selection: {
        const auto goals = string_list(e.payload, "goal_ids");
        const auto solutions = string_list(e.payload, "solution_ids");
        if (!goals.empty()) state = dialog::set_slot(std::move(state), dialog::Slot::goal, goals.front());
        if (!solutions.empty()) state = dialog::set_slot(std::move(state), dialog::Slot::solution, solutions.front());
        break;
      }
      case EventKind::step_select:
        state = dialog::select_step(policy, std::move(state), e.payload.at("step").get<std::string>());
        break;
      case EventKind::step_complete:
        state = dialog::complete_step(policy, std::move(state), e.payload.at("step").get<std::string>());
        break;
      default:
        break;
    }
  }
  return state;
}

ckg::ClientProfile replay_profile(const ckg::ClinicalGraph& graph, const SessionRecord& record) {
  auto profile = record.profile;
  for (const auto& e : record.events) {
    if (e.kind != EventKind::link) continue;
    profile = ckg::link_client(graph, std::move(profile), e.payload.at("node").get<std::string>(),
                               ckg::parse_link_kind(e.payload.at("kind").get<std::string>()), e.ts);
  }
  return profile;
}

std::vector<ProviderTurn> provider_turns(const SessionRecord& record) {
  std::vector<ProviderTurn> out;
  std::optional<Timestamp> pending;
  for (const auto& e : record.events) {
    if (e.kind != EventKind::message) continue;
    if (e.actor == Actor::client) {
      pending = e.ts;
      continue;
    }
    if (e.actor != Actor::provider) continue;
    ProviderTurn t;
    t.seq = e.seq;
    t.step = e.payload.value("step", std::string{});
    t.empathic = e.payload.value("empathic", false);
    t.text = e.payload.value("text", std::string{});
    if (auto it = e.payload.find("suggestion_id"); it != e.payload.end() && it->is_string()) {
      t.suggestion_id = it->get<std::string>();
    }
    t.goal_ids = string_list(e.payload, "goal_ids");
    t.solution_ids = string_list(e.payload, "solution_ids");
    if (pending) {
      t.rt_ms = (e.ts - *pending).count();
      pending.reset();
    }
    out.push_back(std::move(t));
  }
  return out;
}

Metrics compute_metrics(const SessionRecord& record) {
  Metrics m;
  m.selections = provider_turns(record);
  double total = 0.0;
  for (const auto& t : m.selections) {
    if (!t.rt_ms) continue;
    const double s = static_cast<double>(*t.rt_ms) / 1000.0;
    m.per_turn_rt_s.push_back(s);
    if (t.empathic) m.empathy_turn_rt_s.push_back(s);
    total += s;
  }
  if (m.per_turn_rt_s.empty()) throw Error(Errc::no_turns, "session '" + record.session_id + "' has no answered turns");
  m.avg_rt_s = total / static_cast<double>(m.per_turn_rt_s.size());
  return m;
}

json to_json(const Metrics& m) {
  json selections = json::array();
  for (const auto& t : m.selections) {
    selections.push_back({{"seq", t.seq},
                          {"step", t.step},
                          {"empathic", t.empathic},
                          {"rt_ms", t.rt_ms ? json(*t.rt_ms) : json(nullptr)},
                          {"text", t.text},
                          {"suggestion_id", t.suggestion_id ? json(*t.suggestion_id) : json(nullptr)},
                          {"goal_ids", t.goal_ids},
                          {"solution_ids", t.solution_ids}});
  }
  return json{{"avg_rt", m.avg_rt_s},
              {"per_turn_rt", m.per_turn_rt_s},
              {"empathy_turn_rts", m.empathy_turn_rt_s},
              {"selections", selections}};
}

}  // namespace a2p2::session
