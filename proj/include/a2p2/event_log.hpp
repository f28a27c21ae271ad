#pragma once

// Append-only session event log. One JSON object per line; the first line is
// always the system "init" event. Everything downstream (replay, metrics,
// scoring, statistics) reads sessions through SessionRecord.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a2p2/ckg.hpp"
#include "a2p2/dialog.hpp"
#include "a2p2/timestamp.hpp"

namespace a2p2::session {

enum class Actor { client, provider, system };

enum class EventKind {
  init,
  message,
  suggestion_list,
  goal_options,
  selection,
  link,
  step_select,
  step_complete,
  close,
};

std::string_view to_string(Actor a) noexcept;
std::string_view to_string(EventKind k) noexcept;
Actor parse_actor(std::string_view text);
EventKind parse_event_kind(std::string_view text);

struct Event {
  std::uint64_t seq = 0;
  Timestamp ts;
  Actor actor = Actor::system;
  EventKind kind = EventKind::init;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const Event&) const = default;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);
std::string to_json_line(const Event& e);

struct SessionRecord {
  std::string session_id;
  ckg::ClientProfile profile;  // as given at creation
  dialog::Condition condition = dialog::Condition::control;
  std::uint64_t seed = 0;
  int session_number = 1;
  int utc_offset_minutes = 0;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<Event> events;

  bool closed() const;

  // Checks seq numbering, timestamp order and the leading init event.
  static SessionRecord from_events(std::vector<Event> events);
  static SessionRecord from_jsonl(std::string_view text);
  static SessionRecord load(const std::filesystem::path& path);
  std::string to_jsonl() const;
};

// Folds the log back into the dialog state; `policy` must be the one the
// session ran under.
dialog::ConversationState replay_state(const dialog::Policy& policy, const SessionRecord& record);

// Creation profile plus every link event, in order.
ckg::ClientProfile replay_profile(const ckg::ClinicalGraph& graph, const SessionRecord& record);

struct ProviderTurn {
  std::uint64_t seq = 0;
  std::string step;
  bool empathic = false;
  std::optional<std::int64_t> rt_ms;  // unset when no client message was pending
  std::string text;
  std::optional<std::string> suggestion_id;
  std::vector<std::string> goal_ids;
  std::vector<std::string> solution_ids;
};

// Provider messages in log order; RT is recomputed from timestamps (time since
// the last unanswered client message), not read from the payload.
std::vector<ProviderTurn> provider_turns(const SessionRecord& record);

struct Metrics {
  double avg_rt_s = 0.0;
  std::vector<double> per_turn_rt_s;
  std::vector<double> empathy_turn_rt_s;
  std::vector<ProviderTurn> selections;
};

// Error(no_turns) when no provider message answered a client message.
Metrics compute_metrics(const SessionRecord& record);

nlohmann::json to_json(const Metrics& m);

}  // namespace a2p2::session
