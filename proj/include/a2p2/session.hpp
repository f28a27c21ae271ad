#pragma once

// The session service: owns live sessions, runs every client/provider message
// through NLU, dialog, NLG and the empathy ranker, and writes each event to an
// append-only JSON-lines file per session.
//
// Each session has its own mutex, so all writes to one session are serialized
// while different sessions proceed in parallel. The server clock is the only
// clock: response times come from event timestamps.

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a2p2/ckg.hpp"
#include "a2p2/dialog.hpp"
#include "a2p2/empathy.hpp"
#include "a2p2/event_log.hpp"
#include "a2p2/nlg.hpp"
#include "a2p2/nlu.hpp"
#include "a2p2/timestamp.hpp"

namespace a2p2::session {

struct ResourcePaths {
  std::filesystem::path graph;
  std::filesystem::path emotions;
  std::filesystem::path policy;
  std::optional<std::filesystem::path> followup_policy;
  std::filesystem::path templates;
  std::filesystem::path responses;
  std::filesystem::path scorer;

  // The shipped files under `dir` (defaults to the build's data directory).
  static ResourcePaths defaults(const std::filesystem::path& dir = A2P2_DEFAULT_DATA_DIR);
};

// Everything immutable a session needs. Shared read-only across sessions.
struct Resources {
  ckg::ClinicalGraph graph;
  nlu::Analyzer analyzer;
  dialog::Policy policy;
  std::optional<dialog::Policy> followup_policy;
  nlg::TemplateBank templates;
  empathy::ResponseBank bank;
  empathy::ScorerConfig scorer;

  static std::shared_ptr<const Resources> load(const ResourcePaths& paths);

  // Session 1 runs the first-session policy; later sessions use the follow-up
  // table when one was loaded.
  const dialog::Policy& policy_for(int session_number) const;

  // Renders ids held in slots as display text (symptom name, goal text, ...).
  std::string render_slot(dialog::Slot slot, const std::string& value) const;
};

struct ClientAck {
  std::uint64_t seq = 0;
  Timestamp delivered_at;
  nlu::NluResult nlu;
  bool suggestions_ready = false;  // an empathic list was computed for this message
};

struct ProviderMessage {
  std::string text;
  std::optional<std::string> suggestion_id;
  std::vector<std::string> goal_ids;
  std::vector<std::string> solution_ids;
};

struct ProviderAck {
  std::uint64_t seq = 0;
  Timestamp received_at;
  std::optional<std::int64_t> rt_ms;
  std::string completed_step;
  std::string selected_step;
  bool finishable = false;
};

struct TherapeuticSuggestion {
  std::string template_id;
  std::string action;
  std::string text;
};

struct BlockedSuggestion {
  std::string template_id;
  std::string action;
  std::string text;  // unfilled template
  std::vector<dialog::Slot> missing;
};

struct EmpathicSuggestion {
  std::string id;
  std::string text;
  double score = 0.0;
  int rank = 0;
};

struct Suggestions {
  std::string step;
  std::vector<TherapeuticSuggestion> therapeutic;
  std::vector<BlockedSuggestion> blocked;
  std::vector<EmpathicSuggestion> empathic;  // only on empathic steps
  std::vector<ckg::SolutionRecommendation> solutions;
};

struct GoalPresentation {
  std::vector<std::string> options;
  std::array<std::string, 2> correct_pair;
  dialog::Condition mode = dialog::Condition::control;
};

struct ServiceOptions {
  std::optional<std::filesystem::path> data_dir;
  std::chrono::minutes utc_offset{0};
};

class SessionService {
 public:
  SessionService(std::shared_ptr<const Resources> resources, std::shared_ptr<Clock> clock, ServiceOptions options = {});
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  std::string create_session(const ckg::ClientProfile& profile, dialog::Condition condition, std::uint64_t seed,
                             int session_number = 1, nlohmann::json metadata = nlohmann::json::object());

  ClientAck post_client_message(const std::string& session_id, const std::string& text);
  Suggestions get_suggestions(const std::string& session_id, std::string_view step) const;
  GoalPresentation present_goals(const std::string& session_id);
  ProviderAck post_provider_message(const std::string& session_id, const ProviderMessage& message);
  void select_step(const std::string& session_id, std::string_view step);
  void complete_step(const std::string& session_id, std::string_view step);
  void close_session(const std::string& session_id);

  Metrics get_metrics(const std::string& session_id) const;
  dialog::ConversationState state(const std::string& session_id) const;
  ckg::ClientProfile profile(const std::string& session_id) const;
  SessionRecord record(const std::string& session_id) const;

  // Events with seq >= `since`; blocks up to `wait` when there are none yet.
  std::vector<Event> events_since(const std::string& session_id, std::uint64_t since,
                                  std::chrono::milliseconds wait = std::chrono::milliseconds{0}) const;

  std::vector<std::string> session_ids() const;

  // Links gathered for a client across every session this service knows of.
  ckg::ClientProfile client_history(const std::string& client_id) const;

  const Resources& resources() const noexcept { return *resources_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::string next_id();
  void load_existing();

  std::shared_ptr<const Resources> resources_;
  std::shared_ptr<Clock> clock_;
  ServiceOptions options_;

  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_number_ = 1;
};

nlohmann::json to_json(const Suggestions& s);
nlohmann::json to_json(const GoalPresentation& g);
nlohmann::json to_json(const ProviderAck& a);
nlohmann::json to_json(const ClientAck& a);

}  // namespace a2p2::session
