#pragma once

// Standardized-patient simulator: replays an authored scenario against a
// session endpoint and scores the resulting transcript.

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "a2p2/ckg.hpp"
#include "a2p2/dialog.hpp"
#include "a2p2/empathy.hpp"
#include "a2p2/event_log.hpp"
#include "a2p2/session.hpp"

namespace a2p2::patientsim {

enum class TurnKind { scripted, open_ended };

std::string_view to_string(TurnKind kind) noexcept;

struct ScenarioTurn {
  std::string client_text;
  TurnKind kind = TurnKind::scripted;
  std::optional<std::string> empathic_gold;  // response id; set on open-ended turns
};

struct Scenario {
  std::string id;
  bool authored = true;
  std::string symptom_gold;
  std::array<std::string, 2> goal_gold;
  std::vector<ScenarioTurn> turns;
};

// Exactly two open-ended turns, each with a gold response; every id must exist
// and goal_gold must be the symptom's exclusive pair.
Scenario load_scenario(const nlohmann::json& doc, const ckg::ClinicalGraph& graph, const empathy::ResponseBank& bank);
Scenario load_scenario(std::string_view document, const ckg::ClinicalGraph& graph, const empathy::ResponseBank& bank);
Scenario load_scenario_file(const std::filesystem::path& path, const ckg::ClinicalGraph& graph,
                            const empathy::ResponseBank& bank);

// What the driver needs from a session service. All bodies are the JSON
// shapes of the HTTP API, so the in-process and networked variants are
// interchangeable.
class SessionEndpoint {
 public:
  virtual ~SessionEndpoint() = default;

  virtual std::string create_session(const nlohmann::json& request) = 0;
  virtual nlohmann::json post_client_message(const std::string& id, const std::string& text) = 0;
  virtual nlohmann::json get_suggestions(const std::string& id, const std::string& step) = 0;
  virtual nlohmann::json present_goals(const std::string& id) = 0;
  virtual nlohmann::json post_provider_message(const std::string& id, const nlohmann::json& message) = 0;
  virtual nlohmann::json state(const std::string& id) = 0;
  virtual std::vector<session::Event> events_since(const std::string& id, std::uint64_t since,
                                                   std::chrono::milliseconds wait) = 0;
  virtual void close_session(const std::string& id) = 0;

  // Lets simulated time pass (think time between turns).
  virtual void elapse(std::chrono::milliseconds ms) = 0;
};

// Calls a SessionService directly. With a ManualClock, elapse() advances the
// clock instead of sleeping, which makes runs deterministic.
class InProcessEndpoint final : public SessionEndpoint {
 public:
  InProcessEndpoint(session::SessionService& service, std::shared_ptr<ManualClock> clock = nullptr);

  std::string create_session(const nlohmann::json& request) override;
  nlohmann::json post_client_message(const std::string& id, const std::string& text) override;
  nlohmann::json get_suggestions(const std::string& id, const std::string& step) override;
  nlohmann::json present_goals(const std::string& id) override;
  nlohmann::json post_provider_message(const std::string& id, const nlohmann::json& message) override;
  nlohmann::json state(const std::string& id) override;
  std::vector<session::Event> events_since(const std::string& id, std::uint64_t since,
                                           std::chrono::milliseconds wait) override;
  void close_session(const std::string& id) override;
  void elapse(std::chrono::milliseconds ms) override;

 private:
  session::SessionService& service_;
  std::shared_ptr<ManualClock> clock_;
};

enum class ProviderMode {
  automatic,  // top-listed suggestion, first therapeutic template
  human,      // wait for someone else to answer through the endpoint
};

struct DriveOptions {
  dialog::Condition condition = dialog::Condition::intervention;
  std::uint64_t seed = 0;
  ProviderMode provider = ProviderMode::automatic;
  std::string client_id = "c_sim";
  std::string client_name = "Irina";
  nlohmann::json metadata = nlohmann::json::object();
  std::chrono::milliseconds think_time{8000};
  std::chrono::milliseconds think_jitter{4000};  // uniform extra in [0, jitter], from the seed
  std::chrono::milliseconds client_gap{3000};    // after each provider reply
  std::chrono::milliseconds provider_timeout{120000};
};

struct DriveResult {
  std::string session_id;
  session::SessionRecord record;
};

// Plays every client turn in order. Error(timeout) when the provider stays
// silent past the limit or the endpoint is unreachable; Error(protocol_error)
// when events arrive out of order.
DriveResult drive(const Scenario& scenario, SessionEndpoint& endpoint, const DriveOptions& options);

struct AccuracyReport {
  std::string scenario_id;
  dialog::Condition condition = dialog::Condition::control;
  int empathic_correct = 0;  // 0..2
  int goal_correct = 0;      // 0..2
  bool symptom_identified = false;
  std::vector<double> per_turn_rt;  // seconds
  std::vector<std::optional<std::string>> empathic_selected;
  std::vector<std::optional<int>> gold_rank;  // gold's position in the list shown, per open-ended turn

  bool operator==(const AccuracyReport&) const = default;
};

// Pure function of (record, scenario). Error(incomplete_record) when an
// open-ended turn went unanswered or no goals were selected.
AccuracyReport score(const session::SessionRecord& record, const Scenario& scenario);

nlohmann::json to_json(const AccuracyReport& report);

}  // namespace a2p2::patientsim
