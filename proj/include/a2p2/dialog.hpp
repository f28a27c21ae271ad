#pragma once

// Conversation state tracker and the finite-state step policy.
//
// ConversationState is a plain value; every operation takes a state and
// returns the next one. The policy (step table + action table) is loaded from
// JSON so other protocols can be dropped in.

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a2p2/ckg.hpp"
#include "a2p2/nlu.hpp"
#include "a2p2/timestamp.hpp"

namespace a2p2::dialog {

enum class Slot { name, time_of_day, emotion, symptom, goal, problem, solution };

inline constexpr std::array<Slot, 7> kSlots = {Slot::name,  Slot::time_of_day, Slot::emotion, Slot::symptom,
                                               Slot::goal, Slot::problem,     Slot::solution};

std::string_view to_string(Slot slot) noexcept;
// Case-insensitive; spaces and underscores are interchangeable ("Time of day").
std::optional<Slot> parse_slot(std::string_view text);

enum class Condition { control, intervention };

std::string_view to_string(Condition c) noexcept;
Condition parse_condition(std::string_view text);

struct PstStep {
  int ordinal = 0;
  std::string key;
  std::string label;
  bool empathic = false;
};

struct DialogAction {
  std::string key;
  std::string step;
  std::vector<Slot> required_slots;
};

class Policy {
 public:
  static Policy from_json(const nlohmann::json& doc);
  static Policy load_file(const std::filesystem::path& path);

  const std::vector<PstStep>& steps() const noexcept { return steps_; }
  const std::vector<DialogAction>& actions() const noexcept { return actions_; }
  int session() const noexcept { return session_; }

  const PstStep* find_step(std::string_view key) const;
  const PstStep& step(std::string_view key) const;  // Error(unknown_step)
  const DialogAction* find_action(std::string_view key) const;

  const PstStep& first_step() const { return steps_.front(); }
  const PstStep& last_step() const { return steps_.back(); }

 private:
  int session_ = 1;
  std::vector<PstStep> steps_;  // sorted by ordinal
  std::vector<DialogAction> actions_;
};

struct ConversationState {
  std::map<Slot, std::optional<std::string>> slots;
  std::set<std::string> completed;
  std::string selected_step;
  int session_number = 1;
  Condition condition = Condition::control;

  const std::optional<std::string>& slot(Slot s) const { return slots.at(s); }
  bool filled(Slot s) const { return slots.at(s).has_value(); }

  bool operator==(const ConversationState&) const = default;
};

// "Morning" before 12:00, "Afternoon" before 18:00, otherwise "Evening", using
// the hour at `utc_offset` from UTC.
std::string time_of_day(Timestamp clock, std::chrono::minutes utc_offset = std::chrono::minutes{0});

ConversationState init_session(const Policy& policy, const ckg::ClientProfile& profile, int session_number,
                               Condition condition, Timestamp clock,
                               std::chrono::minutes utc_offset = std::chrono::minutes{0});

// Overwrites the symptom/emotion slots with whatever the NLU found.
ConversationState absorb(ConversationState state, const nlu::NluResult& nlu);

ConversationState set_slot(ConversationState state, Slot slot, std::optional<std::string> value);

// Marks `step` complete and moves the selection to the first uncompleted step
// in ordinal order (or leaves it on the last step once everything is done).
ConversationState complete_step(const Policy& policy, ConversationState state, std::string_view step);

ConversationState select_step(const Policy& policy, ConversationState state, std::string_view step);

bool is_finishable(const Policy& policy, const ConversationState& state);

struct ActionAvailability {
  DialogAction action;
  std::vector<Slot> missing;

  bool blocked() const noexcept { return !missing.empty(); }
};

std::vector<ActionAvailability> actions_for_step(const Policy& policy, const ConversationState& state,
                                                 std::string_view step);

nlohmann::json to_json(const ConversationState& state);
ConversationState state_from_json(const nlohmann::json& j);

}  // namespace a2p2::dialog
