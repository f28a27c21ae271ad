#include "a2p2/dialog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "a2p2/error.hpp"

namespace a2p2::dialog {

using nlohmann::json;

std::string_view to_string(Slot slot) noexcept {
  switch (slot) {
    case Slot::name: return "name";
    case Slot::time_of_day: return "time_of_day";
    case Slot::emotion: return "emotion";
    case Slot::symptom: return "symptom";
    case Slot::goal: return "goal";
    case Slot::problem: return "problem";
    case Slot::solution: return "solution";
  }
  return "?";
}

std::optional<Slot> parse_slot(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == ' ' || c == '_') {
      if (!key.empty() && key.back() != '_') key.push_back('_');
    } else {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  while (!key.empty() && key.back() == '_') key.pop_back();
  for (Slot s : kSlots) {
    if (to_string(s) == key) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Condition c) noexcept { return c == Condition::control ? "control" : "intervention"; }

Condition parse_condition(std::string_view text) {
  if (text == "control") return Condition::control;
  if (text == "intervention") return Condition::intervention;
  throw Error(Errc::parse_error, "condition must be control or intervention, got '" + std::string(text) + "'");
}

Policy Policy::from_json(const json& doc) {
  Policy p;
  try {
    p.session_ = doc.value("session", 1);
    for (const auto& s : doc.at("steps")) {
      p.steps_.push_back(
          {s.at("ordinal").get<int>(), s.at("key").get<std::string>(), s.at("label").get<std::string>(),
           s.value("empathic", false)});
    }
    for (const auto& a : doc.at("actions")) {
      DialogAction action{a.at("key").get<std::string>(), a.at("step").get<std::string>(), {}};
      for (const auto& r : a.value("requires", json::array())) {
        const auto name = r.get<std::string>();
        const auto slot = parse_slot(name);
        if (!slot) throw Error(Errc::validation_error, "action '" + action.key + "' requires unknown slot '" + name + "'");
        action.required_slots.push_back(*slot);
      }
      p.actions_.push_back(std::move(action));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad policy: ") + e.what());
  }

  if (p.steps_.empty()) throw Error(Errc::validation_error, "policy has no steps");
  std::sort(p.steps_.begin(), p.steps_.end(), [](const PstStep& a, const PstStep& b) { return a.ordinal < b.ordinal; });
  std::set<std::string> keys;
  int empathic = 0;
  for (std::size_t i = 0; i < p.steps_.size(); ++i) {
    if (p.steps_[i].ordinal != static_cast<int>(i)) {
      throw Error(Errc::validation_error, "step ordinals must run 0..n-1 without gaps");
    }
    if (!keys.insert(p.steps_[i].key).second) throw Error(Errc::validation_error, "duplicate step '" + p.steps_[i].key + "'");
    empathic += p.steps_[i].empathic ? 1 : 0;
  }
  if (empathic != 2) throw Error(Errc::validation_error, "policy must have exactly two empathic steps");
  std::set<std::string> action_keys;
  for (const auto& a : p.actions_) {
    if (!keys.contains(a.step)) throw Error(Errc::validation_error, "action '" + a.key + "' names unknown step '" + a.step + "'");
    if (!action_keys.insert(a.key).second) throw Error(Errc::validation_error, "duplicate action '" + a.key + "'");
  }
  return p;
}

Policy Policy::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open policy " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

const PstStep* Policy::find_step(std::string_view key) const {
  auto it = std::find_if(steps_.begin(), steps_.end(), [&](const PstStep& s) { return s.key == key; });
  return it == steps_.end() ? nullptr : &*it;
}

const PstStep& Policy::step(std::string_view key) const {
  if (const auto* s = find_step(key)) return *s;
  throw Error(Errc::unknown_step, "no step '" + std::string(key) + "'", std::string(key));
}

const DialogAction* Policy::find_action(std::string_view key) const {
  auto it = std::find_if(actions_.begin(), actions_.end(), [&](const DialogAction& a) { return a.key == key; });
  return it == actions_.end() ? nullptr : &*it;
}

std::string time_of_day(Timestamp clock, std::chrono::minutes utc_offset) {
  using namespace std::chrono;
  const auto local = clock + utc_offset;
  const auto hour = duration_cast<hours>(local - floor<days>(local)).count();
  if (hour < 12) return "Morning";
  if (hour < 18) return "Afternoon";
  return "Evening";
}

ConversationState init_session(const Policy& policy, const ckg::ClientProfile& profile, int session_number,
                               Condition condition, Timestamp clock, std::chrono::minutes utc_offset) {
  if (session_number < 1) throw Error(Errc::validation_error, "session_number must be >= 1");
  ConversationState s;
  for (Slot slot : kSlots) s.slots[slot] = std::nullopt;
  if (!profile.name.empty()) s.slots[Slot::name] = profile.name;
  s.slots[Slot::time_of_day] = time_of_day(clock, utc_offset);

  // Links are kept in time order, so the last entry is the most recent.
  if (!profile.linked_symptoms.empty()) s.slots[Slot::symptom] = profile.linked_symptoms.back().node;
  if (!profile.linked_goals.empty()) s.slots[Slot::goal] = profile.linked_goals.back().node;
  if (!profile.linked_solutions.empty()) s.slots[Slot::solution] = profile.linked_solutions.back().node;

  s.selected_step = policy.first_step().key;
  s.session_number = session_number;
  s.condition = condition;
  return s;
}

ConversationState absorb(ConversationState state, const nlu::NluResult& nlu) {
  if (nlu.symptom) state.slots[Slot::symptom] = *nlu.symptom;
  if (nlu.emotion) state.slots[Slot::emotion] = *nlu.emotion;
  return state;
}

ConversationState set_slot(ConversationState state, Slot slot, std::optional<std::string> value) {
  state.slots[slot] = std::move(value);
  return state;
}

ConversationState complete_step(const Policy& policy, ConversationState state, std::string_view step) {
  policy.step(step);
  state.completed.insert(std::string(step));
  const auto& steps = policy.steps();
  auto next = std::find_if(steps.begin(), steps.end(), [&](const PstStep& s) { return !state.completed.contains(s.key); });
  state.selected_step = next == steps.end() ? policy.last_step().key : next->key;
  return state;
}

ConversationState select_step(const Policy& policy, ConversationState state, std::string_view step) {
  state.selected_step = policy.step(step).key;
  return state;
}

bool is_finishable(const Policy& policy, const ConversationState& state) {
  return std::all_of(policy.steps().begin(), policy.steps().end(),
                     [&](const PstStep& s) { return state.completed.contains(s.key); });
}

std::vector<ActionAvailability> actions_for_step(const Policy& policy, const ConversationState& state,
                                                 std::string_view step) {
  policy.step(step);
  std::vector<ActionAvailability> out;
  for (const auto& a : policy.actions()) {
    if (a.step != step) continue;
    ActionAvailability avail{a, {}};
    for (Slot s : a.required_slots) {
      if (!state.filled(s)) avail.missing.push_back(s);
    }
    out.push_back(std::move(avail));
  }
  return out;
}

json to_json(const ConversationState& s) {
  json slots = json::object();
  for (const auto& [slot, value] : s.slots) slots[std::string(to_string(slot))] = value ? json(*value) : json(nullptr);
  return json{{"slots", slots},
              {"completed", s.completed},
              {"selected_step", s.selected_step},
              {"session_number", s.session_number},
              {"condition", to_string(s.condition)}};
}

ConversationState state_from_json(const json& j) {
  ConversationState s;
  for (Slot slot : kSlots) s.slots[slot] = std::nullopt;
  for (const auto& [key, value] : j.at("slots").items()) {
    const auto slot = parse_slot(key);
    if (!slot) throw Error(Errc::parse_error, "unknown slot '" + key + "'");
    if (value.is_string()) s.slots[*slot] = value.get<std::string>();
  }
  for (const auto& c : j.at("completed")) s.completed.insert(c.get<std::string>());
  s.selected_step = j.at("selected_step").get<std::string>();
  s.session_number = j.at("session_number").get<int>();
  s.condition = parse_condition(j.at("condition").get<std::string>());
  return s;
}

}  // namespace a2p2::dialog
