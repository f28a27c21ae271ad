#pragma once

// Template bank and slot filling. Placeholders are written "[slot name]" and
// matched case-insensitively, with spaces standing in for underscores:
// "[time of day]" reads the time_of_day slot.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "a2p2/dialog.hpp"

namespace a2p2::nlg {

struct ResponseTemplate {
  std::string id;
  std::string action;
  std::string text;

  // Slots named by the placeholders, in order of appearance (may repeat).
  std::vector<dialog::Slot> placeholders() const;
};

class TemplateBank {
 public:
  static TemplateBank from_json(const nlohmann::json& doc);
  static TemplateBank load_file(const std::filesystem::path& path);

  // Bank-file order. Error(unknown_action) when nothing maps to `action`.
  const std::vector<ResponseTemplate>& templates_for_action(std::string_view action) const;

  const std::vector<ResponseTemplate>& all() const noexcept { return templates_; }
  const ResponseTemplate* find(std::string_view id) const;

  // Every action in the policy needs at least one template.
  void check_covers(const dialog::Policy& policy) const;

 private:
  std::vector<ResponseTemplate> templates_;
  std::map<std::string, std::vector<ResponseTemplate>, std::less<>> by_action_;
};

// Turns a raw slot value into display text (e.g. a goal id into the goal's
// text). The default renderer inserts the value verbatim.
using SlotRenderer = std::function<std::string(dialog::Slot, const std::string&)>;

std::vector<dialog::Slot> missing_slots(const ResponseTemplate& tmpl, const dialog::ConversationState& state);

// Error(missing_slot, detail = slot key) if any placeholder's slot is empty.
std::string fill(const ResponseTemplate& tmpl, const dialog::ConversationState& state,
                 const SlotRenderer& render = {});

}  // namespace a2p2::nlg
