#include "a2p2/nlg.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>

#include "a2p2/error.hpp"

namespace a2p2::nlg {

using dialog::Slot;
using nlohmann::json;

namespace {

struct Placeholder {
  std::size_t begin;  // index of '['
  std::size_t end;    // one past ']'
  Slot slot;
};

std::vector<Placeholder> scan(std::string_view text, std::string_view template_id) {
  std::vector<Placeholder> out;
  std::size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    const auto close = text.find(']', pos);
    if (close == std::string_view::npos) {
      throw Error(Errc::validation_error, "unterminated placeholder in template '" + std::string(template_id) + "'");
    }
    const auto name = text.substr(pos + 1, close - pos - 1);
    const auto slot = dialog::parse_slot(name);
    if (!slot) {
      throw Error(Errc::validation_error,
                  "template '" + std::string(template_id) + "' names unknown slot '" + std::string(name) + "'");
    }
    out.push_back({pos, close + 1, *slot});
    pos = close + 1;
  }
  return out;
}

}  // namespace

std::vector<Slot> ResponseTemplate::placeholders() const {
  std::vector<Slot> out;
  for (const auto& p : scan(text, id)) out.push_back(p.slot);
  return out;
}

TemplateBank TemplateBank::from_json(const json& doc) {
  if (!doc.is_array()) throw Error(Errc::parse_error, "template bank must be a JSON array");
  TemplateBank bank;
  std::set<std::string> ids;
  for (const auto& e : doc) {
    ResponseTemplate t;
    try {
      t = {e.at("id").get<std::string>(), e.at("action").get<std::string>(), e.at("text").get<std::string>()};
    } catch (const json::exception& ex) {
      throw Error(Errc::parse_error, std::string("bad template entry: ") + ex.what());
    }
    if (!ids.insert(t.id).second) throw Error(Errc::validation_error, "duplicate template id '" + t.id + "'");
    scan(t.text, t.id);
    bank.by_action_[t.action].push_back(t);
    bank.templates_.push_back(std::move(t));
  }
  return bank;
}

TemplateBank TemplateBank::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open template bank " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

const std::vector<ResponseTemplate>& TemplateBank::templates_for_action(std::string_view action) const {
  auto it = by_action_.find(action);
  if (it == by_action_.end()) {
    throw Error(Errc::unknown_action, "no templates for action '" + std::string(action) + "'", std::string(action));
  }
  return it->second;
}

const ResponseTemplate* TemplateBank::find(std::string_view id) const {
  for (const auto& t : templates_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

void TemplateBank::check_covers(const dialog::Policy& policy) const {
  for (const auto& a : policy.actions()) {
    if (!by_action_.contains(a.key)) {
      throw Error(Errc::validation_error, "policy action '" + a.key + "' has no template", a.key);
    }
  }
}

std::vector<Slot> missing_slots(const ResponseTemplate& tmpl, const dialog::ConversationState& state) {
  std::vector<Slot> out;
  for (const auto& p : scan(tmpl.text, tmpl.id)) {
    if (!state.filled(p.slot) && std::find(out.begin(), out.end(), p.slot) == out.end()) out.push_back(p.slot);
  }
  return out;
}

std::string fill(const ResponseTemplate& tmpl, const dialog::ConversationState& state, const SlotRenderer& render) {
  const auto holes = scan(tmpl.text, tmpl.id);
  for (const auto& h : holes) {
    if (!state.filled(h.slot)) {
      const std::string key(dialog::to_string(h.slot));
      throw Error(Errc::missing_slot, "template '" + tmpl.id + "' needs slot '" + key + "'", key);
    }
  }
  std::string out;
  std::size_t pos = 0;
  for (const auto& h : holes) {
    out.append(tmpl.text, pos, h.begin - pos);
    const auto& value = *state.slot(h.slot);
    out.append(render ? render(h.slot, value) : value);
    pos = h.end;
  }
  out.append(tmpl.text, pos, std::string::npos);
  return out;
}

}  // namespace a2p2::nlg
