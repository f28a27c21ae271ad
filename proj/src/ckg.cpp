#include "a2p2/ckg.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "a2p2/error.hpp"
#include "a2p2/text.hpp"

namespace a2p2::ckg {

using nlohmann::json;

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::symptom: return "symptom";
    case NodeKind::goal: return "goal";
    case NodeKind::solution: return "solution";
    case NodeKind::resource: return "resource";
  }
  return "?";
}

std::string_view to_string(LinkKind kind) noexcept {
  switch (kind) {
    case LinkKind::symptom: return "symptom";
    case LinkKind::goal: return "goal";
    case LinkKind::solution: return "solution";
  }
  return "?";
}

LinkKind parse_link_kind(std::string_view text) {
  if (text == "symptom") return LinkKind::symptom;
  if (text == "goal") return LinkKind::goal;
  if (text == "solution") return LinkKind::solution;
  throw Error(Errc::parse_error, "unknown link kind '" + std::string(text) + "'");
}

json to_json(const GraphStats& s) {
  return json{{"symptoms", s.symptoms},
              {"goals", s.goals},
              {"solutions", s.solutions},
              {"resources", s.resources},
              {"symptom_goal_edges", s.symptom_goal_edges},
              {"goal_solution_edges", s.goal_solution_edges},
              {"min_resources_per_solution", s.min_resources_per_solution},
              {"max_resources_per_solution", s.max_resources_per_solution}};
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::validation_error, what); }

const json& field(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(Errc::parse_error, std::string(where) + " is missing '" + key + "'");
  return *it;
}

std::string string_field(const json& obj, const char* key, const char* where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw Error(Errc::parse_error, std::string(where) + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key, const char* where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) throw Error(Errc::parse_error, std::string(where) + "." + key + " must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw Error(Errc::parse_error, std::string(where) + "." + key + " entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

const json& node_array(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    static const json empty = json::array();
    return empty;
  }
  if (!it->is_array()) throw Error(Errc::parse_error, std::string("'") + key + "' must be an array");
  return *it;
}

void require_object(const json& v, const char* where) {
  if (!v.is_object()) throw Error(Errc::parse_error, std::string(where) + " entries must be objects");
}

}  // namespace

ClinicalGraph ClinicalGraph::load(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, e.what());
  }
  if (!doc.is_object()) throw Error(Errc::parse_error, "graph document must be a JSON object");

  ClinicalGraph g;
  for (const auto& s : node_array(doc, "symptoms")) {
    require_object(s, "symptoms");
    g.symptoms_.push_back(
        {string_field(s, "id", "symptom"), string_field(s, "name", "symptom"), string_list(s, "lexicon", "symptom")});
  }
  for (const auto& e : node_array(doc, "goals")) {
    require_object(e, "goals");
    g.goals_.push_back({string_field(e, "id", "goal"), string_field(e, "text", "goal"), string_list(e, "addresses", "goal")});
  }
  for (const auto& e : node_array(doc, "solutions")) {
    require_object(e, "solutions");
    Solution sol{string_field(e, "id", "solution"), string_field(e, "text", "solution"),
                 string_list(e, "helps_with", "solution"), {}};
    // A solution carries exactly one resource; accept a one-element list too.
    auto it = e.find("resource");
    if (it == e.end() || it->is_null()) invalid("solution '" + sol.id + "' has no resource");
    if (it->is_array()) {
      if (it->size() != 1) {
        invalid("solution '" + sol.id + "' must have exactly one resource, found " + std::to_string(it->size()));
      }
      it = it->begin();
    }
    if (!it->is_string()) throw Error(Errc::parse_error, "solution.resource must be a string id");
    sol.resource = it->get<std::string>();
    g.solutions_.push_back(std::move(sol));
  }
  for (const auto& e : node_array(doc, "resources")) {
    require_object(e, "resources");
    Resource r{string_field(e, "id", "resource"), string_field(e, "title", "resource"), {}};
    if (auto it = e.find("uri"); it != e.end() && it->is_string()) r.uri = it->get<std::string>();
    g.resources_.push_back(std::move(r));
  }
  g.validate_and_index();
  return g;
}

ClinicalGraph ClinicalGraph::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::parse_error, "cannot open graph file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load(ss.str());
}

void ClinicalGraph::validate_and_index() {
  if (symptoms_.empty() || goals_.empty()) invalid("graph must be nonempty (needs symptoms and goals)");

  auto add = [this](const std::string& id, NodeKind kind, std::size_t pos) {
    if (id.empty()) invalid(std::string(to_string(kind)) + " with empty id");
    if (!index_.emplace(id, std::make_pair(kind, pos)).second) invalid("duplicate id '" + id + "'");
  };
  for (std::size_t i = 0; i < symptoms_.size(); ++i) add(symptoms_[i].id, NodeKind::symptom, i);
  for (std::size_t i = 0; i < goals_.size(); ++i) add(goals_[i].id, NodeKind::goal, i);
  for (std::size_t i = 0; i < solutions_.size(); ++i) add(solutions_[i].id, NodeKind::solution, i);
  for (std::size_t i = 0; i < resources_.size(); ++i) add(resources_[i].id, NodeKind::resource, i);

  auto expect_kind = [this](const std::string& ref, NodeKind kind, const std::string& owner) {
    auto it = index_.find(ref);
    if (it == index_.end() || it->second.first != kind) {
      invalid("dangling edge: '" + owner + "' references unknown " + std::string(to_string(kind)) + " '" + ref + "'");
    }
  };
  auto no_duplicates = [](const std::vector<std::string>& refs, const std::string& owner) {
    std::set<std::string> seen;
    for (const auto& r : refs) {
      if (!seen.insert(r).second) invalid("duplicate edge '" + owner + "' -> '" + r + "'");
    }
  };

  for (const auto& s : symptoms_) {
    if (s.name.empty()) invalid("symptom '" + s.id + "' has an empty name");
    if (s.lexicon.empty()) invalid("symptom '" + s.id + "' has an empty lexicon");
    for (const auto& phrase : s.lexicon) {
      if (text::words(phrase).empty()) invalid("symptom '" + s.id + "' has a blank lexicon phrase");
    }
  }
  for (const auto& g : goals_) {
    if (g.addresses.empty()) invalid("goal '" + g.id + "' addresses no symptom");
    no_duplicates(g.addresses, g.id);
    for (const auto& s : g.addresses) expect_kind(s, NodeKind::symptom, g.id);
  }
  for (const auto& sol : solutions_) {
    if (sol.helps_with.empty()) invalid("solution '" + sol.id + "' helps with no goal");
    no_duplicates(sol.helps_with, sol.id);
    for (const auto& g : sol.helps_with) expect_kind(g, NodeKind::goal, sol.id);
    expect_kind(sol.resource, NodeKind::resource, sol.id);
  }
  for (const auto& r : resources_) {
    if (r.title.empty()) invalid("resource '" + r.id + "' has an empty title");
  }
}

std::optional<NodeKind> ClinicalGraph::kind_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second.first;
}

namespace {

template <typename T>
const T* lookup(const std::unordered_map<std::string, std::pair<NodeKind, std::size_t>>& index,
                const std::vector<T>& nodes, NodeKind kind, std::string_view id) {
  auto it = index.find(std::string(id));
  if (it == index.end() || it->second.first != kind) return nullptr;
  return &nodes[it->second.second];
}

}  // namespace

const Symptom* ClinicalGraph::find_symptom(std::string_view id) const {
  return lookup(index_, symptoms_, NodeKind::symptom, id);
}
const Goal* ClinicalGraph::find_goal(std::string_view id) const { return lookup(index_, goals_, NodeKind::goal, id); }
const Solution* ClinicalGraph::find_solution(std::string_view id) const {
  return lookup(index_, solutions_, NodeKind::solution, id);
}
const Resource* ClinicalGraph::find_resource(std::string_view id) const {
  return lookup(index_, resources_, NodeKind::resource, id);
}

const Symptom& ClinicalGraph::symptom(std::string_view id) const {
  if (const auto* s = find_symptom(id)) return *s;
  throw Error(Errc::unknown_node, "no symptom '" + std::string(id) + "'", std::string(id));
}
const Goal& ClinicalGraph::goal(std::string_view id) const {
  if (const auto* g = find_goal(id)) return *g;
  throw Error(Errc::unknown_node, "no goal '" + std::string(id) + "'", std::string(id));
}
const Solution& ClinicalGraph::solution(std::string_view id) const {
  if (const auto* s = find_solution(id)) return *s;
  throw Error(Errc::unknown_node, "no solution '" + std::string(id) + "'", std::string(id));
}

std::vector<const Goal*> ClinicalGraph::exclusive_goals(std::string_view symptom) const {
  std::vector<const Goal*> out;
  for (const auto& g : goals_) {
    if (g.addresses.size() == 1 && g.addresses.front() == symptom) out.push_back(&g);
  }
  std::sort(out.begin(), out.end(), [](const Goal* a, const Goal* b) { return a->id < b->id; });
  return out;
}

GraphStats ClinicalGraph::stats() const {
  GraphStats s;
  s.symptoms = symptoms_.size();
  s.goals = goals_.size();
  s.solutions = solutions_.size();
  s.resources = resources_.size();
  for (const auto& g : goals_) s.symptom_goal_edges += g.addresses.size();
  for (const auto& sol : solutions_) s.goal_solution_edges += sol.helps_with.size();
  // The loader guarantees one resource per solution; report it so callers can
  // assert it without knowing that.
  s.min_resources_per_solution = solutions_.empty() ? 0 : 1;
  s.max_resources_per_solution = solutions_.empty() ? 0 : 1;
  return s;
}

std::vector<Goal> recommend_goals(const ClinicalGraph& graph, std::string_view symptom) {
  graph.symptom(symptom);
  std::vector<Goal> out;
  for (const auto& g : graph.goals()) {
    if (std::find(g.addresses.begin(), g.addresses.end(), symptom) != g.addresses.end()) out.push_back(g);
  }
  std::sort(out.begin(), out.end(), [](const Goal& a, const Goal& b) { return a.id < b.id; });
  return out;
}

std::vector<SolutionRecommendation> recommend_solutions(const ClinicalGraph& graph, std::string_view goal) {
  graph.goal(goal);
  std::vector<SolutionRecommendation> out;
  for (const auto& sol : graph.solutions()) {
    if (std::find(sol.helps_with.begin(), sol.helps_with.end(), goal) != sol.helps_with.end()) {
      out.push_back({sol, *graph.find_resource(sol.resource)});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const SolutionRecommendation& a, const SolutionRecommendation& b) { return a.solution.id < b.solution.id; });
  return out;
}

const std::vector<Link>& ClientProfile::links(LinkKind kind) const {
  switch (kind) {
    case LinkKind::symptom: return linked_symptoms;
    case LinkKind::goal: return linked_goals;
    case LinkKind::solution: break;
  }
  return linked_solutions;
}

std::vector<Link>& ClientProfile::links(LinkKind kind) {
  return const_cast<std::vector<Link>&>(std::as_const(*this).links(kind));
}

ClientProfile link_client(const ClinicalGraph& graph, ClientProfile profile, std::string_view node, LinkKind kind,
                          Timestamp at) {
  const auto actual = graph.kind_of(node);
  if (!actual) throw Error(Errc::unknown_node, "no node '" + std::string(node) + "'", std::string(node));
  const NodeKind wanted = kind == LinkKind::symptom ? NodeKind::symptom
                          : kind == LinkKind::goal  ? NodeKind::goal
                                                    : NodeKind::solution;
  if (*actual != wanted) {
    throw Error(Errc::kind_mismatch,
                "'" + std::string(node) + "' is a " + std::string(to_string(*actual)) + ", not a " +
                    std::string(to_string(kind)),
                std::string(node));
  }
  auto& list = profile.links(kind);
  std::erase_if(list, [&](const Link& l) { return l.node == node; });
  if (!list.empty() && at < list.back().at) at = list.back().at;
  list.push_back({std::string(node), at});
  return profile;
}

namespace {

json links_to_json(const std::vector<Link>& links) {
  json arr = json::array();
  for (const auto& l : links) arr.push_back({{"id", l.node}, {"at", format_iso8601(l.at)}});
  return arr;
}

std::vector<Link> links_from_json(const json& j, const char* key) {
  std::vector<Link> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw Error(Errc::parse_error, std::string("profile.") + key + " must be an array");
  for (const auto& e : *it) {
    if (e.is_string()) {
      out.push_back({e.get<std::string>(), Timestamp{}});
      continue;
    }
    out.push_back({e.at("id").get<std::string>(), parse_iso8601(e.at("at").get<std::string>())});
  }
  return out;
}

}  // namespace

void to_json(json& j, const ClientProfile& p) {
  j = json{{"client_id", p.client_id},
           {"name", p.name},
           {"linked_symptoms", links_to_json(p.linked_symptoms)},
           {"linked_goals", links_to_json(p.linked_goals)},
           {"linked_solutions", links_to_json(p.linked_solutions)}};
}

void from_json(const json& j, ClientProfile& p) {
  if (!j.is_object()) throw Error(Errc::parse_error, "profile must be an object");
  try {
    p.client_id = j.value("client_id", std::string{});
    p.name = j.value("name", std::string{});
    p.linked_symptoms = links_from_json(j, "linked_symptoms");
    p.linked_goals = links_from_json(j, "linked_goals");
    p.linked_solutions = links_from_json(j, "linked_solutions");
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("bad profile: ") + e.what());
  }
}

}  // namespace a2p2::ckg
