#pragma once

// Clinical knowledge graph: symptoms -> goals -> solutions -> resources.
//
// The graph is loaded once from a JSON document and is immutable afterwards,
// so concurrent readers need no locking. Client links are values
// (ClientProfile) owned by whichever session is using them.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "a2p2/timestamp.hpp"

namespace a2p2::ckg {

enum class NodeKind { symptom, goal, solution, resource };

std::string_view to_string(NodeKind kind) noexcept;

struct Symptom {
  std::string id;
  std::string name;
  std::vector<std::string> lexicon;
};

struct Goal {
  std::string id;
  std::string text;
  std::vector<std::string> addresses;  // symptom ids
};

struct Solution {
  std::string id;
  std::string text;
  std::vector<std::string> helps_with;  // goal ids
  std::string resource;
};

struct Resource {
  std::string id;
  std::string title;
  std::string uri;
};

struct GraphStats {
  std::size_t symptoms = 0;
  std::size_t goals = 0;
  std::size_t solutions = 0;
  std::size_t resources = 0;
  std::size_t symptom_goal_edges = 0;
  std::size_t goal_solution_edges = 0;
  std::size_t min_resources_per_solution = 0;
  std::size_t max_resources_per_solution = 0;

  bool operator==(const GraphStats&) const = default;
};

nlohmann::json to_json(const GraphStats& stats);

class ClinicalGraph {
 public:
  // Throws Error(parse_error) for malformed JSON and Error(validation_error)
  // naming the first violated invariant.
  static ClinicalGraph load(std::string_view document);
  static ClinicalGraph load_file(const std::filesystem::path& path);

  const std::vector<Symptom>& symptoms() const noexcept { return symptoms_; }
  const std::vector<Goal>& goals() const noexcept { return goals_; }
  const std::vector<Solution>& solutions() const noexcept { return solutions_; }
  const std::vector<Resource>& resources() const noexcept { return resources_; }

  std::optional<NodeKind> kind_of(std::string_view id) const;

  const Symptom* find_symptom(std::string_view id) const;
  const Goal* find_goal(std::string_view id) const;
  const Solution* find_solution(std::string_view id) const;
  const Resource* find_resource(std::string_view id) const;

  // Throwing lookups (Error(unknown_node)).
  const Symptom& symptom(std::string_view id) const;
  const Goal& goal(std::string_view id) const;
  const Solution& solution(std::string_view id) const;

  // Goals whose only addressed symptom is `symptom`, ordered by id.
  std::vector<const Goal*> exclusive_goals(std::string_view symptom) const;

  GraphStats stats() const;

 private:
  ClinicalGraph() = default;
  void validate_and_index();

  std::vector<Symptom> symptoms_;
  std::vector<Goal> goals_;
  std::vector<Solution> solutions_;
  std::vector<Resource> resources_;
  // id -> (kind, position in the vector for that kind)
  std::unordered_map<std::string, std::pair<NodeKind, std::size_t>> index_;
};

// Every goal addressing `symptom`, lexicographic by id.
std::vector<Goal> recommend_goals(const ClinicalGraph& graph, std::string_view symptom);

struct SolutionRecommendation {
  Solution solution;
  Resource resource;
};

// Every solution that helps with `goal`, lexicographic by id, each carrying
// its single resource.
std::vector<SolutionRecommendation> recommend_solutions(const ClinicalGraph& graph, std::string_view goal);

enum class LinkKind { symptom, goal, solution };

std::string_view to_string(LinkKind kind) noexcept;
LinkKind parse_link_kind(std::string_view text);

struct Link {
  std::string node;
  Timestamp at;

  bool operator==(const Link&) const = default;
};

struct ClientProfile {
  std::string client_id;
  std::string name;
  std::vector<Link> linked_symptoms;
  std::vector<Link> linked_goals;
  std::vector<Link> linked_solutions;

  const std::vector<Link>& links(LinkKind kind) const;
  std::vector<Link>& links(LinkKind kind);

  bool operator==(const ClientProfile&) const = default;
};

// Appends `node` to the profile list for `kind`. Re-linking a node moves it to
// the end with the new timestamp, so each list stays ordered by time; an `at`
// earlier than the last entry is clamped up to it.
ClientProfile link_client(const ClinicalGraph& graph, ClientProfile profile, std::string_view node,
                          LinkKind kind, Timestamp at);

void to_json(nlohmann::json& j, const ClientProfile& profile);
void from_json(const nlohmann::json& j, ClientProfile& profile);

}  // namespace a2p2::ckg
