#pragma once

// Study summary over a directory of session transcripts: response times,
// empathic and goal accuracy per condition, for each expertise group and for
// everyone combined.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "a2p2/evalstats.hpp"
#include "a2p2/patientsim.hpp"

namespace a2p2::report {

enum class Group { expert, non_expert };

std::string_view to_string(Group g) noexcept;
Group parse_group(std::string_view text);

// {"participant id": "expert" | "non_expert", ...}
std::map<std::string, Group> load_groups(const std::filesystem::path& path);

struct Participant {
  std::string id;
  std::optional<Group> group;
  // index 0 = control, 1 = intervention
  std::array<double, 2> avg_rt{};
  std::array<double, 2> empathy_rt{};
  std::array<int, 2> empathic_correct{};
  std::array<int, 2> goal_correct{};
};

struct GroupSummary {
  std::string label;  // "non_expert", "expert" or "all"
  std::size_t n = 0;
  double control_rt = 0.0;
  double intervention_rt = 0.0;
  double reduction_pct = 0.0;
  double control_empathy_rt = 0.0;
  double intervention_empathy_rt = 0.0;
  double empathy_reduction_pct = 0.0;
  double p_value = 1.0;
  std::string p_method;  // "exact" or "monte_carlo"
  std::optional<double> cohens_dz;
  std::optional<double> empathy_p_value;
};

struct AccuracyTable {
  evalstats::ContingencyTable2x3 counts{};
  std::optional<double> fisher_p;  // unset when the test is undefined for these counts
  std::string fisher_note;
  double control_accuracy = 0.0;       // mean correct / 2
  double intervention_accuracy = 0.0;
  std::optional<double> relative_increase_pct;  // (i - c) / c
  double absolute_increase_pts = 0.0;           // (i - c) * 100
};

struct Summary {
  std::vector<Participant> participants;
  std::vector<GroupSummary> groups;  // present groups, then "all"
  AccuracyTable empathic;
  AccuracyTable goals;
  std::optional<double> group_reduction_p;  // expert vs non-expert relative reduction, label shuffle
  std::optional<double> group_reduction_d;  // pooled d of the same
  std::vector<std::string> notes;
  std::size_t skipped_transcripts = 0;
};

// Reads every *.jsonl under `dir`. A transcript counts when its init metadata
// names a participant and a known scenario and it scores cleanly; a
// participant counts with one scored session per condition.
// Error(no_data) when no participant qualifies.
Summary summarize(const std::filesystem::path& dir, const std::map<std::string, Group>& groups,
                  const std::map<std::string, patientsim::Scenario>& scenarios);

// Monospace tables mirroring the response-time and accuracy tables.
std::string format_text(const Summary& summary);
nlohmann::json to_json(const Summary& summary);

}  // namespace a2p2::report
