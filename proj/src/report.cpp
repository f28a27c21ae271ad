#include "a2p2/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

#include "a2p2/error.hpp"
#include "a2p2/event_log.hpp"

namespace a2p2::report {

using nlohmann::json;

namespace {

constexpr std::size_t kExactLimit = 20;
constexpr evalstats::MonteCarlo kSampled{100000, 0};

evalstats::PermutationMode mode_for(std::size_t n) {
  if (n <= kExactLimit) return evalstats::Exact{};
  return kSampled;
}

}  // namespace

std::string_view to_string(Group g) noexcept { return g == Group::expert ? "expert" : "non_expert"; }

Group parse_group(std::string_view text) {
  if (text == "expert") return Group::expert;
  if (text == "non_expert" || text == "non-expert") return Group::non_expert;
  throw Error(Errc::validation_error, "unknown group '" + std::string(text) + "'", std::string(text));
}

std::map<std::string, Group> load_groups(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::parse_error, path.string() + ": expected an object of participant -> group");
  std::map<std::string, Group> out;
  for (const auto& [participant, group] : doc.items()) out.emplace(participant, parse_group(group.get<std::string>()));
  return out;
}

namespace {

struct Scored {
  std::optional<patientsim::AccuracyReport> report;
  double avg_rt = 0.0;
  double empathy_rt = 0.0;
};

GroupSummary summarize_group(const std::string& label, const std::vector<const Participant*>& members) {
  GroupSummary g;
  g.label = label;
  g.n = members.size();
  std::vector<double> c, i, ce, ie;
  for (const auto* p : members) {
    c.push_back(p->avg_rt[0]);
    i.push_back(p->avg_rt[1]);
    ce.push_back(p->empathy_rt[0]);
    ie.push_back(p->empathy_rt[1]);
  }
  g.control_rt = evalstats::mean(c);
  g.intervention_rt = evalstats::mean(i);
  g.reduction_pct = evalstats::percent_reduction(g.control_rt, g.intervention_rt);
  g.control_empathy_rt = evalstats::mean(ce);
  g.intervention_empathy_rt = evalstats::mean(ie);
  if (g.control_empathy_rt > 0) {
    g.empathy_reduction_pct = evalstats::percent_reduction(g.control_empathy_rt, g.intervention_empathy_rt);
  }
  const evalstats::PairedSample rt(i, c);
  g.p_value = evalstats::paired_permutation_test(rt, mode_for(g.n));
  g.p_method = g.n <= kExactLimit ? "exact" : "monte_carlo";
  g.empathy_p_value = evalstats::paired_permutation_test(evalstats::PairedSample(ie, ce), mode_for(g.n));
  try {
    g.cohens_dz = evalstats::cohens_d(rt, evalstats::DVariant::dz).value;
  } catch (const Error&) {
  }
  return g;
}

AccuracyTable accuracy_table(const std::vector<Participant>& people, bool empathic) {
  AccuracyTable t;
  double sum_c = 0.0;
  double sum_i = 0.0;
  for (const auto& p : people) {
    const auto& v = empathic ? p.empathic_correct : p.goal_correct;
    ++t.counts[0][static_cast<std::size_t>(v[0])];
    ++t.counts[1][static_cast<std::size_t>(v[1])];
    sum_c += v[0];
    sum_i += v[1];
  }
  const double n = static_cast<double>(people.size());
  t.control_accuracy = sum_c / (2.0 * n);
  t.intervention_accuracy = sum_i / (2.0 * n);
  if (t.control_accuracy > 0) {
    t.relative_increase_pct = 100.0 * (t.intervention_accuracy - t.control_accuracy) / t.control_accuracy;
  }
  t.absolute_increase_pts = 100.0 * (t.intervention_accuracy - t.control_accuracy);

  // Columns nobody landed in carry no information; test the remaining 2 x k.
  std::vector<std::int64_t> r0, r1;
  for (std::size_t j = 0; j < 3; ++j) {
    if (t.counts[0][j] + t.counts[1][j] == 0) continue;
    r0.push_back(t.counts[0][j]);
    r1.push_back(t.counts[1][j]);
  }
  if (r0.size() < 2) {
    t.fisher_note = "all participants in one category; test undefined";
  } else {
    t.fisher_p = evalstats::fisher_exact_2xk(r0, r1).p;
    if (r0.size() == 2) t.fisher_note = "empty column dropped; 2 x 2 test";
  }
  return t;
}

std::string fixed(double v, int decimals) { return fmt::format("{:.{}f}", evalstats::round_to(v, decimals), decimals); }

std::string p_text(double p) {
  if (p < 0.001) return "<0.001";
  return fixed(p, 3);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Summary summarize(const std::filesystem::path& dir, const std::map<std::string, Group>& groups,
                  const std::map<std::string, patientsim::Scenario>& scenarios) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::no_data, "no transcript directory at " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  Summary out;
  // participant -> condition index -> scored session (first one wins)
  std::map<std::string, std::array<std::optional<Scored>, 2>> by_participant;
  for (const auto& path : files) {
    try {
      const auto record = session::SessionRecord::load(path);
      const auto participant = record.metadata.value("participant", std::string());
      const auto scenario_id = record.metadata.value("scenario", std::string());
      const auto sc = scenarios.find(scenario_id);
      if (participant.empty() || sc == scenarios.end()) {
        ++out.skipped_transcripts;
        continue;
      }
      Scored s;
      s.report = patientsim::score(record, sc->second);
      const auto metrics = session::compute_metrics(record);
      s.avg_rt = metrics.avg_rt_s;
      s.empathy_rt = metrics.empathy_turn_rt_s.empty() ? 0.0 : evalstats::mean(metrics.empathy_turn_rt_s);
      auto& slot = by_participant[participant][record.condition == dialog::Condition::intervention ? 1 : 0];
      if (slot) {
        ++out.skipped_transcripts;
      } else {
        slot = std::move(s);
      }
    } catch (const Error&) {
      ++out.skipped_transcripts;
    }
  }

  for (const auto& [id, sessions] : by_participant) {
    if (!sessions[0] || !sessions[1]) {
      out.notes.push_back("participant " + id + " lacks a scored session in both conditions; excluded");
      continue;
    }
    Participant p;
    p.id = id;
    if (auto it = groups.find(id); it != groups.end()) p.group = it->second;
    for (std::size_t c = 0; c < 2; ++c) {
      p.avg_rt[c] = sessions[c]->avg_rt;
      p.empathy_rt[c] = sessions[c]->empathy_rt;
      p.empathic_correct[c] = sessions[c]->report->empathic_correct;
      p.goal_correct[c] = sessions[c]->report->goal_correct;
    }
    out.participants.push_back(std::move(p));
  }
  if (out.participants.empty()) throw Error(Errc::no_data, "no participant with a scored session in both conditions");

  std::vector<const Participant*> all, experts, novices;
  for (const auto& p : out.participants) {
    all.push_back(&p);
    if (p.group == Group::expert) experts.push_back(&p);
    if (p.group == Group::non_expert) novices.push_back(&p);
  }
  if (all.size() == 1) {
    out.notes.push_back("single participant: combined report only; permutation test over n=1 pair");
  } else {
    if (!novices.empty()) out.groups.push_back(summarize_group("non_expert", novices));
    if (!experts.empty()) out.groups.push_back(summarize_group("expert", experts));
  }
  out.groups.push_back(summarize_group("all", all));

  if (all.size() > 1 && !experts.empty() && !novices.empty()) {
    std::vector<double> re, rn;
    for (const auto* p : experts) re.push_back(evalstats::percent_reduction(p->avg_rt[0], p->avg_rt[1]));
    for (const auto* p : novices) rn.push_back(evalstats::percent_reduction(p->avg_rt[0], p->avg_rt[1]));
    out.group_reduction_p = evalstats::unpaired_permutation_test(rn, re, mode_for(re.size() + rn.size()));
    try {
      out.group_reduction_d = evalstats::cohens_d_pooled(rn, re);
    } catch (const Error&) {
    }
  }

  out.empathic = accuracy_table(out.participants, true);
  out.goals = accuracy_table(out.participants, false);
  return out;
}

std::string format_text(const Summary& s) {
  std::string t;
  const auto row = [&](std::string_view label, const std::vector<std::string>& cells) {
    t += fmt::format("{:<34}", label);
    for (const auto& c : cells) t += fmt::format("{:>13}", c);
    t += '\n';
  };
  const auto each = [&](auto fn) {
    std::vector<std::string> cells;
    for (const auto& g : s.groups) cells.push_back(fn(g));
    return cells;
  };

  t += "Response time\n";
  row("", each([](const GroupSummary& g) { return g.label == "non_expert" ? std::string("Non-Expert")
                                                  : g.label == "expert"   ? std::string("Expert")
                                                                          : std::string("All"); }));
  row("Participants", each([](const GroupSummary& g) { return std::to_string(g.n); }));
  row("Control average RT (s)", each([](const GroupSummary& g) { return fixed(g.control_rt, 2); }));
  row("Intervention average RT (s)", each([](const GroupSummary& g) { return fixed(g.intervention_rt, 2); }));
  row("Reduction (%)", each([](const GroupSummary& g) { return fixed(g.reduction_pct, 2); }));
  row("p (paired permutation)", each([](const GroupSummary& g) { return p_text(g.p_value); }));
  row("Cohen's dz", each([](const GroupSummary& g) { return g.cohens_dz ? fixed(*g.cohens_dz, 2) : std::string("n/a"); }));
  row("Control empathy-turn RT (s)", each([](const GroupSummary& g) { return fixed(g.control_empathy_rt, 2); }));
  row("Intervention empathy-turn RT (s)", each([](const GroupSummary& g) { return fixed(g.intervention_empathy_rt, 2); }));
  row("Empathy-turn reduction (%)", each([](const GroupSummary& g) { return fixed(g.empathy_reduction_pct, 2); }));
  row("p, empathy turns", each([](const GroupSummary& g) {
        return g.empathy_p_value ? p_text(*g.empathy_p_value) : std::string("n/a");
      }));
  if (s.group_reduction_p) {
    t += fmt::format("Expert vs non-expert reduction: p = {} (label shuffle)", p_text(*s.group_reduction_p));
    if (s.group_reduction_d) t += fmt::format(", pooled d = {}", fixed(*s.group_reduction_d, 2));
    t += '\n';
  }

  const auto table = [&](std::string_view title, const AccuracyTable& a) {
    t += fmt::format("\n{}\n", title);
    t += fmt::format("{:<16}{:>14}{:>14}{:>14}\n", "", "Zero correct", "One correct", "Two correct");
    t += fmt::format("{:<16}{:>14}{:>14}{:>14}\n", "Control", a.counts[0][0], a.counts[0][1], a.counts[0][2]);
    t += fmt::format("{:<16}{:>14}{:>14}{:>14}\n", "Intervention", a.counts[1][0], a.counts[1][1], a.counts[1][2]);
    t += fmt::format("Fisher exact p: {}", a.fisher_p ? p_text(*a.fisher_p) : std::string("n/a"));
    if (!a.fisher_note.empty()) t += fmt::format(" ({})", a.fisher_note);
    t += '\n';
    t += fmt::format("Accuracy: control {}%, intervention {}%\n", fixed(100 * a.control_accuracy, 2),
                     fixed(100 * a.intervention_accuracy, 2));
    t += fmt::format("Increase: {} percentage points; relative to control {}\n", fixed(a.absolute_increase_pts, 2),
                     a.relative_increase_pct ? fixed(*a.relative_increase_pct, 2) + "%" : std::string("n/a"));
  };
  table("Empathic response accuracy", s.empathic);
  table("Goal selection accuracy", s.goals);

  if (!s.notes.empty() || s.skipped_transcripts > 0) t += "\nNotes\n";
  for (const auto& n : s.notes) t += "- " + n + '\n';
  if (s.skipped_transcripts > 0) t += fmt::format("- {} transcript(s) skipped\n", s.skipped_transcripts);
  return t;
}

json to_json(const Summary& s) {
  json groups = json::array();
  for (const auto& g : s.groups) {
    groups.push_back({{"group", g.label},
                      {"n", g.n},
                      {"control_rt_s", evalstats::round_to(g.control_rt, 2)},
                      {"intervention_rt_s", evalstats::round_to(g.intervention_rt, 2)},
                      {"reduction_pct", evalstats::round_to(g.reduction_pct, 2)},
                      {"control_empathy_rt_s", evalstats::round_to(g.control_empathy_rt, 2)},
                      {"intervention_empathy_rt_s", evalstats::round_to(g.intervention_empathy_rt, 2)},
                      {"empathy_reduction_pct", evalstats::round_to(g.empathy_reduction_pct, 2)},
                      {"p", evalstats::round_to(g.p_value, 3)},
                      {"p_method", g.p_method},
                      {"empathy_p", g.empathy_p_value ? json(evalstats::round_to(*g.empathy_p_value, 3)) : json(nullptr)},
                      {"cohens_dz", g.cohens_dz ? json(evalstats::round_to(*g.cohens_dz, 2)) : json(nullptr)}});
  }
  const auto table = [](const AccuracyTable& a) {
    return json{{"rows", {"control", "intervention"}},
                {"columns", {"zero", "one", "two"}},
                {"counts", a.counts},
                {"fisher_p", a.fisher_p ? json(evalstats::round_to(*a.fisher_p, 3)) : json(nullptr)},
                {"fisher_p_raw", opt(a.fisher_p)},
                {"fisher_note", a.fisher_note},
                {"control_accuracy_pct", evalstats::round_to(100 * a.control_accuracy, 2)},
                {"intervention_accuracy_pct", evalstats::round_to(100 * a.intervention_accuracy, 2)},
                {"absolute_increase_pts", evalstats::round_to(a.absolute_increase_pts, 2)},
                {"relative_increase_pct",
                 a.relative_increase_pct ? json(evalstats::round_to(*a.relative_increase_pct, 2)) : json(nullptr)}};
  };
  json people = json::array();
  for (const auto& p : s.participants) {
    people.push_back({{"id", p.id},
                      {"group", p.group ? json(to_string(*p.group)) : json(nullptr)},
                      {"avg_rt_s", p.avg_rt},
                      {"empathy_rt_s", p.empathy_rt},
                      {"empathic_correct", p.empathic_correct},
                      {"goal_correct", p.goal_correct}});
  }
  return json{{"groups", groups},
              {"empathic_accuracy", table(s.empathic)},
              {"goal_accuracy", table(s.goals)},
              {"group_reduction_p", s.group_reduction_p ? json(evalstats::round_to(*s.group_reduction_p, 3)) : json(nullptr)},
              {"group_reduction_d", s.group_reduction_d ? json(evalstats::round_to(*s.group_reduction_d, 2)) : json(nullptr)},
              {"participants", people},
              {"notes", s.notes},
              {"skipped_transcripts", s.skipped_transcripts}};
}

}  // namespace a2p2::report
