// a2p2: graph validation, the session server, the patient simulator and the
// study report.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>

#include "a2p2/ckg.hpp"
#include "a2p2/error.hpp"
#include "a2p2/http_api.hpp"
#include "a2p2/http_endpoint.hpp"
#include "a2p2/patientsim.hpp"
#include "a2p2/random.hpp"
#include "a2p2/report.hpp"
#include "a2p2/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace a2p2;

namespace {

constexpr const char* kDefaultStart = "2022-01-10T09:00:00.000Z";

struct DataOptions {
  std::string dir = A2P2_DEFAULT_DATA_DIR;
  std::string kg, responses, policy, followup, templates, emotions, scorer;

  void add(CLI::App* app) {
    app->add_option("--data", dir, "directory holding the shipped resource files");
    app->add_option("--kg", kg, "clinical knowledge graph (JSON)");
    app->add_option("--responses", responses, "empathic response bank (JSON)");
    app->add_option("--policy", policy, "dialog policy for first sessions (JSON)");
    app->add_option("--followup-policy", followup, "dialog policy for later sessions (JSON)");
    app->add_option("--templates", templates, "response templates (JSON)");
    app->add_option("--emotions", emotions, "emotion lexicon (JSON)");
    app->add_option("--scorer", scorer, "empathy scorer configuration (JSON)");
  }

  session::ResourcePaths paths() const {
    auto p = session::ResourcePaths::defaults(dir);
    if (!kg.empty()) p.graph = kg;
    if (!responses.empty()) p.responses = responses;
    if (!policy.empty()) p.policy = policy;
    if (!followup.empty()) p.followup_policy = fs::path(followup);
    if (!templates.empty()) p.templates = templates;
    if (!emotions.empty()) p.emotions = emotions;
    if (!scorer.empty()) p.scorer = scorer;
    return p;
  }
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::validation_error, "cannot write " + path.string());
  out << content;
}

std::map<std::string, patientsim::Scenario> load_scenarios(const fs::path& dir, const session::Resources& res) {
  std::map<std::string, patientsim::Scenario> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    auto sc = patientsim::load_scenario_file(entry.path(), res.graph, res.bank);
    out.emplace(sc.id, std::move(sc));
  }
  return out;
}

int kg_validate(const std::string& file) {
  try {
    const auto graph = ckg::ClinicalGraph::load_file(file);
    const auto s = graph.stats();
    std::cout << fmt::format(
        "symptoms: {}\ngoals: {}\nsolutions: {}\nresources: {}\nsymptom-goal edges: {}\ngoal-solution edges: {}\n"
        "resources per solution: {}\n",
        s.symptoms, s.goals, s.solutions, s.resources, s.symptom_goal_edges, s.goal_solution_edges,
        s.min_resources_per_solution == s.max_resources_per_solution
            ? std::to_string(s.min_resources_per_solution)
            : fmt::format("{}-{}", s.min_resources_per_solution, s.max_resources_per_solution));
    return 0;
  } catch (const Error& e) {
    std::cout << "invalid: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  }
}

http::ApiServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

struct SimulateOptions {
  std::string scenario;
  std::string condition = "intervention";
  std::uint64_t seed = 0;
  std::string out;
  std::string endpoint;
  std::string participant;
  std::string start = kDefaultStart;
  long think_ms = 8000;
  long jitter_ms = 4000;
  long gap_ms = 3000;
  long timeout_ms = 120000;
  bool human = false;
};

int simulate(const DataOptions& data, const SimulateOptions& o) {
  const auto res = session::Resources::load(data.paths());
  const auto scenario = patientsim::load_scenario_file(o.scenario, res->graph, res->bank);

  patientsim::DriveOptions drive;
  drive.condition = dialog::parse_condition(o.condition);
  drive.seed = o.seed;
  drive.provider = o.human ? patientsim::ProviderMode::human : patientsim::ProviderMode::automatic;
  drive.think_time = std::chrono::milliseconds(o.think_ms);
  drive.think_jitter = std::chrono::milliseconds(o.jitter_ms);
  drive.client_gap = std::chrono::milliseconds(o.gap_ms);
  drive.provider_timeout = std::chrono::milliseconds(o.timeout_ms);
  if (!o.participant.empty()) drive.metadata["participant"] = o.participant;

  patientsim::DriveResult result;
  if (!o.endpoint.empty()) {
    http::HttpEndpoint endpoint(o.endpoint);
    result = patientsim::drive(scenario, endpoint, drive);
  } else {
    auto clock = std::make_shared<ManualClock>(parse_iso8601(o.start));
    session::SessionService service(res, clock);
    patientsim::InProcessEndpoint endpoint(service, clock);
    result = patientsim::drive(scenario, endpoint, drive);
  }
  write_file(o.out, result.record.to_jsonl());
  std::cout << patientsim::to_json(patientsim::score(result.record, scenario)).dump(2) << '\n';
  return 0;
}

int evaluate(const DataOptions& data, const std::string& transcripts, const std::string& groups_file,
             const std::string& scenarios_dir, const std::string& out) {
  const auto res = session::Resources::load(data.paths());
  const auto scenarios = load_scenarios(scenarios_dir.empty() ? fs::path(data.dir) / "scenarios" : fs::path(scenarios_dir), *res);
  std::map<std::string, report::Group> groups;
  if (!groups_file.empty()) groups = report::load_groups(groups_file);
  const auto summary = report::summarize(transcripts, groups, scenarios);
  const auto text = report::format_text(summary);
  write_file(out, text);
  write_file(out + ".json", report::to_json(summary).dump(2) + "\n");
  std::cout << text;
  return 0;
}

// Synthetic within-subject study: every participant runs one scenario per
// condition with the auto-provider; order, scenario pairing and think times
// come from the seed.
int study(const DataOptions& data, const std::string& out_dir, int participants, std::uint64_t seed,
          const std::string& start) {
  const auto res = session::Resources::load(data.paths());
  const auto scenarios = load_scenarios(fs::path(data.dir) / "scenarios", *res);
  if (scenarios.size() < 2) throw Error(Errc::validation_error, "study needs two scenarios");
  const auto& first = scenarios.begin()->second;
  const auto& second = std::next(scenarios.begin())->second;

  const fs::path transcripts = fs::path(out_dir) / "transcripts";
  fs::create_directories(transcripts);
  auto clock = std::make_shared<ManualClock>(parse_iso8601(start));
  session::SessionService service(res, clock, session::ServiceOptions{transcripts, {}});
  patientsim::InProcessEndpoint endpoint(service, clock);

  json groups = json::object();
  Rng rng(seed);
  for (int p = 0; p < participants; ++p) {
    const std::string id = fmt::format("p{:02d}", p + 1);
    groups[id] = p < participants / 2 ? "non_expert" : "expert";
    const bool control_first = uniform_below(rng, 2) == 0;
    const bool swap_scenarios = uniform_below(rng, 2) == 0;
    const auto base = std::chrono::milliseconds(6000 + static_cast<long>(uniform_below(rng, 10001)));
    for (int k = 0; k < 2; ++k) {
      patientsim::DriveOptions o;
      const bool control = (k == 0) == control_first;
      o.condition = control ? dialog::Condition::control : dialog::Condition::intervention;
      o.seed = derive_seed(seed, static_cast<std::uint64_t>(p * 2 + k + 100));
      o.client_id = id;
      o.think_time = base;
      o.metadata = json{{"participant", id}};
      patientsim::drive((k == 0) != swap_scenarios ? first : second, endpoint, o);
      clock->advance(std::chrono::minutes(30));
    }
  }
  write_file(fs::path(out_dir) / "groups.json", groups.dump(2) + "\n");
  std::cout << fmt::format("{} participants, {} sessions in {}\n", participants, service.session_ids().size(),
                           transcripts.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"a2p2: session server, patient simulator and study analysis"};
  app.require_subcommand(1);
  DataOptions data;

  auto* kg = app.add_subcommand("kg", "clinical knowledge graph tools");
  kg->require_subcommand(1);
  auto* kg_val = kg->add_subcommand("validate", "validate a graph file and print its statistics");
  std::string kg_file = (fs::path(A2P2_DEFAULT_DATA_DIR) / "graph.json").string();
  kg_val->add_option("--file", kg_file, "graph file");

  auto* serve = app.add_subcommand("serve", "run the HTTP session service");
  data.add(serve);
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data_dir = "sessions";
  int utc_offset = 0;
  serve->add_option("--port", port, "listen port (0 picks a free one)");
  serve->add_option("--host", host, "listen address");
  serve->add_option("--data-dir", data_dir, "directory for session event logs");
  serve->add_option("--utc-offset", utc_offset, "minutes east of UTC used for time-of-day greetings");

  auto* sim = app.add_subcommand("simulate", "replay a scenario against a session");
  data.add(sim);
  SimulateOptions so;
  sim->add_option("--scenario", so.scenario, "scenario file")->required();
  sim->add_option("--condition", so.condition, "control | intervention");
  sim->add_option("--seed", so.seed, "session seed");
  sim->add_option("--out", so.out, "transcript output (JSON lines)")->required();
  sim->add_option("--endpoint", so.endpoint, "session server URL; in-process with a virtual clock when omitted");
  sim->add_option("--participant", so.participant, "participant id stored in the session metadata");
  sim->add_option("--start", so.start, "virtual start time for in-process runs (ISO-8601)");
  sim->add_option("--think-ms", so.think_ms, "auto-provider think time");
  sim->add_option("--jitter-ms", so.jitter_ms, "extra seeded think time, uniform in [0, jitter]");
  sim->add_option("--gap-ms", so.gap_ms, "pause between a provider reply and the next client turn");
  sim->add_option("--timeout-ms", so.timeout_ms, "how long to wait for a human provider");
  sim->add_flag("--human", so.human, "wait for a provider on the endpoint instead of answering automatically");

  auto* ev = app.add_subcommand("eval", "summarize a directory of transcripts");
  data.add(ev);
  std::string transcripts, groups_file, scenarios_dir, out;
  ev->add_option("--transcripts", transcripts, "transcript directory")->required();
  ev->add_option("--groups", groups_file, "participant -> expert|non_expert (JSON)");
  ev->add_option("--scenarios", scenarios_dir, "scenario directory (defaults to the shipped one)");
  ev->add_option("--out", out, "report path; JSON goes to <out>.json")->required();

  auto* st = app.add_subcommand("study", "run a synthetic within-subject study with the auto-provider");
  data.add(st);
  std::string study_out;
  int participants = 20;
  std::uint64_t study_seed = 1;
  std::string study_start = kDefaultStart;
  st->add_option("--out", study_out, "output directory")->required();
  st->add_option("--participants", participants, "number of participants");
  st->add_option("--seed", study_seed, "study seed");
  st->add_option("--start", study_start, "virtual start time (ISO-8601)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (kg_val->parsed()) return kg_validate(kg_file);
    if (serve->parsed()) {
      const auto res = session::Resources::load(data.paths());
      session::SessionService service(res, std::make_shared<SystemClock>(),
                                      session::ServiceOptions{fs::path(data_dir), std::chrono::minutes(utc_offset)});
      http::ApiServer server(service);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("listening on http://{}:{} (session logs in {})", host, bound, data_dir);
      std::cout.flush();
      server.listen();
      g_server = nullptr;
      spdlog::info("stopped");
      return 0;
    }
    if (sim->parsed()) return simulate(data, so);
    if (ev->parsed()) return evaluate(data, transcripts, groups_file, scenarios_dir, out);
    if (st->parsed()) return study(data, study_out, participants, study_seed, study_start);
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
