#include "a2p2/session.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "a2p2/error.hpp"
#include "a2p2/random.hpp"

namespace a2p2::session {

using nlohmann::json;
using dialog::Condition;
using dialog::Slot;

ResourcePaths ResourcePaths::defaults(const std::filesystem::path& dir) {
  ResourcePaths p;
  p.graph = dir / "graph.json";
  p.emotions = dir / "emotions.json";
  p.policy = dir / "policy.json";
  if (std::filesystem::exists(dir / "policy_followup.json")) p.followup_policy = dir / "policy_followup.json";
  p.templates = dir / "templates.json";
  p.responses = dir / "responses.json";
  p.scorer = dir / "scorer.json";
  return p;
}

std::shared_ptr<const Resources> Resources::load(const ResourcePaths& paths) {
  auto graph = ckg::ClinicalGraph::load_file(paths.graph);
  auto analyzer = nlu::Analyzer(graph, nlu::Lexicon::emotions_from_file(paths.emotions));
  auto policy = dialog::Policy::load_file(paths.policy);
  std::optional<dialog::Policy> followup;
  if (paths.followup_policy) followup = dialog::Policy::load_file(*paths.followup_policy);
  auto templates = nlg::TemplateBank::load_file(paths.templates);
  templates.check_covers(policy);
  if (followup) templates.check_covers(*followup);
  auto bank = empathy::ResponseBank::load_file(paths.responses, &graph);
  auto scorer = empathy::ScorerConfig::load_file(paths.scorer);
  return std::make_shared<const Resources>(Resources{std::move(graph), std::move(analyzer), std::move(policy),
                                                     std::move(followup), std::move(templates), std::move(bank),
                                                     std::move(scorer)});
}

const dialog::Policy& Resources::policy_for(int session_number) const {
  if (session_number > 1 && followup_policy) return *followup_policy;
  return policy;
}

std::string Resources::render_slot(Slot slot, const std::string& value) const {
  switch (slot) {
    case Slot::symptom:
      if (const auto* s = graph.find_symptom(value)) {
        std::string name = s->name;
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return name;
      }
      break;
    case Slot::goal:
      if (const auto* g = graph.find_goal(value)) return g->text;
      break;
    case Slot::solution:
      if (const auto* s = graph.find_solution(value)) return s->text;
      break;
    default:
      break;
  }
  return value;
}

struct SessionService::Session {
  mutable std::mutex mu;
  mutable std::condition_variable cv;
  const dialog::Policy* policy = nullptr;
  SessionRecord record;
  dialog::ConversationState state;
  ckg::ClientProfile profile;
  std::optional<Timestamp> rt_anchor;
  std::map<std::string, std::vector<empathy::RankedSuggestion>> empathic_lists;  // by step
  std::ofstream log;
};

namespace {

void require_open(const SessionRecord& record) {
  if (record.closed()) throw Error(Errc::session_closed, "session '" + record.session_id + "' is closed", record.session_id);
}

}  // namespace

SessionService::SessionService(std::shared_ptr<const Resources> resources, std::shared_ptr<Clock> clock,
                               ServiceOptions options)
    : resources_(std::move(resources)), clock_(std::move(clock)), options_(std::move(options)) {
  if (options_.data_dir) {
    std::filesystem::create_directories(*options_.data_dir);
    load_existing();
  }
}

SessionService::~SessionService() = default;

void SessionService::load_existing() {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*options_.data_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    auto s = std::make_shared<Session>();
    s->record = SessionRecord::load(path);
    s->policy = &resources_->policy_for(s->record.session_number);
    s->state = replay_state(*s->policy, s->record);
    s->profile = replay_profile(resources_->graph, s->record);
    for (const auto& e : s->record.events) {
      if (e.kind == EventKind::message) {
        if (e.actor == Actor::client) s->rt_anchor = e.ts;
        if (e.actor == Actor::provider) s->rt_anchor.reset();
      } else if (e.kind == EventKind::suggestion_list) {
        s->empathic_lists[e.payload.at("step").get<std::string>()] = empathy::ranked_from_json(e.payload.at("list"));
      }
    }
    s->log.open(path, std::ios::app | std::ios::binary);
    const auto& id = s->record.session_id;
    if (id.size() > 1 && id[0] == 's') {
      try {
        next_number_ = std::max<std::uint64_t>(next_number_, std::stoull(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
    sessions_.emplace(id, std::move(s));
  }
}

std::string SessionService::next_id() {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "s%06llu", static_cast<unsigned long long>(next_number_++));
  return buf;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& session_id) const {
  std::shared_lock lock(map_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(Errc::unknown_session, "no session '" + session_id + "'", session_id);
  return it->second;
}

namespace {

// Appends under the caller's session lock. Timestamps never go backwards even
// if the wall clock does.
const Event& append(std::ofstream& log, SessionRecord& record, std::condition_variable& cv, Clock& clock, Actor actor,
                    EventKind kind, json payload, std::optional<Timestamp> when = std::nullopt) {
  Timestamp ts = when ? *when : clock.now();
  if (!record.events.empty() && ts < record.events.back().ts) ts = record.events.back().ts;
  Event e{record.events.size(), ts, actor, kind, std::move(payload)};
  if (log.is_open()) {
    log << to_json_line(e);
    log.flush();
  }
  record.events.push_back(std::move(e));
  cv.notify_all();
  return record.events.back();
}

void check_profile(const ckg::ClinicalGraph& graph, const ckg::ClientProfile& profile) {
  // Re-linking through link_client checks existence and kind.
  ckg::ClientProfile scratch;
  for (auto kind : {ckg::LinkKind::symptom, ckg::LinkKind::goal, ckg::LinkKind::solution}) {
    for (const auto& l : profile.links(kind)) scratch = ckg::link_client(graph, std::move(scratch), l.node, kind, l.at);
  }
}

}  // namespace

std::string SessionService::create_session(const ckg::ClientProfile& profile, Condition condition, std::uint64_t seed,
                                           int session_number, json metadata) {
  check_profile(resources_->graph, profile);
  auto s = std::make_shared<Session>();
  s->policy = &resources_->policy_for(session_number);
  const Timestamp now = clock_->now();
  s->state = dialog::init_session(*s->policy, profile, session_number, condition, now, options_.utc_offset);
  s->profile = profile;

  std::unique_lock map_lock(map_mutex_);
  const std::string id = next_id();
  s->record.session_id = id;
  s->record.profile = profile;
  s->record.condition = condition;
  s->record.seed = seed;
  s->record.session_number = session_number;
  s->record.utc_offset_minutes = static_cast<int>(options_.utc_offset.count());
  s->record.metadata = metadata.is_object() ? metadata : json::object();
  if (options_.data_dir) {
    s->log.open(*options_.data_dir / (id + ".jsonl"), std::ios::trunc | std::ios::binary);
    if (!s->log) throw Error(Errc::validation_error, "cannot write session log in " + options_.data_dir->string());
  }
  append(s->log, s->record, s->cv, *clock_, Actor::system, EventKind::init,
         json{{"session_id", id},
              {"profile", profile},
              {"condition", dialog::to_string(condition)},
              {"seed", seed},
              {"session_number", session_number},
              {"utc_offset_minutes", s->record.utc_offset_minutes},
              {"metadata", s->record.metadata},
              {"state", dialog::to_json(s->state)}},
         now);
  sessions_.emplace(id, std::move(s));
  return id;
}

ClientAck SessionService::post_client_message(const std::string& session_id, const std::string& text) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  require_open(s->record);

  const auto nlu = resources_->analyzer.analyze(text);
  const auto& msg = append(s->log, s->record, s->cv, *clock_, Actor::client, EventKind::message,
                           json{{"text", text}, {"nlu", nlu::to_json(nlu)}});
  ClientAck ack{msg.seq, msg.ts, nlu, false};
  s->rt_anchor = msg.ts;
  s->state = dialog::absorb(std::move(s->state), nlu);

  if (nlu.symptom) {
    const auto& e = append(s->log, s->record, s->cv, *clock_, Actor::system, EventKind::link,
                           json{{"kind", "symptom"}, {"node", *nlu.symptom}});
    s->profile = ckg::link_client(resources_->graph, std::move(s->profile), *nlu.symptom, ckg::LinkKind::symptom, e.ts);
  }

  const auto& step = s->policy->step(s->state.selected_step);
  if (step.empathic) {
    std::vector<empathy::RankedSuggestion> list;
    if (s->record.condition == Condition::intervention) {
      // Rank against the tracker's latest symptom and emotion, which may have
      // come from an earlier message.
      nlu::NluResult context{s->state.slot(Slot::symptom), s->state.slot(Slot::emotion), nlu.matches};
      list = empathy::rank(resources_->bank, resources_->scorer, text, context);
    } else {
      list = empathy::control_order(resources_->bank, s->record.seed);
    }
    append(s->log, s->record, s->cv, *clock_, Actor::system, EventKind::suggestion_list,
           json{{"step", step.key},
                {"mode", s->record.condition == Condition::intervention ? "ranked" : "shuffled"},
                {"list", empathy::to_json(list)}});
    s->empathic_lists[step.key] = std::move(list);
    ack.suggestions_ready = true;
  }
  return ack;
}

Suggestions SessionService::get_suggestions(const std::string& session_id, std::string_view step_key) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  require_open(s->record);
  const auto& step = s->policy->step(step_key);

  Suggestions out;
  out.step = step.key;
  const nlg::SlotRenderer render = [this](Slot slot, const std::string& v) { return resources_->render_slot(slot, v); };
  bool wants_solutions = false;
  for (const auto& avail : dialog::actions_for_step(*s->policy, s->state, step.key)) {
    for (Slot r : avail.action.required_slots) wants_solutions |= (r == Slot::goal || r == Slot::solution);
    for (const auto& tmpl : resources_->templates.templates_for_action(avail.action.key)) {
      auto missing = avail.missing;
      for (Slot m : nlg::missing_slots(tmpl, s->state)) {
        if (std::find(missing.begin(), missing.end(), m) == missing.end()) missing.push_back(m);
      }
      if (!missing.empty()) {
        out.blocked.push_back({tmpl.id, avail.action.key, tmpl.text, std::move(missing)});
        continue;
      }
      out.therapeutic.push_back({tmpl.id, avail.action.key, nlg::fill(tmpl, s->state, render)});
    }
  }
  if (step.empathic) {
    if (auto it = s->empathic_lists.find(step.key); it != s->empathic_lists.end()) {
      for (const auto& r : it->second) {
        out.empathic.push_back({r.response_id, resources_->bank.find(r.response_id)->text, r.score, r.rank});
      }
    }
  }
  if (wants_solutions && s->state.filled(Slot::goal)) {
    out.solutions = ckg::recommend_solutions(resources_->graph, *s->state.slot(Slot::goal));
  }
  return out;
}

GoalPresentation SessionService::present_goals(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  require_open(s->record);
  const auto& symptom_slot = s->state.slot(Slot::symptom);
  if (!symptom_slot) throw Error(Errc::missing_slot, "no symptom detected yet", "symptom");
  const auto& graph = resources_->graph;
  const std::string symptom = *symptom_slot;

  // The correct pair is the symptom's exclusive goals; symptoms without two of
  // those fall back to their first two goals by id.
  std::vector<std::string> pair;
  for (const auto* g : graph.exclusive_goals(symptom)) pair.push_back(g->id);
  if (pair.size() < 2) {
    pair.clear();
    for (const auto& g : ckg::recommend_goals(graph, symptom)) pair.push_back(g.id);
  }
  if (pair.size() < 2) throw Error(Errc::validation_error, "symptom '" + symptom + "' has fewer than two goals", symptom);
  pair.resize(2);

  GoalPresentation out;
  out.correct_pair = {pair[0], pair[1]};
  out.mode = s->record.condition;
  if (out.mode == Condition::intervention) {
    out.options = pair;
  } else {
    // Distractors: goals exclusive to other symptoms first, then any goal that
    // does not address this symptom.
    std::vector<std::string> exclusive_pool;
    std::vector<std::string> other_pool;
    for (const auto& g : graph.goals()) {
      if (std::find(g.addresses.begin(), g.addresses.end(), symptom) != g.addresses.end()) continue;
      (g.addresses.size() == 1 ? exclusive_pool : other_pool).push_back(g.id);
    }
    std::sort(exclusive_pool.begin(), exclusive_pool.end());
    std::sort(other_pool.begin(), other_pool.end());
    Rng pick(derive_seed(s->record.seed, 1));
    shuffle(std::span<std::string>(exclusive_pool), pick);
    shuffle(std::span<std::string>(other_pool), pick);
    out.options = pair;
    for (auto* pool : {&exclusive_pool, &other_pool}) {
      for (const auto& id : *pool) {
        if (out.options.size() == 5) break;
        out.options.push_back(id);
      }
    }
    if (out.options.size() != 5) throw Error(Errc::validation_error, "graph has too few goals for five options");
    Rng order(derive_seed(s->record.seed, 2));
    shuffle(std::span<std::string>(out.options), order);
  }
  append(s->log, s->record, s->cv, *clock_, Actor::system, EventKind::goal_options, to_json(out));
  return out;
}

ProviderAck SessionService::post_provider_message(const std::string& session_id, const ProviderMessage& message) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  require_open(s->record);
  const auto& graph = resources_->graph;
  if (message.text.empty()) throw Error(Errc::validation_error, "provider message text is empty");
  for (const auto& g : message.goal_ids) {
    if (!graph.find_goal(g)) throw Error(Errc::unknown_goal, "no goal '" + g + "'", g);
  }
  for (const auto& sol : message.solution_ids) {
    if (!graph.find_solution(sol)) throw Error(Errc::unknown_node, "no solution '" + sol + "'", sol);
  }

  const auto& step = s->policy->step(s->state.selected_step);
  const Timestamp now = std::max(clock_->now(), s->record.events.back().ts);
  std::optional<std::int64_t> rt;
  if (s->rt_anchor) rt = (now - *s->rt_anchor).count();
  s->rt_anchor.reset();

  const auto& msg = append(s->log, s->record, s->cv, *clock_, Actor::provider, EventKind::message,
                           json{{"text", message.text},
                                {"step", step.key},
                                {"empathic", step.empathic},
                                {"suggestion_id", message.suggestion_id ? json(*message.suggestion_id) : json(nullptr)},
                                {"goal_ids", message.goal_ids},
                                {"solution_ids", message.solution_ids},
                                {"rt_ms", rt ? json(*rt) : json(nullptr)}},
                           now);
  ProviderAck ack{msg.seq, msg.ts, rt, step.key, {}, false};

  if (!message.goal_ids.empty() || !message.solution_ids.empty()) {
    append(s->log, s->record, s->cv, *clock_, Actor::provider, EventKind::selection,
           json{{"goal_ids", message.goal_ids}, {"solution_ids", message.solution_ids}});
    if (!message.goal_ids.empty()) s->state = dialog::set_slot(std::move(s->state), Slot::goal, message.goal_ids.front());
    if (!message.solution_ids.empty()) {
      s->state = dialog::set_slot(std::move(s->state), Slot::solution, message.solution_ids.front());
    }
    auto link = [&](const std::string& node, ckg::LinkKind kind) {
      const auto& e = append(s->log, s->record, s->cv, *clock_, Actor::system, EventKind::link,
                             json{{"kind", ckg::to_string(kind)}, {"node", node}});
      s->profile = ckg::link_client(graph, std::move(s->profile), node, kind, e.ts);
    };
    for (const auto& g : message.goal_ids) link(g, ckg::LinkKind::goal);
    for (const auto& sol : message.solution_ids) link(sol, ckg::LinkKind::solution);
  }

  s->state = dialog::complete_step(*s->policy, std::move(s->state), step.key);
  append(s->log, s->record, s->cv, *clock_, Actor::system, EventKind::step_complete, json{{"step", step.key}});
  ack.selected_step = s->state.selected_step;
  ack.finishable = dialog::is_finishable(*s->policy, s->state);
  return ack;
}

void SessionService::select_step(const std::string& session_id, std::string_view step) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  require_open(s->record);
  s->state = dialog::select_step(*s->policy, std::move(s->state), step);
  append(s->log, s->record, s->cv, *clock_, Actor::provider, EventKind::step_select, json{{"step", std::string(step)}});
}

void SessionService::complete_step(const std::string& session_id, std::string_view step) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  require_open(s->record);
  s->state = dialog::complete_step(*s->policy, std::move(s->state), step);
  append(s->log, s->record, s->cv, *clock_, Actor::provider, EventKind::step_complete, json{{"step", std::string(step)}});
}

void SessionService::close_session(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  require_open(s->record);
  append(s->log, s->record, s->cv, *clock_, Actor::system, EventKind::close,
         json{{"finished", dialog::is_finishable(*s->policy, s->state)}});
  s->log.close();
}

Metrics SessionService::get_metrics(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return compute_metrics(s->record);
}

dialog::ConversationState SessionService::state(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->state;
}

ckg::ClientProfile SessionService::profile(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->profile;
}

SessionRecord SessionService::record(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->record;
}

std::vector<Event> SessionService::events_since(const std::string& session_id, std::uint64_t since,
                                                std::chrono::milliseconds wait) const {
  auto s = find(session_id);
  std::unique_lock lock(s->mu);
  if (wait.count() > 0) {
    s->cv.wait_for(lock, wait, [&] { return s->record.events.size() > since || s->record.closed(); });
  }
  std::vector<Event> out;
  for (std::size_t i = static_cast<std::size_t>(since); i < s->record.events.size(); ++i) out.push_back(s->record.events[i]);
  return out;
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

ckg::ClientProfile SessionService::client_history(const std::string& client_id) const {
  std::vector<std::shared_ptr<Session>> mine;
  {
    std::shared_lock lock(map_mutex_);
    for (const auto& [id, s] : sessions_) mine.push_back(s);
  }
  ckg::ClientProfile out;
  out.client_id = client_id;
  std::vector<std::pair<Timestamp, Event>> links;
  for (const auto& s : mine) {
    std::lock_guard lock(s->mu);
    if (s->record.profile.client_id != client_id) continue;
    if (out.name.empty()) out.name = s->record.profile.name;
    for (auto kind : {ckg::LinkKind::symptom, ckg::LinkKind::goal, ckg::LinkKind::solution}) {
      for (const auto& l : s->record.profile.links(kind)) {
        links.push_back({l.at, Event{0, l.at, Actor::system, EventKind::link, json{{"kind", ckg::to_string(kind)}, {"node", l.node}}}});
      }
    }
    for (const auto& e : s->record.events) {
      if (e.kind == EventKind::link) links.push_back({e.ts, e});
    }
  }
  std::stable_sort(links.begin(), links.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [ts, e] : links) {
    out = ckg::link_client(resources_->graph, std::move(out), e.payload.at("node").get<std::string>(),
                           ckg::parse_link_kind(e.payload.at("kind").get<std::string>()), ts);
  }
  return out;
}

json to_json(const Suggestions& s) {
  json therapeutic = json::array();
  for (const auto& t : s.therapeutic) therapeutic.push_back({{"id", t.template_id}, {"action", t.action}, {"text", t.text}});
  json blocked = json::array();
  for (const auto& b : s.blocked) {
    json missing = json::array();
    for (auto m : b.missing) missing.push_back(dialog::to_string(m));
    blocked.push_back({{"id", b.template_id}, {"action", b.action}, {"text", b.text}, {"missing", missing}});
  }
  json empathic = json::array();
  for (const auto& e : s.empathic) empathic.push_back({{"id", e.id}, {"text", e.text}, {"score", e.score}, {"rank", e.rank}});
  json solutions = json::array();
  for (const auto& r : s.solutions) {
    solutions.push_back({{"id", r.solution.id},
                         {"text", r.solution.text},
                         {"resource", {{"id", r.resource.id}, {"title", r.resource.title}, {"uri", r.resource.uri}}}});
  }
  return json{{"step", s.step}, {"therapeutic", therapeutic}, {"blocked", blocked}, {"empathic", empathic}, {"solutions", solutions}};
}

json to_json(const GoalPresentation& g) {
  return json{{"options", g.options}, {"correct_pair", g.correct_pair}, {"mode", dialog::to_string(g.mode)}};
}

json to_json(const ProviderAck& a) {
  return json{{"seq", a.seq},
              {"received_at", format_iso8601(a.received_at)},
              {"rt_ms", a.rt_ms ? json(*a.rt_ms) : json(nullptr)},
              {"completed_step", a.completed_step},
              {"selected_step", a.selected_step},
              {"finishable", a.finishable}};
}

json to_json(const ClientAck& a) {
  return json{{"seq", a.seq},
              {"delivered_at", format_iso8601(a.delivered_at)},
              {"nlu", nlu::to_json(a.nlu)},
              {"suggestions_ready", a.suggestions_ready}};
}

}  // namespace a2p2::session
