#include "a2p2/http_api.hpp"

#include <httplib.h>

#include <chrono>
#include <string_view>

#include "a2p2/error.hpp"

namespace a2p2::http {

using nlohmann::json;
using namespace std::chrono_literals;

int status_for(Errc code) noexcept {
  switch (code) {
    case Errc::unknown_session:
    case Errc::unknown_node:
    case Errc::unknown_step:
    case Errc::unknown_action:
      return 404;
    case Errc::session_closed:
    case Errc::no_turns:
      return 409;
    default:
      return 400;
  }
}

namespace {

constexpr auto kMaxLongPoll = 30s;
constexpr auto kStreamPoll = 1s;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("request body is not JSON: ") + e.what());
  }
}

std::uint64_t query_u64(const httplib::Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    return std::stoull(req.get_param_value(key));
  } catch (const std::exception&) {
    throw Error(Errc::validation_error, std::string("bad query parameter '") + key + "'");
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, json{{"error", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}},
                status_for(e.code()));
    } catch (const json::exception& e) {
      send_json(res, json{{"error", to_string(Errc::validation_error)}, {"message", e.what()}, {"detail", ""}}, 400);
    }
  };
}

json events_json(const std::vector<session::Event>& events) {
  json out = json::array();
  for (const auto& e : events) out.push_back(session::to_json(e));
  return out;
}

}  // namespace

ApiServer::ApiServer(session::SessionService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& svc = service_;
  auto& srv = *server_;

  srv.Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             ckg::ClientProfile profile = body.at("profile").get<ckg::ClientProfile>();
             const auto condition = dialog::parse_condition(body.at("condition").get<std::string>());
             const auto seed = body.value("seed", std::uint64_t{0});
             const int number = body.value("session_number", 1);
             const json metadata = body.value("metadata", json::object());
             const auto id = svc.create_session(profile, condition, seed, number, metadata);
             send_json(res, json{{"session_id", id}}, 201);
           }));

  srv.Post(R"(/sessions/([^/]+)/client-message)",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             send_json(res, session::to_json(svc.post_client_message(req.matches[1], body.at("text").get<std::string>())));
           }));

  srv.Get(R"(/sessions/([^/]+)/suggestions)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            std::string step = req.get_param_value("step");
            if (step.empty()) step = svc.state(req.matches[1]).selected_step;
            send_json(res, session::to_json(svc.get_suggestions(req.matches[1], step)));
          }));

  srv.Get(R"(/sessions/([^/]+)/goals)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, session::to_json(svc.present_goals(req.matches[1])));
          }));

  srv.Post(R"(/sessions/([^/]+)/provider-message)",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             session::ProviderMessage msg;
             msg.text = body.at("text").get<std::string>();
             if (body.contains("suggestion_id") && !body["suggestion_id"].is_null()) {
               msg.suggestion_id = body["suggestion_id"].get<std::string>();
             }
             msg.goal_ids = body.value("goal_ids", std::vector<std::string>{});
             msg.solution_ids = body.value("solution_ids", std::vector<std::string>{});
             send_json(res, session::to_json(svc.post_provider_message(req.matches[1], msg)));
           }));

  srv.Post(R"(/sessions/([^/]+)/step)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             const auto step = body.at("step").get<std::string>();
             const auto action = body.value("action", std::string("select"));
             if (action == "select") {
               svc.select_step(req.matches[1], step);
             } else if (action == "complete") {
               svc.complete_step(req.matches[1], step);
             } else {
               throw Error(Errc::validation_error, "step action must be 'select' or 'complete'", action);
             }
             send_json(res, dialog::to_json(svc.state(req.matches[1])));
           }));

  srv.Post(R"(/sessions/([^/]+)/close)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             svc.close_session(req.matches[1]);
             send_json(res, json{{"closed", true}});
           }));

  srv.Get(R"(/sessions/([^/]+)/metrics)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, session::to_json(svc.get_metrics(req.matches[1])));
          }));

  srv.Get(R"(/sessions/([^/]+)/state)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, dialog::to_json(svc.state(req.matches[1])));
          }));

  srv.Get(R"(/sessions/([^/]+)/events)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto since = query_u64(req, "since", 0);
            auto wait = std::chrono::milliseconds(query_u64(req, "wait_ms", 0));
            wait = std::min<std::chrono::milliseconds>(wait, kMaxLongPoll);
            send_json(res, json{{"events", events_json(svc.events_since(req.matches[1], since, wait))}});
          }));

  srv.Get(R"(/sessions/([^/]+)/stream)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            auto next = std::make_shared<std::uint64_t>(query_u64(req, "since", 0));
            svc.state(id);  // 404 before the stream starts
            res.set_chunked_content_provider(
                "text/event-stream", [&svc, id, next](std::size_t, httplib::DataSink& sink) {
                  std::vector<session::Event> events;
                  try {
                    events = svc.events_since(id, *next, kStreamPoll);
                  } catch (const Error&) {
                    sink.done();
                    return true;
                  }
                  for (const auto& e : events) {
                    const std::string frame = "id: " + std::to_string(e.seq) + "\nevent: " +
                                              std::string(session::to_string(e.kind)) + "\ndata: " +
                                              json{{"event", session::to_json(e)}}.dump() + "\n\n";
                    if (!sink.write(frame.data(), frame.size())) return false;
                    *next = e.seq + 1;
                    if (e.kind == session::EventKind::close) {
                      sink.done();
                      return true;
                    }
                  }
                  if (events.empty()) {
                    static constexpr std::string_view kPing = ": ping\n\n";
                    if (!sink.write(kPing.data(), kPing.size())) return false;
                  }
                  return true;
                });
          }));

  srv.Get(R"(/clients/([^/]+)/profile)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, json(svc.client_history(req.matches[1])));
          }));
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error(Errc::validation_error, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ApiServer::listen() { server_->listen_after_bind(); }

void ApiServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace a2p2::http
