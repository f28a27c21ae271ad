#pragma once

// JSON-over-HTTP front of SessionService. Routes:
//   POST /sessions                              {profile, condition, seed, session_number?, metadata?}
//   POST /sessions/{id}/client-message          {text}
//   GET  /sessions/{id}/suggestions?step=K
//   GET  /sessions/{id}/goals
//   POST /sessions/{id}/provider-message        {text, suggestion_id?, goal_ids?, solution_ids?}
//   POST /sessions/{id}/step                    {step, action: select|complete}
//   POST /sessions/{id}/close
//   GET  /sessions/{id}/metrics
//   GET  /sessions/{id}/state
//   GET  /sessions/{id}/events?since=N&wait_ms=W
//   GET  /sessions/{id}/stream?since=N          server-sent events, one {event} frame each
//   GET  /clients/{id}/profile
// Errors come back as {error, message, detail} with 404 for unknown ids, 409
// for closed sessions and 400 otherwise.

#include <memory>
#include <string>

#include "a2p2/error.hpp"
#include "a2p2/session.hpp"

namespace httplib {
class Server;
}

namespace a2p2::http {

int status_for(Errc code) noexcept;

class ApiServer {
 public:
  explicit ApiServer(session::SessionService& service);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Returns the bound port (useful with port 0). Error(validation_error) if
  // the socket cannot be bound.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  session::SessionService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace a2p2::http
