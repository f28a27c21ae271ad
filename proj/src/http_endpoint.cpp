#include "a2p2/http_endpoint.hpp"

#include <httplib.h>

#include <thread>

#include "a2p2/error.hpp"

namespace a2p2::http {

using nlohmann::json;

namespace {

Errc errc_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(Errc::no_data); ++i) {
    const auto code = static_cast<Errc>(i);
    if (to_string(code) == name) return code;
  }
  return Errc::protocol_error;
}

json unwrap(const httplib::Result& res, const std::string& base, const std::string& path) {
  if (!res) {
    throw Error(Errc::timeout, "no response from " + base + path + ": " + httplib::to_string(res.error()), base);
  }
  json body;
  try {
    body = res->body.empty() ? json::object() : json::parse(res->body);
  } catch (const json::exception&) {
    throw Error(Errc::protocol_error, "non-JSON reply from " + path + " (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status >= 400) {
    throw Error(errc_from_name(body.value("error", std::string())), body.value("message", std::string("HTTP error")),
                body.value("detail", std::string()));
  }
  return body;
}

}  // namespace

HttpEndpoint::HttpEndpoint(const std::string& base_url, std::chrono::milliseconds connect_timeout)
    : base_url_(base_url), client_(std::make_unique<httplib::Client>(base_url)) {
  if (!client_->is_valid()) throw Error(Errc::validation_error, "bad endpoint URL '" + base_url + "'", base_url);
  client_->set_connection_timeout(connect_timeout);
  client_->set_read_timeout(std::chrono::seconds{40});
}

HttpEndpoint::~HttpEndpoint() = default;

json HttpEndpoint::get(const std::string& path) { return unwrap(client_->Get(path), base_url_, path); }

json HttpEndpoint::post(const std::string& path, const json& body) {
  return unwrap(client_->Post(path, body.dump(), "application/json"), base_url_, path);
}

std::string HttpEndpoint::create_session(const json& request) {
  return post("/sessions", request).at("session_id").get<std::string>();
}

json HttpEndpoint::post_client_message(const std::string& id, const std::string& text) {
  return post("/sessions/" + id + "/client-message", json{{"text", text}});
}

json HttpEndpoint::get_suggestions(const std::string& id, const std::string& step) {
  return get("/sessions/" + id + "/suggestions?step=" + httplib::detail::encode_query_param(step));
}

json HttpEndpoint::present_goals(const std::string& id) { return get("/sessions/" + id + "/goals"); }

json HttpEndpoint::post_provider_message(const std::string& id, const json& message) {
  return post("/sessions/" + id + "/provider-message", message);
}

json HttpEndpoint::state(const std::string& id) { return get("/sessions/" + id + "/state"); }

std::vector<session::Event> HttpEndpoint::events_since(const std::string& id, std::uint64_t since,
                                                       std::chrono::milliseconds wait) {
  const json body = get("/sessions/" + id + "/events?since=" + std::to_string(since) +
                        "&wait_ms=" + std::to_string(wait.count()));
  std::vector<session::Event> out;
  for (const auto& e : body.at("events")) out.push_back(session::event_from_json(e));
  return out;
}

void HttpEndpoint::close_session(const std::string& id) { post("/sessions/" + id + "/close", json::object()); }

void HttpEndpoint::elapse(std::chrono::milliseconds ms) { std::this_thread::sleep_for(ms); }

}  // namespace a2p2::http
