#pragma once

// SessionEndpoint over the HTTP API. Connection failures surface as
// Error(timeout); API errors are rethrown with their original code.

#include <memory>
#include <string>

#include "a2p2/patientsim.hpp"

namespace httplib {
class Client;
}

namespace a2p2::http {

class HttpEndpoint final : public patientsim::SessionEndpoint {
 public:
  // `base_url` like "http://127.0.0.1:8080".
  explicit HttpEndpoint(const std::string& base_url,
                        std::chrono::milliseconds connect_timeout = std::chrono::milliseconds{2000});
  ~HttpEndpoint() override;

  std::string create_session(const nlohmann::json& request) override;
  nlohmann::json post_client_message(const std::string& id, const std::string& text) override;
  nlohmann::json get_suggestions(const std::string& id, const std::string& step) override;
  nlohmann::json present_goals(const std::string& id) override;
  nlohmann::json post_provider_message(const std::string& id, const nlohmann::json& message) override;
  nlohmann::json state(const std::string& id) override;
  std::vector<session::Event> events_since(const std::string& id, std::uint64_t since,
                                           std::chrono::milliseconds wait) override;
  void close_session(const std::string& id) override;
  void elapse(std::chrono::milliseconds ms) override;  // sleeps

 private:
  nlohmann::json get(const std::string& path);
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  std::string base_url_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace a2p2::http
