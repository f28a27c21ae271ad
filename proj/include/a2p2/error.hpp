#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace a2p2 {

enum class Errc {
  parse_error,
  validation_error,
  unknown_node,
  kind_mismatch,
  unknown_step,
  unknown_action,
  missing_slot,
  unknown_session,
  session_closed,
  unknown_goal,
  no_turns,
  timeout,
  protocol_error,
  incomplete_record,
  domain_error,
  empty_sample,
  degenerate_table,
  zero_variance,
  bad_item_count,
  out_of_range,
  no_data,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for every module; the code says which contract was
// violated and `detail` carries the offending key (slot name, node id, ...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string detail = {});

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace a2p2
