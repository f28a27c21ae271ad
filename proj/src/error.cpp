#include "a2p2/error.hpp"

namespace a2p2 {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parse_error: return "ParseError";
    case Errc::validation_error: return "ValidationError";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::kind_mismatch: return "KindMismatch";
    case Errc::unknown_step: return "UnknownStep";
    case Errc::unknown_action: return "UnknownAction";
    case Errc::missing_slot: return "MissingSlot";
    case Errc::unknown_session: return "UnknownSession";
    case Errc::session_closed: return "SessionClosed";
    case Errc::unknown_goal: return "UnknownGoal";
    case Errc::no_turns: return "NoTurns";
    case Errc::timeout: return "Timeout";
    case Errc::protocol_error: return "ProtocolError";
    case Errc::incomplete_record: return "IncompleteRecord";
    case Errc::domain_error: return "DomainError";
    case Errc::empty_sample: return "EmptySample";
    case Errc::degenerate_table: return "DegenerateTable";
    case Errc::zero_variance: return "ZeroVariance";
    case Errc::bad_item_count: return "BadItemCount";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::no_data: return "NoData";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace a2p2
