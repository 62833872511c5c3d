#pragma once

#include <string>

#include <json.hpp>

namespace stepfill::detail {

// Compact, deterministic rendering; invalid UTF-8 is replaced rather than thrown on.
inline std::string dump(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace stepfill::detail
