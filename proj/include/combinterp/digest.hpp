#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace combinterp {

/// Hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view data);

/// Compact dump with sorted keys; invalid UTF-8 is replaced, never thrown.
std::string canonical_dump(const nlohmann::json& value);

/// Stable key for one backend call: SHA-256 over the operation name and the
/// canonical inputs.
std::string call_digest(std::string_view op, const nlohmann::json& inputs);

}  // namespace combinterp
