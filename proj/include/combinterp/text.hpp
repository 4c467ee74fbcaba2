#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace combinterp::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize(std::string_view s);

/// Split on ASCII whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Replace `{key}` placeholders in one left-to-right pass. Inserted values are
/// never rescanned. Unknown placeholders are left untouched.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace combinterp::text
