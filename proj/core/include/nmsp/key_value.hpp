#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nmsp {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// `key = value` lines; blank lines and `#` comments are skipped. Keys have
// '_' normalised to '-'. `origin` prefixes error messages.
KeyValues parse_key_values(std::string_view text, std::string_view origin);

std::string format_double(double value);  // round-trippable
double parse_double(std::string_view text, std::string_view key);
std::size_t parse_size(std::string_view text, std::string_view key);
std::uint64_t parse_u64(std::string_view text, std::string_view key);
bool parse_bool(std::string_view text, std::string_view key);  // on/off, true/false, 1/0, yes/no

}  // namespace nmsp
