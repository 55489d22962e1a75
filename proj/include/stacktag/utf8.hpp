#pragma once

#include <string>
#include <string_view>

// Offsets throughout the library count Unicode scalar values. Text is kept
// as UTF-8 at the API boundary and decoded to UTF-32 wherever indexing is
// needed.
namespace stacktag::utf8 {

// Invalid byte sequences decode to U+FFFD, one per offending byte.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view chars);
std::string encode(char32_t c);

// Number of scalar values in a UTF-8 string.
std::size_t length(std::string_view bytes);

bool is_alnum(char32_t c);
bool is_space(char32_t c);
bool is_upper(char32_t c);
char32_t to_lower(char32_t c);
std::u32string to_lower(std::u32string_view s);

}  // namespace stacktag::utf8
