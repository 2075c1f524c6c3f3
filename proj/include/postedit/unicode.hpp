#pragma once

#include <string>
#include <string_view>

// Thin wrappers over ICU. All offsets in this project are code-point indices
// into NFC text, so everything passes through these helpers.
namespace postedit::unicode {

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

std::string nfc(std::string_view utf8);
std::string fold_case(std::string_view utf8);

bool is_space(char32_t c);
bool is_punct(char32_t c);

// Number of code points in a UTF-8 string.
std::size_t length(std::string_view utf8);

// Collapse whitespace runs to one ASCII space and trim both ends.
std::string normalize_whitespace(std::string_view utf8);

}  // namespace postedit::unicode
