#include "postedit/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "postedit/error.hpp"

namespace postedit::unicode {

std::u32string to_u32(std::string_view utf8) {
  const auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  std::u32string out(static_cast<std::size_t>(us.countChar32()), U'\0');
  UErrorCode status = U_ZERO_ERROR;
  us.toUTF32(reinterpret_cast<UChar32*>(out.data()), static_cast<int32_t>(out.size()), status);
  if (U_FAILURE(status) && status != U_STRING_NOT_TERMINATED_WARNING) {
    throw Error(ErrorCode::MalformedInput, "invalid UTF-8 input");
  }
  return out;
}

std::string to_utf8(std::u32string_view text) {
  const auto us = icu::UnicodeString::fromUTF32(reinterpret_cast<const UChar32*>(text.data()),
                                                static_cast<int32_t>(text.size()));
  std::string out;
  us.toUTF8String(out);
  return out;
}

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::MalformedInput, "ICU NFC normalizer unavailable");
  const auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  const icu::UnicodeString normalized = norm->normalize(us, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::MalformedInput, "NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string fold_case(std::string_view utf8) {
  auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  us.foldCase();
  std::string out;
  us.toUTF8String(out);
  return out;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)) != 0; }

std::size_t length(std::string_view utf8) {
  const auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  return static_cast<std::size_t>(us.countChar32());
}

std::string normalize_whitespace(std::string_view utf8) {
  const std::u32string text = to_u32(utf8);
  std::u32string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return to_utf8(out);
}

}  // namespace postedit::unicode
