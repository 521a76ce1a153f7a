#pragma once

// RFC 3492 encoder, used to bring Unicode suffix rules into the xn-- form
// that parsed hosts use.

#include <optional>
#include <string>
#include <string_view>

namespace nophish::punycode {

/// Encodes one UTF-8 label (without the "xn--" prefix). nullopt on bad UTF-8.
std::optional<std::string> encode_label(std::string_view label);

/// Applies encode_label to every non-ASCII label of a dotted name.
std::optional<std::string> to_ascii(std::string_view domain);

}  // namespace nophish::punycode
