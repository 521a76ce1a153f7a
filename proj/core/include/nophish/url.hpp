#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nophish {

/// A parsed absolute URL. `host` is lower-cased; IPv6 literals keep their
/// brackets. `text` is the input exactly as given (feature rules such as URL
/// length and '@' inspect the raw string, not a normalized form).
struct Url {
  std::string text;
  std::string scheme;
  std::string userinfo;
  std::string host;
  std::optional<std::uint16_t> port;
  std::string path;
  std::string query;
  std::string fragment;

  bool is_http() const noexcept { return scheme == "http" || scheme == "https"; }
  /// scheme://host[:port]/path?query, without userinfo and fragment.
  std::string normalized() const;
};

/// Parses an absolute URL. A missing scheme ("example.com/x") is read as http.
/// Returns nullopt when the authority is empty or malformed.
std::optional<Url> parse_url(std::string_view input);

/// As parse_url, but throws InvalidUrl.
Url require_url(std::string_view input);

/// Resolves a reference found in a page (href/src/action) against the page
/// URL. Non-hierarchical references (javascript:, mailto:, data:) resolve to a
/// Url with that scheme and an empty host.
std::optional<Url> resolve_reference(const Url& base, std::string_view reference);

/// Dotted-quad (decimal, octal or hex parts), a single 32-bit integer, or a
/// bracketed IPv6 literal.
bool is_ip_literal(std::string_view host);

}  // namespace nophish
