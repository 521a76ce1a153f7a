#include "nophish/url.hpp"

#include "nophish/error.hpp"
#include "text.hpp"

namespace nophish {

namespace {

bool is_scheme_char(char c, bool first) {
  const bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  if (first) return alpha;
  return alpha || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
}

// Length of a leading "scheme:" (excluding the colon), or 0.
std::size_t scheme_length(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ':') return i;
    if (!is_scheme_char(s[i], i == 0)) return 0;
  }
  return 0;
}

bool valid_host_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 0x80) return true;  // IDN bytes; left for the suffix matcher
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '~' ||
         c == '%' || c == '!' || c == '$' || c == '&' || c == '\'' || c == '(' || c == ')' || c == '*' ||
         c == '+' || c == ',' || c == ';' || c == '=';
}

bool is_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool is_numeric_ipv4_part(std::string_view part) {
  if (part.empty()) return false;
  if (part.size() > 2 && part[0] == '0' && (part[1] == 'x' || part[1] == 'X')) {
    for (char c : part.substr(2)) {
      if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
  }
  if (part == "0x" || part == "0X") return true;
  return is_digits(part);
}

std::string strip_tabs_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '\t' && c != '\n' && c != '\r') out.push_back(c);
  }
  return out;
}

}  // namespace

std::string Url::normalized() const {
  std::string out = scheme + "://" + host;
  if (port) out += ":" + std::to_string(*port);
  out += path.empty() ? "/" : path;
  if (!query.empty()) out += "?" + query;
  return out;
}

bool is_ip_literal(std::string_view host) {
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') return true;
  if (host.empty()) return false;
  if (host.back() == '.') host.remove_suffix(1);
  const auto parts = text::split(host, '.');
  if (parts.size() > 4) return false;
  for (auto part : parts) {
    if (!is_numeric_ipv4_part(part)) return false;
  }
  return true;
}

std::optional<Url> parse_url(std::string_view input) {
  const auto trimmed = text::trim(input);
  if (trimmed.empty()) return std::nullopt;
  for (char c : trimmed) {
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) return std::nullopt;
  }

  Url url;
  url.text = std::string(input);
  std::string_view rest = trimmed;

  const auto scheme_len = scheme_length(rest);
  if (scheme_len > 0 && rest.substr(scheme_len, 3) == "://") {
    url.scheme = text::to_lower(rest.substr(0, scheme_len));
    rest.remove_prefix(scheme_len + 3);
  } else if (rest.substr(0, 2) == "//") {
    url.scheme = "http";
    rest.remove_prefix(2);
  } else {
    url.scheme = "http";
  }

  const auto authority_end = rest.find_first_of("/?#\\");
  std::string_view authority = rest.substr(0, authority_end);
  rest = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);

  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    url.userinfo = std::string(authority.substr(0, at));
    authority.remove_prefix(at + 1);
  }

  std::string_view host_part = authority;
  std::string_view port_part;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host_part = authority.substr(0, close + 1);
    const auto after = authority.substr(close + 1);
    if (!after.empty()) {
      if (after.front() != ':') return std::nullopt;
      port_part = after.substr(1);
    }
  } else if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host_part = authority.substr(0, colon);
    port_part = authority.substr(colon + 1);
  }
  if (!port_part.empty()) {
    const auto port = text::parse_number<unsigned>(port_part);
    if (!port || *port > 65535 || !is_digits(port_part)) return std::nullopt;
    url.port = static_cast<std::uint16_t>(*port);
  }

  url.host = text::to_lower(host_part);
  while (!url.host.empty() && url.host.back() == '.') url.host.pop_back();
  if (url.host.empty()) return std::nullopt;
  if (url.host.front() != '[') {
    if (url.host.front() == '.' || url.host.find("..") != std::string::npos) return std::nullopt;
    for (char c : url.host) {
      if (!valid_host_char(c)) return std::nullopt;
    }
  }

  std::string tail(rest);
  for (auto& c : tail) {
    if (c == '\\') c = '/';
    else if (c == '#' || c == '?') break;
  }
  std::string_view tv = tail;
  if (const auto hash = tv.find('#'); hash != std::string_view::npos) {
    url.fragment = std::string(tv.substr(hash + 1));
    tv = tv.substr(0, hash);
  }
  if (const auto q = tv.find('?'); q != std::string_view::npos) {
    url.query = std::string(tv.substr(q + 1));
    tv = tv.substr(0, q);
  }
  url.path = std::string(tv);
  return url;
}

Url require_url(std::string_view input) {
  auto url = parse_url(input);
  if (!url) throw InvalidUrl("cannot parse URL '" + std::string(input) + "'");
  if (!url->is_http()) throw InvalidUrl("unsupported scheme '" + url->scheme + "' (need http or https)");
  return *std::move(url);
}

std::optional<Url> resolve_reference(const Url& base, std::string_view reference) {
  const std::string ref = strip_tabs_newlines(text::trim(reference));
  if (ref.empty()) return base;

  if (ref.size() >= 2 && (ref[0] == '/' || ref[0] == '\\') && (ref[1] == '/' || ref[1] == '\\')) {
    return parse_url(base.scheme + ":" + ref);
  }
  if (const auto len = scheme_length(ref); len > 0) {
    const auto scheme = text::to_lower(std::string_view(ref).substr(0, len));
    if (scheme == "http" || scheme == "https") {
      if (std::string_view(ref).substr(len, 3) == "://") return parse_url(ref);
      // "http:page.html" is relative to the base in browsers.
      return resolve_reference(base, std::string_view(ref).substr(len + 1));
    }
    Url opaque;
    opaque.text = ref;
    opaque.scheme = scheme;
    opaque.path = ref.substr(len + 1);
    return opaque;
  }

  Url out = base;
  out.text = ref;
  out.fragment.clear();
  if (ref.front() == '#') {
    out.fragment = ref.substr(1);
    return out;
  }
  std::string_view rv = ref;
  if (const auto hash = rv.find('#'); hash != std::string_view::npos) {
    out.fragment = std::string(rv.substr(hash + 1));
    rv = rv.substr(0, hash);
  }
  if (rv.front() == '?') {
    out.query = std::string(rv.substr(1));
    return out;
  }
  out.query.clear();
  if (const auto q = rv.find('?'); q != std::string_view::npos) {
    out.query = std::string(rv.substr(q + 1));
    rv = rv.substr(0, q);
  }
  if (rv.front() == '/') {
    out.path = std::string(rv);
  } else {
    const auto slash = base.path.rfind('/');
    const std::string dir = slash == std::string::npos ? "/" : base.path.substr(0, slash + 1);
    out.path = dir + std::string(rv);
  }
  return out;
}

}  // namespace nophish
