#include <array>
#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "nophish/probe.hpp"
#include "text.hpp"

namespace nophish {

namespace {

constexpr std::array<std::string_view, 10> kNoMatchMarkers{
    "no match for", "not found", "no data found", "no entries found", "domain not found",
    "status: free", "status: available", "is available for registration", "no object found", "object does not exist",
};

constexpr std::array<std::string_view, 12> kCreatedKeys{
    "creation date", "created", "created on", "created date", "registered on", "registration time",
    "domain registration date", "registered", "domain create date", "registration date", "record created",
    "domain name commencement date",
};

constexpr std::array<std::string_view, 10> kExpiryKeys{
    "registry expiry date", "registrar registration expiration date", "expiration date", "expiry date", "expires",
    "expires on", "paid-till", "renewal date", "domain expiration date", "expiration time",
};

constexpr std::array<std::string_view, 8> kRegistrarKeys{
    "registrar", "sponsoring registrar", "registrar name", "registrar organization",
    "registrar iana id", "registrar url", "reseller", "registration service provider",
};

constexpr std::array<std::string_view, 8> kIdentityKeys{
    "registrant organization", "registrant name", "registrant email", "registrant",
    "registrant contact email", "registrant organisation", "org", "registrant contact organisation",
};

constexpr std::array<std::string_view, 10> kRedactionMarkers{
    "redacted", "privacy", "data protected", "not disclosed", "withheld", "gdpr",
    "proxy", "masked", "contact privacy", "statutory masking",
};

template <std::size_t N>
bool key_in(std::string_view key, const std::array<std::string_view, N>& keys) {
  for (auto k : keys) {
    if (key == k) return true;
  }
  return false;
}

int month_from_name(std::string_view s) {
  static constexpr std::array<std::string_view, 12> names{"jan", "feb", "mar", "apr", "may", "jun",
                                                          "jul", "aug", "sep", "oct", "nov", "dec"};
  if (s.size() < 3) return 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (text::iequals(s.substr(0, 3), names[i])) return static_cast<int>(i) + 1;
  }
  return 0;
}

std::optional<Date> make_date(int y, int m, int d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

// Accepts 2023-01-31, 2023.01.31, 2023/01/31 (optionally followed by a time),
// 31-Jan-2023, 31 Jan 2023, 31.01.2023 and 20230131.
std::optional<Date> parse_whois_date(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    const bool sep = i == s.size() || s[i] == '-' || s[i] == '.' || s[i] == '/' || s[i] == ' ' || s[i] == 'T';
    if (!sep) continue;
    if (i > start) parts.push_back(s.substr(start, i - start));
    start = i + 1;
    if (parts.size() == 3) break;
  }
  if (parts.size() == 1 && parts[0].size() == 8) {
    const auto y = text::parse_number<int>(parts[0].substr(0, 4));
    const auto m = text::parse_number<int>(parts[0].substr(4, 2));
    const auto d = text::parse_number<int>(parts[0].substr(6, 2));
    if (y && m && d) return make_date(*y, *m, *d);
    return std::nullopt;
  }
  if (parts.size() < 3) return std::nullopt;
  const auto a = text::parse_number<int>(parts[0]);
  const auto c = text::parse_number<int>(parts[2].substr(0, std::min<std::size_t>(parts[2].size(), 4)));
  if (!a || !c) return std::nullopt;
  int month = 0;
  if (const auto b = text::parse_number<int>(parts[1])) {
    month = *b;
  } else {
    month = month_from_name(parts[1]);
  }
  if (month == 0) return std::nullopt;
  if (parts[0].size() == 4) return make_date(*a, month, *c);
  if (parts[2].size() >= 4) return make_date(*c, month, *a);
  return std::nullopt;
}

std::string alnum_lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    const char l = text::lower(c);
    if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9')) out.push_back(l);
  }
  return out;
}

bool is_redacted(std::string_view value) {
  for (auto marker : kRedactionMarkers) {
    if (text::icontains(value, marker)) return true;
  }
  return false;
}

}  // namespace

WhoisRecord parse_whois(std::string_view whois_text, std::string_view registered_domain) {
  WhoisRecord record;
  record.registrar_found = true;

  bool any_field = false;
  std::vector<std::string> identities;
  for (auto raw_line : text::split(whois_text, '\n')) {
    const auto line = text::trim(raw_line);
    if (line.empty() || line.front() == '%' || line.front() == '#' || line.starts_with(">>>")) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      for (auto marker : kNoMatchMarkers) {
        if (text::icontains(line, marker)) record.registrar_found = false;
      }
      continue;
    }
    const std::string key = text::to_lower(text::trim(line.substr(0, colon)));
    const auto value = text::trim(line.substr(colon + 1));
    if (key_in(key, kCreatedKeys)) {
      any_field = true;
      if (!record.created) record.created = parse_whois_date(value);
    } else if (key_in(key, kExpiryKeys)) {
      any_field = true;
      if (!record.expires) record.expires = parse_whois_date(value);
    } else if (key_in(key, kRegistrarKeys) || key == "domain name" || key == "domain") {
      any_field = true;
    } else if (key_in(key, kIdentityKeys)) {
      if (!value.empty()) identities.emplace_back(value);
    } else {
      for (auto marker : kNoMatchMarkers) {
        if (text::icontains(line, marker)) record.registrar_found = false;
      }
    }
  }
  if (any_field) record.registrar_found = true;
  if (!record.registrar_found) {
    record.created.reset();
    record.expires.reset();
    return record;
  }

  // Registrant identity: the registered domain's leading label (or the whole
  // domain for e-mail addresses) must appear in a non-redacted identity field.
  const auto dot = registered_domain.find('.');
  const std::string stem = alnum_lower(registered_domain.substr(0, dot));
  bool saw_identity = false;
  for (const auto& value : identities) {
    if (is_redacted(value)) continue;
    saw_identity = true;
    const auto at = value.find('@');
    if (at != std::string::npos) {
      const std::string mail_domain = text::to_lower(text::trim(std::string_view(value).substr(at + 1)));
      if (mail_domain == registered_domain ||
          (mail_domain.size() > registered_domain.size() && mail_domain.ends_with(registered_domain) &&
           mail_domain[mail_domain.size() - registered_domain.size() - 1] == '.')) {
        record.registrant_host_matches = true;
        return record;
      }
      continue;
    }
    if (!stem.empty() && alnum_lower(value).find(stem) != std::string::npos) {
      record.registrant_host_matches = true;
      return record;
    }
  }
  if (saw_identity) record.registrant_host_matches = false;
  return record;
}

}  // namespace nophish
