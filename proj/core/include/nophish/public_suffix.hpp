#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_set>

namespace nophish {

/// Public-suffix matcher over the publicsuffix.org list format: plain rules,
/// `*.` wildcard rules and `!` exception rules. Unicode rules are stored in
/// punycode so they match hosts as they appear in URLs. Hosts matching no rule
/// fall back to the implicit `*` rule (the last label is the suffix).
class PublicSuffixList {
 public:
  static PublicSuffixList parse(std::istream& in);
  static PublicSuffixList load(const std::filesystem::path& path);
  static PublicSuffixList from_rules(std::string_view rules);

  /// The public suffix of `host` (a suffix of the input). Empty for IP literals.
  std::string_view public_suffix(std::string_view host) const;

  /// Suffix plus one label ("mail.example.co.uk" -> "example.co.uk"). IP
  /// literals, and hosts that are themselves a public suffix, return the host.
  std::string registered_domain(std::string_view host) const;

  /// Labels to the left of the public suffix ("a.b.example.com" -> 3).
  std::size_t labels_before_suffix(std::string_view host) const;

  bool same_registered_domain(std::string_view host_a, std::string_view host_b) const;

  std::size_t rule_count() const noexcept { return exact_.size() + wildcard_.size() + exception_.size(); }

 private:
  void add_rule(std::string_view rule);

  std::unordered_set<std::string> exact_;
  std::unordered_set<std::string> wildcard_;   // stored without the "*."
  std::unordered_set<std::string> exception_;  // stored without the "!"
};

}  // namespace nophish
