#include "nophish/public_suffix.hpp"

#include <fstream>
#include <istream>
#include <sstream>

#include "nophish/error.hpp"
#include "nophish/url.hpp"
#include "punycode.hpp"
#include "text.hpp"

namespace nophish {

namespace {

std::string_view parent_of(std::string_view name) {
  const auto dot = name.find('.');
  return dot == std::string_view::npos ? std::string_view{} : name.substr(dot + 1);
}

std::string_view strip_trailing_dot(std::string_view host) {
  while (!host.empty() && host.back() == '.') host.remove_suffix(1);
  return host;
}

}  // namespace

void PublicSuffixList::add_rule(std::string_view rule) {
  rule = text::trim(rule);
  // Rules end at the first whitespace.
  if (const auto ws = rule.find_first_of(" \t"); ws != std::string_view::npos) rule = rule.substr(0, ws);
  if (rule.empty() || rule.substr(0, 2) == "//") return;

  bool exception = false;
  bool wildcard = false;
  if (rule.front() == '!') {
    exception = true;
    rule.remove_prefix(1);
  } else if (rule.substr(0, 2) == "*.") {
    wildcard = true;
    rule.remove_prefix(2);
  }
  auto ascii = punycode::to_ascii(text::to_lower(rule));
  if (!ascii || ascii->empty()) return;
  if (exception) {
    exception_.insert(std::move(*ascii));
  } else if (wildcard) {
    wildcard_.insert(std::move(*ascii));
  } else {
    exact_.insert(std::move(*ascii));
  }
}

PublicSuffixList PublicSuffixList::parse(std::istream& in) {
  PublicSuffixList list;
  std::string line;
  while (std::getline(in, line)) list.add_rule(line);
  return list;
}

PublicSuffixList PublicSuffixList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open public suffix list " + path.string());
  auto list = parse(in);
  if (list.rule_count() == 0) throw ConfigError("public suffix list " + path.string() + " has no rules");
  return list;
}

PublicSuffixList PublicSuffixList::from_rules(std::string_view rules) {
  std::istringstream in{std::string(rules)};
  return parse(in);
}

std::string_view PublicSuffixList::public_suffix(std::string_view host) const {
  host = strip_trailing_dot(host);
  if (host.empty() || is_ip_literal(host)) return {};
  std::string key;
  for (std::string_view candidate = host; !candidate.empty(); candidate = parent_of(candidate)) {
    key.assign(candidate);
    if (exception_.count(key)) return parent_of(candidate);
    if (exact_.count(key)) return candidate;
    const auto parent = parent_of(candidate);
    if (!parent.empty() && wildcard_.count(std::string(parent))) return candidate;
  }
  const auto dot = host.rfind('.');
  return dot == std::string_view::npos ? host : host.substr(dot + 1);
}

std::string PublicSuffixList::registered_domain(std::string_view host) const {
  host = strip_trailing_dot(host);
  const auto suffix = public_suffix(host);
  if (suffix.empty() || suffix.size() >= host.size()) return std::string(host);
  // host = prefix + "." + suffix
  const auto prefix = host.substr(0, host.size() - suffix.size() - 1);
  const auto dot = prefix.rfind('.');
  return std::string(dot == std::string_view::npos ? host : host.substr(dot + 1));
}

std::size_t PublicSuffixList::labels_before_suffix(std::string_view host) const {
  host = strip_trailing_dot(host);
  const auto suffix = public_suffix(host);
  if (suffix.empty()) return 0;
  if (suffix.size() >= host.size()) return 0;
  const auto prefix = host.substr(0, host.size() - suffix.size() - 1);
  std::size_t labels = 1;
  for (char c : prefix) labels += c == '.' ? 1 : 0;
  return labels;
}

bool PublicSuffixList::same_registered_domain(std::string_view host_a, std::string_view host_b) const {
  return registered_domain(text::to_lower(host_a)) == registered_domain(text::to_lower(host_b));
}

}  // namespace nophish
