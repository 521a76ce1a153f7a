#include "nophish/features.hpp"

#include <cstdio>
#include <fstream>
#include <istream>

#include "nophish/config.hpp"
#include "nophish/error.hpp"
#include "nophish/html.hpp"
#include "text.hpp"

namespace nophish {

namespace {

constexpr Ternary kFail = -1;
constexpr Ternary kSuspicious = 0;
constexpr Ternary kPass = 1;

std::string_view strip_www(std::string_view host) {
  if (host.size() > 4 && host.substr(0, 4) == "www.") host.remove_prefix(4);
  return host;
}

// True when `target` is an http(s) URL on a different registered domain.
bool is_external(const std::optional<Url>& target, const Url& page, const PublicSuffixList& psl) {
  if (!target || !target->is_http() || target->host.empty()) return false;
  return !psl.same_registered_domain(target->host, page.host);
}

// mail( as a whole word, e.g. PHP mail() or a JS helper named mail.
bool has_mail_function(std::string_view html) {
  for (std::size_t pos = 0; (pos = html.find_first_of("mM", pos)) != std::string_view::npos; ++pos) {
    if (!text::istarts_with(html.substr(pos), "mail")) continue;
    if (pos > 0) {
      const char before = html[pos - 1];
      if (std::isalnum(static_cast<unsigned char>(before)) || before == '_' || before == '$') continue;
    }
    std::size_t after = pos + 4;
    while (after < html.size() && (html[after] == ' ' || html[after] == '\t')) ++after;
    if (after < html.size() && html[after] == '(') return true;
  }
  return false;
}

std::string squeeze_lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!text::is_space(c)) out.push_back(text::lower(c));
  }
  return out;
}

bool zero_dimension(std::optional<std::string_view> v) {
  if (!v) return false;
  const auto t = text::trim(*v);
  return t == "0" || t == "0px";
}

bool iframe_is_invisible(const HtmlElement& el) {
  if (const auto border = el.attr("frameborder")) {
    const auto b = text::trim(*border);
    if (b == "0" || text::iequals(b, "no")) return true;
  }
  if (zero_dimension(el.attr("width")) || zero_dimension(el.attr("height"))) return true;
  if (const auto style = el.attr("style")) {
    const auto s = squeeze_lower(*style);
    for (std::string_view marker : {"border:0", "border:none", "display:none", "visibility:hidden", "border-width:0"}) {
      if (s.find(marker) != std::string::npos) return true;
    }
  }
  return false;
}

// URL carried by a <meta> tag: refresh targets and URL-valued content.
std::optional<std::string> meta_url(const HtmlElement& el) {
  const auto content = el.attr("content");
  if (!content) return std::nullopt;
  const auto c = text::trim(*content);
  if (const auto equiv = el.attr("http-equiv"); equiv && text::iequals(text::trim(*equiv), "refresh")) {
    const auto lower = text::to_lower(c);
    const auto pos = lower.find("url=");
    if (pos == std::string::npos) return std::nullopt;
    auto target = text::trim(c.substr(pos + 4));
    if (!target.empty() && (target.front() == '\'' || target.front() == '"')) {
      target.remove_prefix(1);
      if (!target.empty() && (target.back() == '\'' || target.back() == '"')) target.remove_suffix(1);
    }
    return std::string(target);
  }
  if (text::istarts_with(c, "http://") || text::istarts_with(c, "https://") || c.substr(0, 2) == "//") {
    return std::string(c);
  }
  return std::nullopt;
}

bool has_rel_icon(std::string_view rel) {
  for (auto token : text::split(rel, ' ')) {
    if (text::iequals(text::trim(token), "icon")) return true;
  }
  return false;
}

bool anchor_is_unsafe(const HtmlElement& el, const Url& base, const Url& page, const PublicSuffixList& psl) {
  const auto href = el.attr("href");
  if (!href) return true;
  const auto h = text::trim(*href);
  if (h.empty() || h.front() == '#') return true;
  const auto target = resolve_reference(base, h);
  if (!target) return true;
  if (target->scheme == "javascript") return true;
  return is_external(target, page, psl);
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view s) {
  s = text::trim(s);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = text::parse_number<int>(s.substr(0, 4));
  const auto m = text::parse_number<unsigned>(s.substr(5, 2));
  const auto d = text::parse_number<unsigned>(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

PageArtifacts PageArtifacts::empty_for(const Url& url) {
  PageArtifacts page;
  page.final_url = url;
  return page;
}

std::string_view to_string(SlotSource source) noexcept {
  switch (source) {
    case SlotSource::url: return "url-derived";
    case SlotSource::content: return "content-derived";
    case SlotSource::external: return "external";
    case SlotSource::defaulted: return "defaulted";
  }
  return "unknown";
}

Thresholds Thresholds::parse(std::istream& in, std::string_view source) {
  Thresholds t;
  auto band = [&](const KeyValueEntry& e) {
    const auto parts = text::split(e.value, ',');
    if (parts.size() != 2) throw ParseError(source, e.line, e.key + " needs 'low, high'");
    const auto lo = text::parse_number<double>(parts[0]);
    const auto hi = text::parse_number<double>(parts[1]);
    if (!lo || !hi) throw ParseError(source, e.line, e.key + ": thresholds must be numbers");
    if (*lo > *hi) throw ConfigError(e.key + ": low threshold exceeds high threshold");
    return Band{*lo, *hi};
  };
  auto integer = [&](const KeyValueEntry& e) {
    const auto v = text::parse_number<long long>(e.value);
    if (!v || *v < 0) throw ParseError(source, e.line, e.key + " must be a non-negative integer");
    return *v;
  };
  for (const auto& e : parse_key_values(in, source)) {
    if (e.key == "version") {
      if (e.value != "1") throw ConfigError("unsupported thresholds version " + e.value);
    } else if (e.key == "url_length") {
      t.url_length = band(e);
    } else if (e.key == "request_url_ratio") {
      t.request_url = band(e);
    } else if (e.key == "anchor_ratio") {
      t.anchor = band(e);
    } else if (e.key == "meta_script_link_ratio") {
      t.meta_script_link = band(e);
    } else if (e.key == "traffic_rank") {
      t.traffic_rank_limit = static_cast<std::uint64_t>(integer(e));
    } else if (e.key == "registration_length") {
      t.registration_min_days = static_cast<int>(integer(e));
    } else if (e.key == "domain_age") {
      t.domain_min_age_days = static_cast<int>(integer(e));
    } else {
      throw ConfigError(std::string(source) + ":" + std::to_string(e.line) + ": unknown threshold '" + e.key + "'");
    }
  }
  return t;
}

Thresholds Thresholds::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return parse(in, path.string());
}

PageSummary summarize_page(const Url& page_url, std::string_view html, const PublicSuffixList& psl) {
  PageSummary s;
  const auto doc = parse_html(html);

  Url base = page_url;
  for (const auto& el : doc.elements) {
    if (el.name == "base") {
      if (const auto href = el.attr("href")) {
        if (auto resolved = resolve_reference(page_url, *href); resolved && resolved->is_http()) base = *resolved;
      }
      break;
    }
  }
  // Externality is always judged against the page's own domain.
  auto external = [&](std::string_view ref) {
    auto target = resolve_reference(base, ref);
    return is_external(target, page_url, psl);
  };

  for (const auto& el : doc.elements) {
    const auto& name = el.name;
    if (name == "img" || name == "video" || name == "audio" || name == "source" || name == "embed" ||
        name == "object") {
      const auto ref = name == "object" ? el.attr("data") : el.attr("src");
      if (!ref || text::trim(*ref).empty()) continue;
      ++s.objects;
      if (external(*ref)) ++s.external_objects;
    } else if (name == "a") {
      ++s.anchors;
      if (anchor_is_unsafe(el, base, page_url, psl)) ++s.unsafe_anchors;
    } else if (name == "script" || name == "link" || name == "meta") {
      std::optional<std::string> ref;
      if (name == "script") {
        if (const auto src = el.attr("src")) ref = std::string(*src);
      } else if (name == "link") {
        if (const auto href = el.attr("href")) ref = std::string(*href);
      } else {
        ref = meta_url(el);
      }
      if (name == "link") {
        if (const auto rel = el.attr("rel"); rel && has_rel_icon(*rel) && ref && external(*ref)) {
          s.favicon_external = true;
        }
      }
      if (!ref || text::trim(*ref).empty()) continue;
      ++s.tag_links;
      if (external(*ref)) ++s.external_tag_links;
    } else if (name == "form") {
      ++s.forms;
      const auto action = el.attr("action");
      if (!action) continue;  // no action: submits back to the page itself
      const auto a = text::trim(*action);
      if (a.empty() || text::iequals(a, "about:blank")) {
        s.form_action_blank = true;
      } else if (text::istarts_with(a, "mailto:")) {
        s.form_action_mailto = true;
      } else if (external(a)) {
        s.form_action_external = true;
      }
    } else if (name == "iframe" || name == "frame") {
      ++s.iframes;
      if (iframe_is_invisible(el)) s.invisible_iframe = true;
    }
  }
  s.mail_function_text = has_mail_function(html);
  return s;
}

namespace rules {

Ternary ip_in_host(const Url& url) { return is_ip_literal(url.host) ? kFail : kPass; }

Ternary band_value(double x, const Thresholds::Band& band) {
  if (x < band.low) return kPass;
  if (x <= band.high) return kSuspicious;
  return kFail;
}

Ternary url_length(std::string_view raw_url, const Thresholds::Band& band) {
  return band_value(static_cast<double>(text::trim(raw_url).size()), band);
}

Ternary shortener(const Url& url, const PublicSuffixList& psl, const std::unordered_set<std::string>& shorteners) {
  const std::string host(strip_www(url.host));
  if (shorteners.count(host) || shorteners.count(psl.registered_domain(host))) return kFail;
  return kPass;
}

Ternary at_symbol(std::string_view raw_url) { return raw_url.find('@') != std::string_view::npos ? kFail : kPass; }

Ternary double_slash_redirect(std::string_view raw_url) {
  const auto s = text::trim(raw_url);
  const auto last = s.rfind("//");
  if (last == std::string_view::npos) return kPass;
  const auto sep = s.find("://");
  if (sep == std::string_view::npos) return last == 0 ? kPass : kFail;
  return last > sep + 1 ? kFail : kPass;
}

Ternary dash_in_domain(const Url& url, const PublicSuffixList& psl) {
  if (is_ip_literal(url.host)) return kPass;
  return psl.registered_domain(url.host).find('-') != std::string::npos ? kFail : kPass;
}

Ternary subdomain_count(const Url& url, const PublicSuffixList& psl) {
  if (is_ip_literal(url.host)) return kPass;
  const auto labels = psl.labels_before_suffix(strip_www(url.host));
  if (labels <= 1) return kPass;
  if (labels == 2) return kSuspicious;
  return kFail;
}

Ternary https_token(const Url& url) { return text::icontains(url.host, "https") ? kFail : kPass; }

Ternary ratio_band(std::size_t numerator, std::size_t denominator, const Thresholds::Band& band) {
  if (denominator == 0) return kPass;
  return band_value(static_cast<double>(numerator) / static_cast<double>(denominator), band);
}

Ternary sfh(const PageSummary& page) {
  if (page.form_action_blank) return kFail;
  if (page.form_action_external) return kSuspicious;
  return kPass;
}

Ternary mail_submit(const PageSummary& page) {
  return page.form_action_mailto || page.mail_function_text ? kFail : kPass;
}

Ternary favicon(const PageSummary& page) { return page.favicon_external ? kFail : kPass; }

Ternary invisible_iframe(const PageSummary& page) { return page.invisible_iframe ? kFail : kPass; }

Ternary registration_length(const ExternalEvidence& ev, int min_days) {
  if (!ev.whois) return kSuspicious;
  if (!ev.whois->registrar_found) return kFail;
  if (!ev.whois->expires) return kSuspicious;
  const auto remaining = (*ev.whois->expires - ev.observed_on).count();
  return remaining <= min_days ? kFail : kPass;
}

Ternary abnormal_url(const ExternalEvidence& ev) {
  if (!ev.whois) return kSuspicious;
  if (!ev.whois->registrar_found) return kFail;
  if (!ev.whois->registrant_host_matches) return kSuspicious;
  return *ev.whois->registrant_host_matches ? kPass : kFail;
}

Ternary domain_age(const ExternalEvidence& ev, int min_days) {
  if (!ev.whois) return kSuspicious;
  if (!ev.whois->registrar_found) return kFail;
  if (!ev.whois->created) return kSuspicious;
  const auto age = (ev.observed_on - *ev.whois->created).count();
  return age >= min_days ? kPass : kFail;
}

Ternary dns_record(const ExternalEvidence& ev) {
  if (!ev.dns_resolved) return kSuspicious;
  return *ev.dns_resolved ? kPass : kFail;
}

Ternary traffic_rank(const ExternalEvidence& ev, std::uint64_t limit) {
  if (!ev.traffic_rank) return kSuspicious;
  if (!ev.traffic_rank->position) return kFail;
  return *ev.traffic_rank->position <= limit ? kPass : kSuspicious;
}

Ternary google_index(const ExternalEvidence& ev) {
  if (!ev.google_indexed) return kSuspicious;
  return *ev.google_indexed ? kPass : kFail;
}

Ternary report_listed(const ExternalEvidence& ev) {
  if (!ev.in_phish_reports) return kSuspicious;
  return *ev.in_phish_reports ? kFail : kPass;
}

}  // namespace rules

FeatureExtractor::FeatureExtractor(PublicSuffixList psl, std::unordered_set<std::string> shorteners,
                                   Thresholds thresholds)
    : psl_(std::move(psl)), shorteners_(std::move(shorteners)), thresholds_(thresholds) {}

FeatureExtractor FeatureExtractor::from_data_dir(const std::filesystem::path& dir) {
  auto psl = PublicSuffixList::load(dir / "public_suffix_list.dat");
  std::unordered_set<std::string> shorteners;
  for (auto& host : read_list_file(dir / "shorteners.txt")) shorteners.insert(text::to_lower(host));
  return FeatureExtractor(std::move(psl), std::move(shorteners), Thresholds::load(dir / "thresholds.conf"));
}

FeatureVector FeatureExtractor::extract_all(std::string_view url_text, const PageArtifacts& page,
                                            const ExternalEvidence& ev) const {
  const auto parsed = parse_url(url_text);
  if (!parsed) throw InvalidUrl("cannot parse URL '" + std::string(url_text) + "'");
  const Url& url = *parsed;

  FeatureVector fv;
  auto set = [&fv](std::size_t slot, Ternary value, SlotSource source) {
    fv.values[slot] = value;
    fv.provenance[slot] = source;
  };

  set(0, rules::ip_in_host(url), SlotSource::url);
  set(1, rules::url_length(url_text, thresholds_.url_length), SlotSource::url);
  set(2, rules::shortener(url, psl_, shorteners_), SlotSource::url);
  set(3, rules::at_symbol(url_text), SlotSource::url);
  set(4, rules::double_slash_redirect(url_text), SlotSource::url);
  set(5, rules::dash_in_domain(url, psl_), SlotSource::url);
  set(6, rules::subdomain_count(url, psl_), SlotSource::url);
  set(9, rules::https_token(url), SlotSource::url);

  if (page.status.ok()) {
    const Url& page_url = page.final_url.host.empty() ? url : page.final_url;
    const auto summary = summarize_page(page_url, page.raw_html, psl_);
    set(8, rules::favicon(summary), SlotSource::content);
    set(10, rules::ratio_band(summary.external_objects, summary.objects, thresholds_.request_url), SlotSource::content);
    set(11, rules::ratio_band(summary.unsafe_anchors, summary.anchors, thresholds_.anchor), SlotSource::content);
    set(12, rules::ratio_band(summary.external_tag_links, summary.tag_links, thresholds_.meta_script_link),
        SlotSource::content);
    set(13, rules::sfh(summary), SlotSource::content);
    set(14, rules::mail_submit(summary), SlotSource::content);
    set(16, rules::invisible_iframe(summary), SlotSource::content);
  } else {
    for (std::size_t slot : {8, 10, 11, 12, 13, 14, 16}) set(slot, 1, SlotSource::defaulted);
  }

  const bool whois_known = ev.whois.has_value();
  const bool whois_found = whois_known && ev.whois->registrar_found;
  auto external = [](bool known) { return known ? SlotSource::external : SlotSource::defaulted; };
  set(7, rules::registration_length(ev, thresholds_.registration_min_days),
      external(whois_known && (!whois_found || ev.whois->expires)));
  set(15, rules::abnormal_url(ev), external(whois_known && (!whois_found || ev.whois->registrant_host_matches)));
  set(17, rules::domain_age(ev, thresholds_.domain_min_age_days),
      external(whois_known && (!whois_found || ev.whois->created)));
  set(18, rules::dns_record(ev), external(ev.dns_resolved.has_value()));
  set(19, rules::traffic_rank(ev, thresholds_.traffic_rank_limit), external(ev.traffic_rank.has_value()));
  set(20, rules::google_index(ev), external(ev.google_indexed.has_value()));
  set(21, rules::report_listed(ev), external(ev.in_phish_reports.has_value()));
  return fv;
}

}  // namespace nophish
