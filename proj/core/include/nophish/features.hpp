#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nophish/feature_catalog.hpp"
#include "nophish/public_suffix.hpp"
#include "nophish/url.hpp"

namespace nophish {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD (optionally followed by a time part).
std::optional<Date> parse_iso_date(std::string_view s);
std::string format_date(Date d);

struct FetchStatus {
  enum class Kind { ok, timeout, error };
  Kind kind = Kind::ok;
  int http_status = 0;  // last HTTP status seen, 0 if none
  std::string reason;   // e.g. "redirect-limit", "connection", "http-404"

  bool ok() const noexcept { return kind == Kind::ok; }
  static FetchStatus success(int http_status = 200) { return {Kind::ok, http_status, {}}; }
  static FetchStatus failure(std::string reason, int http_status = 0) {
    return {Kind::error, http_status, std::move(reason)};
  }
  static FetchStatus timed_out() { return {Kind::timeout, 0, "timeout"}; }
};

/// What was retrieved for the page being scanned.
struct PageArtifacts {
  Url final_url;
  std::string raw_html;
  std::vector<std::string> redirect_chain;  // URLs requested, in order
  FetchStatus status = FetchStatus::failure("not-fetched");
  bool truncated = false;

  /// A page that was never fetched (URL-only scans).
  static PageArtifacts empty_for(const Url& url);
};

struct WhoisRecord {
  bool registrar_found = false;  // false: registry answered "no match"
  std::optional<Date> created;
  std::optional<Date> expires;
  std::optional<bool> registrant_host_matches;  // nullopt: identity fields redacted/absent
};

struct TrafficRank {
  std::optional<std::uint64_t> position;  // nullopt: provider answered, domain not ranked
};

/// Results of external lookups. Every optional left empty means the lookup
/// did not produce an answer (unknown), which is distinct from a negative
/// answer.
struct ExternalEvidence {
  Date observed_on{};  // reference date for WHOIS age arithmetic
  std::optional<WhoisRecord> whois;
  std::optional<bool> dns_resolved;
  std::optional<TrafficRank> traffic_rank;
  std::optional<bool> google_indexed;
  std::optional<bool> in_phish_reports;
};

/// Numeric cut-offs of the feature rules, loaded from data/thresholds.conf.
struct Thresholds {
  struct Band {
    double low;   // below low: +1
    double high;  // above high: -1; in between: 0
  };
  Band url_length{54, 75};
  Band request_url{0.22, 0.61};
  Band anchor{0.31, 0.67};
  Band meta_script_link{0.17, 0.81};
  std::uint64_t traffic_rank_limit = 100000;
  int registration_min_days = 365;
  int domain_min_age_days = 183;

  static Thresholds load(const std::filesystem::path& path);
  static Thresholds parse(std::istream& in, std::string_view source);
};

enum class SlotSource : std::uint8_t { url, content, external, defaulted };
std::string_view to_string(SlotSource source) noexcept;

struct FeatureVector {
  FeatureValues values{};
  std::array<SlotSource, kFeatureCount> provenance{};
};

/// Counts gathered from the page HTML that the content features are built on.
struct PageSummary {
  std::size_t objects = 0;
  std::size_t external_objects = 0;
  std::size_t anchors = 0;
  std::size_t unsafe_anchors = 0;  // external domain or non-navigating
  std::size_t tag_links = 0;       // <meta>/<script>/<link> carrying a URL
  std::size_t external_tag_links = 0;
  std::size_t forms = 0;
  bool form_action_blank = false;
  bool form_action_external = false;
  bool form_action_mailto = false;
  bool mail_function_text = false;
  bool favicon_external = false;
  std::size_t iframes = 0;
  bool invisible_iframe = false;
};

PageSummary summarize_page(const Url& page_url, std::string_view html, const PublicSuffixList& psl);

/// Per-feature rules. Each returns a value in {-1, 0, +1}.
namespace rules {
Ternary ip_in_host(const Url& url);
Ternary url_length(std::string_view raw_url, const Thresholds::Band& band);
Ternary shortener(const Url& url, const PublicSuffixList& psl, const std::unordered_set<std::string>& shorteners);
Ternary at_symbol(std::string_view raw_url);
Ternary double_slash_redirect(std::string_view raw_url);
Ternary dash_in_domain(const Url& url, const PublicSuffixList& psl);
Ternary subdomain_count(const Url& url, const PublicSuffixList& psl);
Ternary https_token(const Url& url);
/// x < low: +1; low <= x <= high: 0; x > high: -1.
Ternary band_value(double x, const Thresholds::Band& band);
/// band_value of numerator/denominator; an empty denominator gives +1.
Ternary ratio_band(std::size_t numerator, std::size_t denominator, const Thresholds::Band& band);
Ternary sfh(const PageSummary& page);
Ternary mail_submit(const PageSummary& page);
Ternary favicon(const PageSummary& page);
Ternary invisible_iframe(const PageSummary& page);
Ternary registration_length(const ExternalEvidence& ev, int min_days);
Ternary abnormal_url(const ExternalEvidence& ev);
Ternary domain_age(const ExternalEvidence& ev, int min_days);
Ternary dns_record(const ExternalEvidence& ev);
Ternary traffic_rank(const ExternalEvidence& ev, std::uint64_t limit);
Ternary google_index(const ExternalEvidence& ev);
Ternary report_listed(const ExternalEvidence& ev);
}  // namespace rules

/// Holds the read-only reference data (suffix list, shortener list,
/// thresholds) and computes feature vectors. Safe for concurrent use.
class FeatureExtractor {
 public:
  FeatureExtractor(PublicSuffixList psl, std::unordered_set<std::string> shorteners, Thresholds thresholds);

  /// Loads public_suffix_list.dat, shorteners.txt and thresholds.conf.
  static FeatureExtractor from_data_dir(const std::filesystem::path& dir);

  /// Throws InvalidUrl if `url` cannot be parsed. Content features fall back
  /// to +1 (defaulted) when the page was not fetched; unknown external
  /// evidence yields 0 (defaulted).
  FeatureVector extract_all(std::string_view url, const PageArtifacts& page, const ExternalEvidence& ev) const;

  const PublicSuffixList& suffixes() const noexcept { return psl_; }
  const Thresholds& thresholds() const noexcept { return thresholds_; }
  const std::unordered_set<std::string>& shorteners() const noexcept { return shorteners_; }

 private:
  PublicSuffixList psl_;
  std::unordered_set<std::string> shorteners_;
  Thresholds thresholds_;
};

}  // namespace nophish
