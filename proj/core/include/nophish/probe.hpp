#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nophish/features.hpp"
#include "nophish/public_suffix.hpp"
#include "nophish/url.hpp"

namespace nophish {

struct FetchPolicy {
  std::chrono::milliseconds timeout{5000};
  std::size_t max_body = 2 * 1024 * 1024;
  std::size_t max_redirects = 5;
  std::string user_agent = "nophish/0.9 (+phishing scanner)";

  /// Throws ConfigError unless timeout > 0 and max_body > 0.
  void validate() const;
};

enum class ProviderMode { live, fixture, stub };
std::string_view to_string(ProviderMode mode) noexcept;

class PageFetcher {
 public:
  virtual ~PageFetcher() = default;
  virtual ProviderMode mode() const = 0;
  /// Never throws for transport or HTTP failures; they are reported in
  /// PageArtifacts::status.
  virtual PageArtifacts fetch(const Url& url, const FetchPolicy& policy) const = 0;
};

class WhoisProvider {
 public:
  virtual ~WhoisProvider() = default;
  virtual ProviderMode mode() const = 0;
  /// nullopt: lookup failed. A record with registrar_found == false: the
  /// registry has no such domain.
  virtual std::optional<WhoisRecord> lookup(std::string_view registered_domain) const = 0;
};

class DnsProvider {
 public:
  virtual ~DnsProvider() = default;
  virtual ProviderMode mode() const = 0;
  /// Addresses for `host`; an empty vector is NXDOMAIN / no records.
  virtual std::optional<std::vector<std::string>> resolve(std::string_view host) const = 0;
};

class RankProvider {
 public:
  virtual ~RankProvider() = default;
  virtual ProviderMode mode() const = 0;
  virtual std::optional<TrafficRank> rank(std::string_view host, std::string_view registered_domain) const = 0;
};

class IndexProvider {
 public:
  virtual ~IndexProvider() = default;
  virtual ProviderMode mode() const = 0;
  virtual std::optional<bool> indexed(const Url& url, std::string_view registered_domain) const = 0;
};

class ReportProvider {
 public:
  virtual ~ReportProvider() = default;
  virtual ProviderMode mode() const = 0;
  /// True if any of `keys` (hosts, registered domains, IP addresses) is listed.
  virtual std::optional<bool> listed(std::span<const std::string> keys) const = 0;
};

/// The six evidence sources used by a scan. Fixture and stub implementations
/// never touch the network.
struct ProviderSet {
  std::shared_ptr<const PageFetcher> page_fetcher;
  std::shared_ptr<const WhoisProvider> whois;
  std::shared_ptr<const DnsProvider> dns;
  std::shared_ptr<const RankProvider> rank;
  std::shared_ptr<const IndexProvider> index;
  std::shared_ptr<const ReportProvider> reports;
  /// Upper bound for each lookup in gather_evidence.
  std::chrono::milliseconds provider_timeout{3000};
  /// Date used for WHOIS age arithmetic; today (UTC) when unset.
  std::optional<Date> reference_date;

  void validate() const;
  Date today() const;
};

/// Where each field of a scan's evidence came from; `unknown` when the lookup
/// failed or timed out.
enum class Provenance { live, fixture, stub, unknown };
std::string_view to_string(Provenance p) noexcept;

struct EvidenceProvenance {
  Provenance page = Provenance::unknown;
  Provenance whois = Provenance::unknown;
  Provenance dns = Provenance::unknown;
  Provenance rank = Provenance::unknown;
  Provenance index = Provenance::unknown;
  Provenance reports = Provenance::unknown;
};

struct GatheredEvidence {
  ExternalEvidence evidence;
  EvidenceProvenance provenance;
};

PageArtifacts fetch_page(const Url& url, const PageFetcher& fetcher, const FetchPolicy& policy);

/// Queries all external providers concurrently. Each lookup is bounded by
/// providers.provider_timeout; a failing, throwing or hanging provider leaves
/// its field unknown and never fails the call.
GatheredEvidence gather_evidence(const Url& url, const ProviderSet& providers, const PublicSuffixList& psl);

/// Extracts dates, registrar presence and registrant identity from WHOIS text.
WhoisRecord parse_whois(std::string_view text, std::string_view registered_domain);

// --- implementations -------------------------------------------------------

/// All-benign deterministic providers.
ProviderSet make_stub_providers(Date reference_date);

/// Providers reading a fixture directory (see docs/fixtures.md for the
/// layout). Throws if the directory or its manifest is missing.
ProviderSet make_fixture_providers(const std::filesystem::path& dir);

struct LiveProviderConfig {
  std::optional<std::filesystem::path> rank_file;    // CSV "domain,rank"
  std::optional<std::filesystem::path> report_file;  // newline-delimited hosts/IPs
  std::optional<std::filesystem::path> index_file;   // hosts known to be indexed
  std::chrono::milliseconds whois_timeout{4000};
  std::chrono::milliseconds provider_timeout{5000};

  /// Fills unset paths from NOPHISH_RANK_FILE / NOPHISH_REPORT_FILE.
  static LiveProviderConfig from_environment();
};

/// Network-backed providers: HTTP(S) page fetch, port-43 WHOIS, system DNS.
/// Rank, index and report lookups use the configured offline files and stay
/// unknown when no file is configured.
ProviderSet make_live_providers(const LiveProviderConfig& config);

std::shared_ptr<const PageFetcher> make_http_page_fetcher();
std::shared_ptr<const RankProvider> make_file_rank_provider(const std::filesystem::path& csv, ProviderMode mode);
std::shared_ptr<const ReportProvider> make_file_report_provider(const std::filesystem::path& list, ProviderMode mode);
std::shared_ptr<const IndexProvider> make_file_index_provider(const std::filesystem::path& list, ProviderMode mode);

}  // namespace nophish
