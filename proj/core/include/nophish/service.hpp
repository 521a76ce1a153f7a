#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nophish/features.hpp"
#include "nophish/learn/model.hpp"
#include "nophish/probe.hpp"

namespace nophish {

enum class Verdict { safe, warning, dangerous };
std::string_view to_string(Verdict v) noexcept;

/// Three-zone policy over the model's phishing probability p:
///   p >= danger_threshold              dangerous
///   warn_threshold <= p < danger       warning
///   otherwise                          safe
/// With min_fail_override = k, a page with at least k failing features is
/// reported as at least a warning.
struct VerdictPolicy {
  double danger_threshold = 0.5;
  double warn_threshold = 0.35;
  std::optional<std::size_t> min_fail_override;

  void validate() const;
  Verdict decide(double phishing_probability, std::size_t failing_features) const noexcept;
};

enum class FeatureStatus { pass, suspicious, fail };
std::string_view to_string(FeatureStatus s) noexcept;
/// +1 pass, 0 suspicious, -1 fail.
FeatureStatus status_of(Ternary value) noexcept;

struct FeatureOutcome {
  std::size_t index = 0;
  std::string id;
  std::string name;
  Ternary value = 0;
  FeatureStatus status = FeatureStatus::suspicious;
  SlotSource source = SlotSource::defaulted;
};

struct ScanReport {
  std::string url;
  Verdict verdict = Verdict::safe;
  double phishing_probability = 0.0;
  std::vector<FeatureOutcome> features;  // all 22, in index order
  std::string model_id;
  EvidenceProvenance evidence_provenance;
  /// The page could not be fetched; content features fell back to defaults.
  bool degraded = false;
  std::string fetch_status;  // "ok", or the failure reason
  std::string final_url;
  double timing_ms = 0.0;

  std::size_t failing_features() const noexcept;
};

nlohmann::json to_json(const ScanReport& report);
/// Same as to_json without timing_ms, for comparisons between runs.
nlohmann::json to_json_stable(const ScanReport& report);

/// fetch -> evidence -> features -> classify -> verdict. Immutable after
/// construction; scan() may be called concurrently.
class Scanner {
 public:
  Scanner(std::shared_ptr<const TrainedModel> model, std::shared_ptr<const FeatureExtractor> extractor,
          ProviderSet providers, VerdictPolicy policy = {}, FetchPolicy fetch = {});

  /// Throws InvalidUrl for an unparseable or non-http(s) URL.
  ScanReport scan(std::string_view url) const;
  /// Scans with a page that was obtained elsewhere (the fetcher is skipped).
  ScanReport scan_with_page(std::string_view url, PageArtifacts page) const;

  const std::string& model_id() const noexcept { return model_id_; }
  const TrainedModel& model() const noexcept { return *model_; }
  const VerdictPolicy& policy() const noexcept { return policy_; }
  const ProviderSet& providers() const noexcept { return providers_; }

 private:
  ScanReport finish(const Url& url, std::string_view raw, const PageArtifacts& page, const GatheredEvidence& evidence,
                    Provenance page_source) const;

  std::shared_ptr<const TrainedModel> model_;
  std::shared_ptr<const FeatureExtractor> extractor_;
  ProviderSet providers_;
  VerdictPolicy policy_;
  FetchPolicy fetch_;
  std::string model_id_;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 3000;  // 0 picks a free port
  /// Allowed CORS origins: exact values, "*" for any, or a prefix ending in
  /// "*" such as "chrome-extension://*".
  std::vector<std::string> allowed_origins{"chrome-extension://*", "moz-extension://*"};
  std::size_t threads = 8;
};

bool origin_allowed(std::string_view origin, const std::vector<std::string>& allowed) noexcept;

struct ServerCounters {
  std::atomic<std::uint64_t> requests{0};
  std::atomic<std::uint64_t> scans{0};
  std::atomic<std::uint64_t> failures{0};
};

/// HTTP/1.1 JSON API:
///   POST /detectphishing  {"url": "..."}  -> ScanReport
///   GET  /health                         -> {"status": "ok", "model_id": ...}
///   GET  /version                        -> {"version": ..., "model_id": ...}
class ScanServer {
 public:
  ScanServer(std::shared_ptr<const Scanner> scanner, ServerConfig config);
  ~ScanServer();
  ScanServer(const ScanServer&) = delete;
  ScanServer& operator=(const ScanServer&) = delete;

  /// Binds the listening socket; throws Error(startup) if that fails.
  void bind();
  /// Port actually bound (after bind()).
  int port() const noexcept { return port_; }
  /// Serves until stop() is called. bind() must have succeeded.
  void run();
  void stop();
  const ServerCounters& counters() const noexcept { return counters_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<const Scanner> scanner_;
  ServerConfig config_;
  ServerCounters counters_;
  int port_ = 0;
};

}  // namespace nophish
