#include "nophish/service.hpp"

#include <chrono>
#include <future>
#include <thread>

#include "nophish/error.hpp"

namespace nophish {

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::safe: return "safe";
    case Verdict::warning: return "warning";
    case Verdict::dangerous: return "dangerous";
  }
  return "unknown";
}

std::string_view to_string(FeatureStatus s) noexcept {
  switch (s) {
    case FeatureStatus::pass: return "pass";
    case FeatureStatus::suspicious: return "suspicious";
    case FeatureStatus::fail: return "fail";
  }
  return "unknown";
}

FeatureStatus status_of(Ternary value) noexcept {
  if (value > 0) return FeatureStatus::pass;
  if (value < 0) return FeatureStatus::fail;
  return FeatureStatus::suspicious;
}

void VerdictPolicy::validate() const {
  if (!(warn_threshold > 0.0 && warn_threshold < danger_threshold && danger_threshold <= 1.0)) {
    throw ConfigError("verdict policy needs 0 < warn_threshold < danger_threshold <= 1 (got warn " +
                      std::to_string(warn_threshold) + ", danger " + std::to_string(danger_threshold) + ")");
  }
  if (min_fail_override && *min_fail_override == 0) throw ConfigError("min_fail_override must be at least 1");
}

Verdict VerdictPolicy::decide(double p, std::size_t failing) const noexcept {
  if (p >= danger_threshold) return Verdict::dangerous;
  if (p >= warn_threshold) return Verdict::warning;
  if (min_fail_override && failing >= *min_fail_override) return Verdict::warning;
  return Verdict::safe;
}

std::size_t ScanReport::failing_features() const noexcept {
  std::size_t n = 0;
  for (const auto& f : features) n += f.status == FeatureStatus::fail ? 1 : 0;
  return n;
}

nlohmann::json to_json_stable(const ScanReport& r) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : r.features) {
    features.push_back({{"index", f.index},
                        {"id", f.id},
                        {"name", f.name},
                        {"value", static_cast<int>(f.value)},
                        {"status", to_string(f.status)},
                        {"source", to_string(f.source)}});
  }
  const auto& p = r.evidence_provenance;
  return {{"url", r.url},
          {"verdict", to_string(r.verdict)},
          {"phishing_probability", r.phishing_probability},
          {"features", std::move(features)},
          {"model_id", r.model_id},
          {"evidence_provenance",
           {{"page", to_string(p.page)},
            {"whois", to_string(p.whois)},
            {"dns", to_string(p.dns)},
            {"rank", to_string(p.rank)},
            {"index", to_string(p.index)},
            {"reports", to_string(p.reports)}}},
          {"degraded", r.degraded},
          {"fetch_status", r.fetch_status},
          {"final_url", r.final_url}};
}

nlohmann::json to_json(const ScanReport& r) {
  auto j = to_json_stable(r);
  j["timing_ms"] = r.timing_ms;
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

Provenance provenance_of(ProviderMode mode) {
  switch (mode) {
    case ProviderMode::live: return Provenance::live;
    case ProviderMode::fixture: return Provenance::fixture;
    case ProviderMode::stub: return Provenance::stub;
  }
  return Provenance::unknown;
}

std::string describe(const FetchStatus& s) {
  if (s.ok()) return "ok";
  return s.reason.empty() ? std::string("error") : s.reason;
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

Scanner::Scanner(std::shared_ptr<const TrainedModel> model, std::shared_ptr<const FeatureExtractor> extractor,
                 ProviderSet providers, VerdictPolicy policy, FetchPolicy fetch)
    : model_(std::move(model)),
      extractor_(std::move(extractor)),
      providers_(std::move(providers)),
      policy_(policy),
      fetch_(std::move(fetch)) {
  if (!model_) throw ConfigError("scanner needs a model");
  if (!extractor_) throw ConfigError("scanner needs a feature extractor");
  providers_.validate();
  policy_.validate();
  fetch_.validate();
  model_id_ = nophish::model_id(*model_);
}

ScanReport Scanner::scan(std::string_view raw) const {
  const auto start = Clock::now();
  const Url url = require_url(raw);

  // Fetch on a detached thread, bounded by the deadline.
  auto promise = std::make_shared<std::promise<PageArtifacts>>();
  auto future = promise->get_future();
  std::thread([promise, fetcher = providers_.page_fetcher, url, policy = fetch_]() {
    promise->set_value(fetch_page(url, *fetcher, policy));
  }).detach();

  const auto evidence = gather_evidence(url, providers_, extractor_->suffixes());

  PageArtifacts page = PageArtifacts::empty_for(url);
  if (future.wait_until(start + fetch_.timeout + std::chrono::milliseconds(250)) == std::future_status::ready) {
    page = future.get();
  } else {
    page.status = FetchStatus::timed_out();
  }
  const auto source = page.status.ok() ? provenance_of(providers_.page_fetcher->mode()) : Provenance::unknown;
  auto report = finish(url, raw, page, evidence, source);
  report.timing_ms = elapsed_ms(start);
  return report;
}

ScanReport Scanner::scan_with_page(std::string_view raw, PageArtifacts page) const {
  const auto start = Clock::now();
  const Url url = require_url(raw);
  const auto evidence = gather_evidence(url, providers_, extractor_->suffixes());
  if (page.final_url.host.empty()) page.final_url = url;
  const auto source = page.status.ok() ? Provenance::fixture : Provenance::unknown;
  auto report = finish(url, raw, page, evidence, source);
  report.timing_ms = elapsed_ms(start);
  return report;
}

ScanReport Scanner::finish(const Url& url, std::string_view raw, const PageArtifacts& page,
                           const GatheredEvidence& evidence, Provenance page_source) const {
  const auto fv = extractor_->extract_all(raw, page, evidence.evidence);
  const auto prediction = model_->predict(fv.values);

  ScanReport report;
  report.url = std::string(raw);
  report.phishing_probability = prediction.phishing_probability;
  report.model_id = model_id_;
  report.evidence_provenance = evidence.provenance;
  report.evidence_provenance.page = page_source;
  report.degraded = !page.status.ok();
  report.fetch_status = describe(page.status);
  report.final_url = page.status.ok() ? page.final_url.normalized() : url.normalized();
  const auto& catalog = feature_catalog();
  report.features.reserve(kFeatureCount);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    report.features.push_back(FeatureOutcome{i, std::string(catalog[i].id), std::string(catalog[i].title),
                                             fv.values[i], status_of(fv.values[i]), fv.provenance[i]});
  }
  report.verdict = policy_.decide(report.phishing_probability, report.failing_features());
  return report;
}

}  // namespace nophish
