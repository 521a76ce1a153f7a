#include <doctest.h>

#include <atomic>
#include <fstream>
#include <chrono>
#include <thread>

#include <httplib.h>

#include "nophish/error.hpp"
#include "nophish/probe.hpp"
#include "test_support.hpp"

using namespace nophish;
using namespace std::chrono_literals;

namespace {

Url url(const char* s) { return *parse_url(s); }

struct LocalServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  LocalServer() {
    server.Get("/ok", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html><a href='/x'>x</a></html>", "text/html");
    });
    server.Get("/big", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(std::string(100000, 'a'), "text/html");
    });
    server.Get("/hop/(\\d+)", [](const httplib::Request& req, httplib::Response& res) {
      const int n = std::stoi(req.matches[1]);
      if (n == 0) {
        res.set_content("landed", "text/html");
      } else {
        res.set_redirect("/hop/" + std::to_string(n - 1));
      }
    });
    server.Get("/missing", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
    server.Get("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(1500ms);
      res.set_content("late", "text/html");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    thread.join();
  }
  std::string base() const { return "http://127.0.0.1:" + std::to_string(port); }
};

class HangingWhois final : public WhoisProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }
  std::optional<WhoisRecord> lookup(std::string_view) const override {
    std::this_thread::sleep_for(3s);
    return WhoisRecord{true, {}, {}, {}};
  }
};

class ThrowingDns final : public DnsProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }
  std::optional<std::vector<std::string>> resolve(std::string_view) const override {
    throw std::runtime_error("resolver exploded");
  }
};

class HangingFetcher final : public PageFetcher {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }
  PageArtifacts fetch(const Url& u, const FetchPolicy&) const override {
    std::this_thread::sleep_for(3s);
    auto page = PageArtifacts::empty_for(u);
    page.status = FetchStatus::success();
    return page;
  }
};

}  // namespace

TEST_CASE("fixture pages: html, redirects and failures") {
  const auto providers = make_fixture_providers(test::fixtures_dir());
  const FetchPolicy policy;
  const auto& fetcher = *providers.page_fetcher;

  const auto ok = fetcher.fetch(url("https://example.com/"), policy);
  CHECK(ok.status.ok());
  CHECK(ok.raw_html.find("Example Domain") != std::string::npos);

  const auto hop = fetcher.fetch(url("http://bit.ly/3xYz9Pq"), policy);
  CHECK(hop.status.ok());
  CHECK(hop.final_url.host == "office365-mailbox-quota.com");
  CHECK(hop.redirect_chain.size() == 2);

  CHECK(fetcher.fetch(url("http://loop-a.test/"), policy).status.reason == "redirect-limit");
  CHECK(fetcher.fetch(url("http://slow.test/"), policy).status.kind == FetchStatus::Kind::timeout);
  CHECK(fetcher.fetch(url("http://gone.test/"), policy).status.reason == "http-404");
  CHECK(fetcher.fetch(url("http://to-ftp.test/"), policy).status.reason == "redirect-non-http");
  CHECK(fetcher.fetch(url("http://unlisted.test/"), policy).status.reason == "fixture-missing");

  FetchPolicy tiny;
  tiny.max_body = 64;
  const auto cut = fetcher.fetch(url("https://example.com/"), tiny);
  CHECK(cut.truncated);
  CHECK(cut.raw_html.size() == 64);
}

TEST_CASE("fixture evidence: known, negative and unknown answers") {
  const auto providers = make_fixture_providers(test::fixtures_dir());
  const auto& psl = test::shared_extractor().suffixes();
  CHECK(format_date(providers.today()) == "2024-03-01");

  const auto good = gather_evidence(url("https://www.wikipedia.org/"), providers, psl);
  REQUIRE(good.evidence.whois);
  CHECK(good.evidence.whois->registrar_found);
  CHECK(good.evidence.dns_resolved == true);
  CHECK(good.evidence.traffic_rank->position == 12u);
  CHECK(good.evidence.google_indexed == true);
  CHECK(good.evidence.in_phish_reports == false);
  CHECK(good.provenance.whois == Provenance::fixture);

  const auto phish = gather_evidence(url("http://paypal-account-verify.com/signin/"), providers, psl);
  CHECK_FALSE(phish.evidence.traffic_rank->position.has_value());
  CHECK(phish.evidence.google_indexed == false);

  const auto nx = gather_evidence(url("http://nxdomain.test/"), providers, psl);
  CHECK(nx.evidence.dns_resolved == false);
  CHECK_FALSE(nx.evidence.whois.has_value());
  CHECK(nx.provenance.whois == Provenance::unknown);

  const auto reported = gather_evidence(url("http://203.0.113.55:8080/owa/"), providers, psl);
  CHECK(reported.evidence.in_phish_reports == true);
}

TEST_CASE("fixture directory errors") {
  CHECK_THROWS_AS(make_fixture_providers("/nonexistent/fixtures"), ConfigError);
  const auto dir = test::temp_dir("fx");
  std::ofstream(dir / "manifest.conf") << "provider_timeout_ms = 10\n";
  CHECK_THROWS_AS(make_fixture_providers(dir), ConfigError);
}

TEST_CASE("stub providers are benign and deterministic") {
  const auto date = *parse_iso_date("2024-01-01");
  const auto providers = make_stub_providers(date);
  const auto ev = gather_evidence(url("http://anything.test/"), providers, test::shared_extractor().suffixes());
  CHECK(ev.evidence.whois->registrar_found);
  CHECK(ev.provenance.rank == Provenance::stub);
  CHECK(providers.page_fetcher->fetch(url("http://a.test/"), FetchPolicy{}).status.ok());
}

TEST_CASE("slow or failing providers leave their fields unknown within the deadline") {
  auto providers = make_stub_providers(*parse_iso_date("2024-01-01"));
  providers.whois = std::make_shared<HangingWhois>();
  providers.dns = std::make_shared<ThrowingDns>();
  providers.provider_timeout = 200ms;
  const auto start = std::chrono::steady_clock::now();
  const auto ev = gather_evidence(url("http://example.com/"), providers, test::shared_extractor().suffixes());
  const auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(elapsed < 1500ms);
  CHECK_FALSE(ev.evidence.whois.has_value());
  CHECK(ev.provenance.whois == Provenance::unknown);
  CHECK_FALSE(ev.evidence.dns_resolved.has_value());
  CHECK(ev.provenance.dns == Provenance::unknown);
  CHECK(ev.evidence.google_indexed == true);
}

TEST_CASE("a hanging page fetcher degrades the scan instead of blocking it") {
  auto providers = make_stub_providers(*parse_iso_date("2024-01-01"));
  providers.page_fetcher = std::make_shared<HangingFetcher>();
  providers.provider_timeout = 100ms;
  FetchPolicy fetch;
  fetch.timeout = 200ms;
  const Scanner scanner(test::shipped_model(), std::make_shared<const FeatureExtractor>(test::shared_extractor()),
                        providers, VerdictPolicy{}, fetch);
  const auto start = std::chrono::steady_clock::now();
  const auto report = scanner.scan("http://example.com/");
  CHECK(std::chrono::steady_clock::now() - start < 1500ms);
  CHECK(report.degraded);
  CHECK(report.fetch_status == "timeout");
  CHECK(report.evidence_provenance.page == Provenance::unknown);
}

TEST_CASE("http page fetcher against a local server") {
  LocalServer server;
  const auto fetcher = make_http_page_fetcher();
  FetchPolicy policy;
  policy.timeout = 1000ms;

  const auto ok = fetcher->fetch(url((server.base() + "/ok").c_str()), policy);
  CHECK(ok.status.ok());
  CHECK(ok.raw_html.find("<a href") != std::string::npos);

  const auto hops = fetcher->fetch(url((server.base() + "/hop/3").c_str()), policy);
  CHECK(hops.status.ok());
  CHECK(hops.raw_html == "landed");
  CHECK(hops.final_url.path == "/hop/0");
  CHECK(hops.redirect_chain.size() == 4);

  const auto limit = fetcher->fetch(url((server.base() + "/hop/9").c_str()), policy);
  CHECK_FALSE(limit.status.ok());
  CHECK(limit.status.reason == "redirect-limit");

  const auto missing = fetcher->fetch(url((server.base() + "/missing").c_str()), policy);
  CHECK(missing.status.reason == "http-404");

  FetchPolicy small = policy;
  small.max_body = 1000;
  const auto big = fetcher->fetch(url((server.base() + "/big").c_str()), small);
  CHECK(big.truncated);
  CHECK(big.raw_html.size() <= 1000);

  FetchPolicy quick = policy;
  quick.timeout = 300ms;
  const auto start = std::chrono::steady_clock::now();
  const auto slow = fetcher->fetch(url((server.base() + "/slow").c_str()), quick);
  CHECK_FALSE(slow.status.ok());
  CHECK(std::chrono::steady_clock::now() - start < 1200ms);

  const auto refused = fetcher->fetch(url("http://127.0.0.1:1/"), policy);
  CHECK_FALSE(refused.status.ok());
}
