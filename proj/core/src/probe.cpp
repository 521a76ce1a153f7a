#include "nophish/probe.hpp"

#include <fstream>
#include <future>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "nophish/config.hpp"
#include "nophish/error.hpp"
#include "text.hpp"

namespace nophish {

void FetchPolicy::validate() const {
  if (timeout.count() <= 0) throw ConfigError("fetch timeout must be positive");
  if (max_body == 0) throw ConfigError("max_body must be positive");
}

std::string_view to_string(ProviderMode mode) noexcept {
  switch (mode) {
    case ProviderMode::live: return "live";
    case ProviderMode::fixture: return "fixture";
    case ProviderMode::stub: return "stub";
  }
  return "unknown";
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::live: return "live";
    case Provenance::fixture: return "fixture";
    case Provenance::stub: return "stub";
    case Provenance::unknown: return "unknown";
  }
  return "unknown";
}

void ProviderSet::validate() const {
  if (!page_fetcher || !whois || !dns || !rank || !index || !reports) {
    throw ConfigError("provider set is incomplete");
  }
  if (provider_timeout.count() <= 0) throw ConfigError("provider timeout must be positive");
}

Date ProviderSet::today() const {
  if (reference_date) return *reference_date;
  return std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
}

namespace {

Provenance provenance_of(ProviderMode mode) {
  switch (mode) {
    case ProviderMode::live: return Provenance::live;
    case ProviderMode::fixture: return Provenance::fixture;
    case ProviderMode::stub: return Provenance::stub;
  }
  return Provenance::unknown;
}

// Runs `fn` on a detached thread. The caller may stop waiting at any time; the
// thread owns everything it touches, so a provider that never returns only
// leaks its own thread.
template <typename Fn>
auto launch(Fn fn) -> std::future<decltype(fn())> {
  using R = decltype(fn());
  auto promise = std::make_shared<std::promise<R>>();
  auto future = promise->get_future();
  std::thread([promise, fn = std::move(fn)]() mutable {
    try {
      promise->set_value(fn());
    } catch (...) {
      promise->set_value(R{});
    }
  }).detach();
  return future;
}

template <typename R>
R collect(std::future<R>& future, std::chrono::steady_clock::time_point deadline) {
  if (future.wait_until(deadline) != std::future_status::ready) return R{};
  return future.get();
}

std::string strip_www(std::string_view host) {
  if (host.starts_with("www.")) host.remove_prefix(4);
  return std::string(host);
}

std::string list_key(std::string_view entry) {
  auto value = text::to_lower(text::trim(entry));
  if (value.find("://") != std::string::npos) {
    if (auto url = parse_url(value)) return url->host;
  }
  return value;
}

}  // namespace

PageArtifacts fetch_page(const Url& url, const PageFetcher& fetcher, const FetchPolicy& policy) {
  policy.validate();
  try {
    return fetcher.fetch(url, policy);
  } catch (const std::exception& e) {
    auto page = PageArtifacts::empty_for(url);
    page.status = FetchStatus::failure(std::string("fetcher: ") + e.what());
    return page;
  }
}

GatheredEvidence gather_evidence(const Url& url, const ProviderSet& providers, const PublicSuffixList& psl) {
  providers.validate();
  GatheredEvidence out;
  out.evidence.observed_on = providers.today();

  const std::string host = url.host;
  const std::string domain = psl.registered_domain(url.host);
  const auto deadline = std::chrono::steady_clock::now() + providers.provider_timeout;

  auto whois = launch([p = providers.whois, domain]() { return p->lookup(domain); });
  auto dns = launch([p = providers.dns, host]() { return p->resolve(host); });
  auto rank = launch([p = providers.rank, host, domain]() { return p->rank(host, domain); });
  auto index = launch([p = providers.index, url, domain]() { return p->indexed(url, domain); });
  std::vector<std::string> keys{host};
  if (domain != host) keys.push_back(domain);
  auto reports = launch([p = providers.reports, keys]() { return p->listed(keys); });

  out.evidence.whois = collect(whois, deadline);
  if (out.evidence.whois) out.provenance.whois = provenance_of(providers.whois->mode());

  const auto addresses = collect(dns, deadline);
  if (addresses) {
    out.evidence.dns_resolved = !addresses->empty();
    out.provenance.dns = provenance_of(providers.dns->mode());
  }

  out.evidence.traffic_rank = collect(rank, deadline);
  if (out.evidence.traffic_rank) out.provenance.rank = provenance_of(providers.rank->mode());

  out.evidence.google_indexed = collect(index, deadline);
  if (out.evidence.google_indexed) out.provenance.index = provenance_of(providers.index->mode());

  out.evidence.in_phish_reports = collect(reports, deadline);
  if (out.evidence.in_phish_reports && !*out.evidence.in_phish_reports && addresses && !addresses->empty() &&
      !is_ip_literal(host)) {
    auto by_address = launch([p = providers.reports, a = *addresses]() { return p->listed(a); });
    if (auto hit = collect(by_address, deadline); hit && *hit) out.evidence.in_phish_reports = true;
  }
  if (out.evidence.in_phish_reports) out.provenance.reports = provenance_of(providers.reports->mode());
  return out;
}

// --- stub ------------------------------------------------------------------

namespace {

class StubPageFetcher final : public PageFetcher {
 public:
  ProviderMode mode() const override { return ProviderMode::stub; }
  PageArtifacts fetch(const Url& url, const FetchPolicy&) const override {
    PageArtifacts page;
    page.final_url = url;
    page.raw_html = "<html><head><title>stub</title></head><body></body></html>";
    page.redirect_chain = {url.normalized()};
    page.status = FetchStatus::success(200);
    return page;
  }
};

class StubWhois final : public WhoisProvider {
 public:
  explicit StubWhois(Date today) : today_(today) {}
  ProviderMode mode() const override { return ProviderMode::stub; }
  std::optional<WhoisRecord> lookup(std::string_view) const override {
    WhoisRecord r;
    r.registrar_found = true;
    r.created = today_ - std::chrono::days(3650);
    r.expires = today_ + std::chrono::days(730);
    r.registrant_host_matches = true;
    return r;
  }

 private:
  Date today_;
};

class StubDns final : public DnsProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::stub; }
  std::optional<std::vector<std::string>> resolve(std::string_view) const override {
    return std::vector<std::string>{"192.0.2.1"};
  }
};

class StubRank final : public RankProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::stub; }
  std::optional<TrafficRank> rank(std::string_view, std::string_view) const override { return TrafficRank{500}; }
};

class StubIndex final : public IndexProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::stub; }
  std::optional<bool> indexed(const Url&, std::string_view) const override { return true; }
};

class StubReports final : public ReportProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::stub; }
  std::optional<bool> listed(std::span<const std::string>) const override { return false; }
};

// --- file-backed -----------------------------------------------------------

class FileRank final : public RankProvider {
 public:
  FileRank(std::unordered_map<std::string, std::uint64_t> ranks, ProviderMode mode)
      : ranks_(std::move(ranks)), mode_(mode) {}
  ProviderMode mode() const override { return mode_; }
  std::optional<TrafficRank> rank(std::string_view host, std::string_view domain) const override {
    for (const auto& key : {std::string(host), strip_www(host), std::string(domain)}) {
      if (auto it = ranks_.find(key); it != ranks_.end()) return TrafficRank{it->second};
    }
    return TrafficRank{std::nullopt};
  }

 private:
  std::unordered_map<std::string, std::uint64_t> ranks_;
  ProviderMode mode_;
};

class SetReports final : public ReportProvider {
 public:
  SetReports(std::unordered_set<std::string> entries, ProviderMode mode) : entries_(std::move(entries)), mode_(mode) {}
  ProviderMode mode() const override { return mode_; }
  std::optional<bool> listed(std::span<const std::string> keys) const override {
    for (const auto& key : keys) {
      if (entries_.contains(text::to_lower(key))) return true;
    }
    return false;
  }

 private:
  std::unordered_set<std::string> entries_;
  ProviderMode mode_;
};

class SetIndex final : public IndexProvider {
 public:
  SetIndex(std::unordered_set<std::string> entries, ProviderMode mode) : entries_(std::move(entries)), mode_(mode) {}
  ProviderMode mode() const override { return mode_; }
  std::optional<bool> indexed(const Url& url, std::string_view domain) const override {
    return entries_.contains(url.host) || entries_.contains(strip_www(url.host)) ||
           entries_.contains(std::string(domain));
  }

 private:
  std::unordered_set<std::string> entries_;
  ProviderMode mode_;
};

std::unordered_set<std::string> load_entry_set(const std::filesystem::path& path) {
  std::unordered_set<std::string> out;
  for (const auto& item : read_list_file(path)) out.insert(list_key(item));
  return out;
}

// --- fixture ---------------------------------------------------------------

struct FixturePage {
  std::string kind;    // html | redirect | status | timeout
  std::string target;  // file path, redirect location or status code
};

class FixturePageFetcher final : public PageFetcher {
 public:
  FixturePageFetcher(std::filesystem::path dir, std::unordered_map<std::string, FixturePage> pages)
      : dir_(std::move(dir)), pages_(std::move(pages)) {}

  ProviderMode mode() const override { return ProviderMode::fixture; }

  PageArtifacts fetch(const Url& url, const FetchPolicy& policy) const override {
    PageArtifacts page = PageArtifacts::empty_for(url);
    Url current = url;
    std::size_t redirects = 0;
    while (true) {
      page.redirect_chain.push_back(current.normalized());
      page.final_url = current;
      const auto it = pages_.find(current.normalized());
      if (it == pages_.end()) {
        page.status = FetchStatus::failure("fixture-missing");
        return page;
      }
      const auto& entry = it->second;
      if (entry.kind == "timeout") {
        page.status = FetchStatus::timed_out();
        return page;
      }
      if (entry.kind == "status") {
        const int code = text::parse_number<int>(entry.target).value_or(500);
        page.status = FetchStatus::failure("http-" + std::to_string(code), code);
        return page;
      }
      if (entry.kind == "redirect") {
        if (redirects >= policy.max_redirects) {
          page.status = FetchStatus::failure("redirect-limit", 302);
          return page;
        }
        auto next = resolve_reference(current, entry.target);
        if (!next || !next->is_http()) {
          page.status = FetchStatus::failure("redirect-non-http", 302);
          return page;
        }
        ++redirects;
        current = *next;
        continue;
      }
      std::ifstream in(dir_ / entry.target, std::ios::binary);
      if (!in) {
        page.status = FetchStatus::failure("fixture-unreadable");
        return page;
      }
      std::ostringstream body;
      body << in.rdbuf();
      page.raw_html = body.str();
      if (page.raw_html.size() > policy.max_body) {
        page.raw_html.resize(policy.max_body);
        page.truncated = true;
      }
      page.status = FetchStatus::success(200);
      return page;
    }
  }

 private:
  std::filesystem::path dir_;
  std::unordered_map<std::string, FixturePage> pages_;
};

class FixtureWhois final : public WhoisProvider {
 public:
  explicit FixtureWhois(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ProviderMode mode() const override { return ProviderMode::fixture; }
  std::optional<WhoisRecord> lookup(std::string_view domain) const override {
    std::ifstream in(dir_ / (std::string(domain) + ".txt"), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream body;
    body << in.rdbuf();
    return parse_whois(body.str(), domain);
  }

 private:
  std::filesystem::path dir_;
};

class FixtureDns final : public DnsProvider {
 public:
  explicit FixtureDns(std::unordered_map<std::string, std::vector<std::string>> records)
      : records_(std::move(records)) {}
  ProviderMode mode() const override { return ProviderMode::fixture; }
  std::optional<std::vector<std::string>> resolve(std::string_view host) const override {
    if (auto it = records_.find(std::string(host)); it != records_.end()) return it->second;
    return std::nullopt;
  }

 private:
  std::unordered_map<std::string, std::vector<std::string>> records_;
};

// Rows of a two-column "key,value" file; a first row whose value fails
// `is_value` is treated as a header.
template <typename Check>
std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path, Check is_value) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) throw ParseError(path.string(), line_no, "expected two comma-separated fields");
    std::string key = text::to_lower(text::trim(body.substr(0, comma)));
    std::string value(text::trim(body.substr(comma + 1)));
    if (!is_value(value)) {
      if (rows.empty() && line_no == 1) continue;
      throw ParseError(path.string(), line_no, "bad value '" + value + "'");
    }
    rows.emplace_back(std::move(key), std::move(value));
  }
  return rows;
}

std::unordered_map<std::string, std::uint64_t> load_ranks(const std::filesystem::path& path) {
  std::unordered_map<std::string, std::uint64_t> ranks;
  for (auto& [domain, value] : read_pairs(path, [](const std::string& v) {
         return text::parse_number<std::uint64_t>(v).has_value();
       })) {
    ranks.emplace(std::move(domain), *text::parse_number<std::uint64_t>(value));
  }
  return ranks;
}

}  // namespace

std::shared_ptr<const RankProvider> make_file_rank_provider(const std::filesystem::path& csv, ProviderMode mode) {
  return std::make_shared<FileRank>(load_ranks(csv), mode);
}

std::shared_ptr<const ReportProvider> make_file_report_provider(const std::filesystem::path& list, ProviderMode mode) {
  return std::make_shared<SetReports>(load_entry_set(list), mode);
}

std::shared_ptr<const IndexProvider> make_file_index_provider(const std::filesystem::path& list, ProviderMode mode) {
  return std::make_shared<SetIndex>(load_entry_set(list), mode);
}

ProviderSet make_stub_providers(Date reference_date) {
  ProviderSet set;
  set.page_fetcher = std::make_shared<StubPageFetcher>();
  set.whois = std::make_shared<StubWhois>(reference_date);
  set.dns = std::make_shared<StubDns>();
  set.rank = std::make_shared<StubRank>();
  set.index = std::make_shared<StubIndex>();
  set.reports = std::make_shared<StubReports>();
  set.reference_date = reference_date;
  return set;
}

ProviderSet make_fixture_providers(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("fixture directory not found: " + dir.string());
  ProviderSet set;
  for (const auto& e : read_key_values(dir / "manifest.conf")) {
    if (e.key == "observed_on") {
      set.reference_date = parse_iso_date(e.value);
      if (!set.reference_date) throw ParseError((dir / "manifest.conf").string(), e.line, "bad date '" + e.value + "'");
    } else if (e.key == "provider_timeout_ms") {
      const auto ms = text::parse_number<long>(e.value);
      if (!ms || *ms <= 0) throw ParseError((dir / "manifest.conf").string(), e.line, "bad timeout");
      set.provider_timeout = std::chrono::milliseconds(*ms);
    }
  }
  if (!set.reference_date) throw ConfigError((dir / "manifest.conf").string() + ": observed_on is required");

  std::unordered_map<std::string, FixturePage> pages;
  {
    const auto path = dir / "pages.csv";
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto body = text::trim(line);
      if (body.empty() || body.front() == '#') continue;
      const auto fields = text::split(body, ',');
      if (fields.size() != 3) throw ParseError(path.string(), line_no, "expected url,kind,target");
      const auto kind = text::trim(fields[1]);
      if (line_no == 1 && kind == "kind") continue;
      if (kind != "html" && kind != "redirect" && kind != "status" && kind != "timeout") {
        throw ParseError(path.string(), line_no, "unknown kind '" + std::string(kind) + "'");
      }
      const auto url = parse_url(text::trim(fields[0]));
      if (!url) throw ParseError(path.string(), line_no, "bad url");
      pages[url->normalized()] = FixturePage{std::string(kind), std::string(text::trim(fields[2]))};
    }
  }
  set.page_fetcher = std::make_shared<FixturePageFetcher>(dir, std::move(pages));
  set.whois = std::make_shared<FixtureWhois>(dir / "whois");

  std::unordered_map<std::string, std::vector<std::string>> records;
  if (std::filesystem::exists(dir / "dns.csv")) {
    for (auto& [host, value] : read_pairs(dir / "dns.csv", [](const std::string&) { return true; })) {
      std::vector<std::string> addresses;
      if (value != "-") {
        for (auto part : text::split(value, ' ')) {
          if (!text::trim(part).empty()) addresses.emplace_back(text::trim(part));
        }
      }
      records[host] = std::move(addresses);
    }
  }
  set.dns = std::make_shared<FixtureDns>(std::move(records));

  const auto optional_file = [&](const char* name) -> std::optional<std::filesystem::path> {
    const auto p = dir / name;
    if (std::filesystem::exists(p)) return p;
    return std::nullopt;
  };
  const auto rank_file = optional_file("rank.csv");
  set.rank = std::make_shared<FileRank>(rank_file ? load_ranks(*rank_file) : decltype(load_ranks({})){},
                                        ProviderMode::fixture);
  const auto index_file = optional_file("index.txt");
  set.index = std::make_shared<SetIndex>(index_file ? load_entry_set(*index_file) : std::unordered_set<std::string>{},
                                         ProviderMode::fixture);
  const auto report_file = optional_file("reports.txt");
  set.reports = std::make_shared<SetReports>(
      report_file ? load_entry_set(*report_file) : std::unordered_set<std::string>{}, ProviderMode::fixture);
  return set;
}

}  // namespace nophish
