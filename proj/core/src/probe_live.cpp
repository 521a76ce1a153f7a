#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <arpa/inet.h>
#include <fcntl.h>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <unordered_map>

#include <httplib.h>

#include "nophish/config.hpp"
#include "nophish/error.hpp"
#include "nophish/probe.hpp"
#include "text.hpp"

namespace nophish {

namespace {

using Clock = std::chrono::steady_clock;

class HttpPageFetcher final : public PageFetcher {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }

  PageArtifacts fetch(const Url& url, const FetchPolicy& policy) const override {
    PageArtifacts page = PageArtifacts::empty_for(url);
    const auto deadline = Clock::now() + policy.timeout;
    Url current = url;
    std::size_t redirects = 0;
    while (true) {
      page.redirect_chain.push_back(current.normalized());
      page.final_url = current;
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (remaining.count() <= 0) {
        page.status = FetchStatus::timed_out();
        return page;
      }

      std::string origin = current.scheme + "://" + current.host;
      if (current.port) origin += ":" + std::to_string(*current.port);
      httplib::Client client(origin);
      client.set_follow_location(false);
      client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(remaining));
      client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(remaining));
      client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(remaining));
      // The scanner inspects hostile pages; a bad certificate is not a reason
      // to skip the content.
      client.enable_server_certificate_verification(false);

      int status = 0;
      std::string location;
      std::string body;
      bool truncated = false;
      bool out_of_time = false;
      std::string target = current.path.empty() ? "/" : current.path;
      if (!current.query.empty()) target += "?" + current.query;
      const httplib::Headers headers{{"User-Agent", policy.user_agent}, {"Accept", "text/html,*/*;q=0.8"}};

      auto result = client.Get(
          target, headers,
          [&](const httplib::Response& response) {
            status = response.status;
            location = response.get_header_value("Location");
            return true;
          },
          [&](const char* data, std::size_t length) {
            if (Clock::now() > deadline) {
              out_of_time = true;
              return false;
            }
            const std::size_t room = policy.max_body - std::min(policy.max_body, body.size());
            body.append(data, std::min(room, length));
            if (length > room) {
              truncated = true;
              return false;
            }
            return true;
          });

      if (out_of_time) {
        page.status = FetchStatus::timed_out();
        return page;
      }
      if (!result && !truncated) {
        const auto err = result.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
          page.status = Clock::now() >= deadline ? FetchStatus::timed_out()
                                                 : FetchStatus::failure("connection: " + httplib::to_string(err));
        } else {
          page.status = FetchStatus::failure("connection: " + httplib::to_string(err));
        }
        return page;
      }

      if (status >= 300 && status < 400 && !location.empty()) {
        if (redirects >= policy.max_redirects) {
          page.status = FetchStatus::failure("redirect-limit", status);
          return page;
        }
        auto next = resolve_reference(current, location);
        if (!next || !next->is_http()) {
          page.status = FetchStatus::failure("redirect-non-http", status);
          return page;
        }
        ++redirects;
        current = *next;
        continue;
      }

      page.raw_html = std::move(body);
      page.truncated = truncated;
      page.status = status >= 400 ? FetchStatus::failure("http-" + std::to_string(status), status)
                                  : FetchStatus::success(status);
      return page;
    }
  }
};

// --- WHOIS -----------------------------------------------------------------

class FdGuard {
 public:
  explicit FdGuard(int fd) : fd_(fd) {}
  ~FdGuard() {
    if (fd_ >= 0) ::close(fd_);
  }
  FdGuard(const FdGuard&) = delete;
  FdGuard& operator=(const FdGuard&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

int remaining_ms(Clock::time_point deadline) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return ms > 0 ? static_cast<int>(ms) : 0;
}

std::optional<std::string> whois_query(const std::string& server, const std::string& query,
                                       std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(server.c_str(), "43", &hints, &found) != 0) return std::nullopt;
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> list(found, ::freeaddrinfo);

  for (auto* ai = list.get(); ai != nullptr; ai = ai->ai_next) {
    FdGuard fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK | SOCK_CLOEXEC, ai->ai_protocol));
    if (fd.get() < 0) continue;
    if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) != 0) {
      if (errno != EINPROGRESS) continue;
      pollfd p{fd.get(), POLLOUT, 0};
      if (::poll(&p, 1, remaining_ms(deadline)) <= 0) continue;
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) continue;
    }
    const std::string line = query + "\r\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
      pollfd p{fd.get(), POLLOUT, 0};
      if (::poll(&p, 1, remaining_ms(deadline)) <= 0) return std::nullopt;
      const auto n = ::send(fd.get(), line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return std::nullopt;
      sent += static_cast<std::size_t>(n);
    }
    std::string response;
    char buffer[4096];
    while (response.size() < 256 * 1024) {
      pollfd p{fd.get(), POLLIN, 0};
      if (::poll(&p, 1, remaining_ms(deadline)) <= 0) return std::nullopt;
      const auto n = ::recv(fd.get(), buffer, sizeof(buffer), 0);
      if (n < 0) return std::nullopt;
      if (n == 0) break;
      response.append(buffer, static_cast<std::size_t>(n));
    }
    return response;
  }
  return std::nullopt;
}

std::optional<std::string> field_value(std::string_view text_body, std::string_view wanted_key) {
  for (auto raw : text::split(text_body, '\n')) {
    const auto line = text::trim(raw);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    if (text::iequals(text::trim(line.substr(0, colon)), wanted_key)) {
      const auto value = text::trim(line.substr(colon + 1));
      if (!value.empty()) return std::string(value);
    }
  }
  return std::nullopt;
}

class LiveWhois final : public WhoisProvider {
 public:
  explicit LiveWhois(std::chrono::milliseconds timeout) : timeout_(timeout) {}
  ProviderMode mode() const override { return ProviderMode::live; }

  std::optional<WhoisRecord> lookup(std::string_view domain) const override {
    if (domain.empty() || is_ip_literal(domain)) return std::nullopt;
    const auto tld_pos = domain.rfind('.');
    const std::string tld(tld_pos == std::string_view::npos ? domain : domain.substr(tld_pos + 1));
    const auto server = server_for(tld);
    if (!server) return std::nullopt;
    auto response = whois_query(*server, std::string(domain), timeout_);
    if (!response) return std::nullopt;
    if (auto registrar_server = field_value(*response, "Registrar WHOIS Server")) {
      std::string host = text::to_lower(*registrar_server);
      if (const auto p = host.find("://"); p != std::string::npos) host = host.substr(p + 3);
      if (!host.empty() && host != *server) {
        if (auto detail = whois_query(host, std::string(domain), timeout_)) *response += "\n" + *detail;
      }
    }
    return parse_whois(*response, domain);
  }

 private:
  std::optional<std::string> server_for(const std::string& tld) const {
    {
      std::lock_guard lock(mutex_);
      if (auto it = servers_.find(tld); it != servers_.end()) return it->second;
    }
    auto response = whois_query("whois.iana.org", tld, timeout_);
    if (!response) return std::nullopt;
    auto server = field_value(*response, "whois");
    if (!server) server = field_value(*response, "refer");
    if (!server) return std::nullopt;
    std::lock_guard lock(mutex_);
    servers_[tld] = *server;
    return server;
  }

  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::string> servers_;
};

// --- DNS -------------------------------------------------------------------

class SystemDns final : public DnsProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }
  std::optional<std::vector<std::string>> resolve(std::string_view host) const override {
    std::string name(host);
    if (name.size() >= 2 && name.front() == '[') name = name.substr(1, name.size() - 2);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const int rc = ::getaddrinfo(name.c_str(), nullptr, &hints, &found);
    if (rc == EAI_NONAME
#ifdef EAI_NODATA
        || rc == EAI_NODATA
#endif
    ) {
      return std::vector<std::string>{};
    }
    if (rc != 0) return std::nullopt;
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> list(found, ::freeaddrinfo);
    std::vector<std::string> addresses;
    for (auto* ai = list.get(); ai != nullptr; ai = ai->ai_next) {
      char buffer[INET6_ADDRSTRLEN] = {};
      const void* src = ai->ai_family == AF_INET
                            ? static_cast<const void*>(&reinterpret_cast<sockaddr_in*>(ai->ai_addr)->sin_addr)
                            : static_cast<const void*>(&reinterpret_cast<sockaddr_in6*>(ai->ai_addr)->sin6_addr);
      if (::inet_ntop(ai->ai_family, src, buffer, sizeof(buffer)) != nullptr) {
        std::string a(buffer);
        if (std::find(addresses.begin(), addresses.end(), a) == addresses.end()) addresses.push_back(a);
      }
    }
    return addresses;
  }
};

// Providers with no data source configured: always unknown.
class UnknownRank final : public RankProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }
  std::optional<TrafficRank> rank(std::string_view, std::string_view) const override { return std::nullopt; }
};

class UnknownIndex final : public IndexProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }
  std::optional<bool> indexed(const Url&, std::string_view) const override { return std::nullopt; }
};

class UnknownReports final : public ReportProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::live; }
  std::optional<bool> listed(std::span<const std::string>) const override { return std::nullopt; }
};

}  // namespace

std::shared_ptr<const PageFetcher> make_http_page_fetcher() { return std::make_shared<HttpPageFetcher>(); }

LiveProviderConfig LiveProviderConfig::from_environment() {
  LiveProviderConfig config;
  if (auto v = env_value("NOPHISH_RANK_FILE")) config.rank_file = *v;
  if (auto v = env_value("NOPHISH_REPORT_FILE")) config.report_file = *v;
  if (auto v = env_value("NOPHISH_INDEX_FILE")) config.index_file = *v;
  return config;
}

ProviderSet make_live_providers(const LiveProviderConfig& config) {
  ProviderSet set;
  set.page_fetcher = make_http_page_fetcher();
  set.whois = std::make_shared<LiveWhois>(config.whois_timeout);
  set.dns = std::make_shared<SystemDns>();
  set.rank = config.rank_file ? make_file_rank_provider(*config.rank_file, ProviderMode::live)
                              : std::shared_ptr<const RankProvider>(std::make_shared<UnknownRank>());
  set.index = config.index_file ? make_file_index_provider(*config.index_file, ProviderMode::live)
                                : std::shared_ptr<const IndexProvider>(std::make_shared<UnknownIndex>());
  set.reports = config.report_file ? make_file_report_provider(*config.report_file, ProviderMode::live)
                                   : std::shared_ptr<const ReportProvider>(std::make_shared<UnknownReports>());
  set.provider_timeout = config.provider_timeout;
  return set;
}

}  // namespace nophish
