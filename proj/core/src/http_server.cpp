#include <httplib.h>

#include "nophish/error.hpp"
#include "nophish/service.hpp"
#include "nophish/version.hpp"

namespace nophish {

bool origin_allowed(std::string_view origin, const std::vector<std::string>& allowed) noexcept {
  if (origin.empty()) return false;
  for (const auto& pattern : allowed) {
    if (pattern == "*") return true;
    if (!pattern.empty() && pattern.back() == '*') {
      if (origin.starts_with(std::string_view(pattern).substr(0, pattern.size() - 1))) return true;
    } else if (origin == pattern) {
      return true;
    }
  }
  return false;
}

struct ScanServer::Impl {
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

}  // namespace

ScanServer::ScanServer(std::shared_ptr<const Scanner> scanner, ServerConfig config)
    : impl_(std::make_unique<Impl>()), scanner_(std::move(scanner)), config_(std::move(config)) {
  if (!scanner_) throw ConfigError("server needs a scanner");
  if (config_.threads == 0) throw ConfigError("server needs at least one worker thread");
  if (config_.port < 0 || config_.port > 65535) throw ConfigError("port out of range");

  auto& server = impl_->server;
  const auto threads = config_.threads;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server.set_payload_max_length(64 * 1024);
  // SO_REUSEADDR only; no SO_REUSEPORT.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });

  const auto cors = [this](const httplib::Request& req, httplib::Response& res) {
    const auto origin = req.get_header_value("Origin");
    if (origin_allowed(origin, config_.allowed_origins)) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Max-Age", "600");
    }
  };

  server.Options(R"(/.*)", [this, cors](const httplib::Request& req, httplib::Response& res) {
    ++counters_.requests;
    if (!origin_allowed(req.get_header_value("Origin"), config_.allowed_origins)) {
      res.status = 403;
      return;
    }
    cors(req, res);
    res.status = 204;
  });

  server.Post("/detectphishing", [this, cors](const httplib::Request& req, httplib::Response& res) {
    ++counters_.requests;
    cors(req, res);
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      ++counters_.failures;
      return send_error(res, 400, "request body is not valid JSON");
    }
    if (!body.is_object() || body.size() != 1 || !body.contains("url") || !body["url"].is_string()) {
      ++counters_.failures;
      return send_error(res, 400, "request body must be {\"url\": \"<string>\"}");
    }
    try {
      const auto report = scanner_->scan(body["url"].get<std::string>());
      ++counters_.scans;
      send_json(res, 200, to_json(report));
    } catch (const InvalidUrl& e) {
      ++counters_.failures;
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      ++counters_.failures;
      send_error(res, 500, std::string("scan failed: ") + e.what());
    }
  });

  server.Get("/health", [this, cors](const httplib::Request& req, httplib::Response& res) {
    ++counters_.requests;
    cors(req, res);
    send_json(res, 200,
              {{"status", "ok"},
               {"model_id", scanner_->model_id()},
               {"scans", counters_.scans.load()},
               {"failures", counters_.failures.load()}});
  });

  server.Get("/version", [this, cors](const httplib::Request& req, httplib::Response& res) {
    ++counters_.requests;
    cors(req, res);
    send_json(res, 200,
              {{"version", std::string(kVersion)},
               {"model_id", scanner_->model_id()},
               {"algorithm", std::string(to_string(scanner_->model().algorithm()))},
               {"model_format", kModelFormatVersion}});
  });

  server.set_exception_handler([this](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    ++counters_.failures;
    std::string message = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send_error(res, 500, message);
  });

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "not found");
  });
}

ScanServer::~ScanServer() { stop(); }

void ScanServer::bind() {
  auto& server = impl_->server;
  if (config_.port == 0) {
    port_ = server.bind_to_any_port(config_.host);
    if (port_ <= 0) throw Error(ErrorCode::startup, "cannot bind " + config_.host + " to a free port");
  } else {
    if (!server.bind_to_port(config_.host, config_.port)) {
      throw Error(ErrorCode::startup,
                  "cannot bind " + config_.host + ":" + std::to_string(config_.port) + " (port busy or not permitted)");
    }
    port_ = config_.port;
  }
}

void ScanServer::run() {
  if (port_ == 0) throw Error(ErrorCode::startup, "server is not bound");
  impl_->server.listen_after_bind();
}

void ScanServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace nophish
