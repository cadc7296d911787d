#pragma once

#include "chardial/clock.hpp"
#include "chardial/dialogue.hpp"
#include "chardial/eval.hpp"
#include "chardial/gateway.hpp"
#include "chardial/refinement.hpp"
#include "chardial/rng.hpp"
#include "chardial/synthesis.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace chardial {

inline constexpr const char* kServiceVersion = "0.1.0";

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    /// Directory holding events.jsonl; must exist and be writable.
    std::string storage_dir;
    std::string providers_path;
    std::uint64_t seed = 0;
    /// Shared token for service-level endpoints (create session, ratings, queues, reports).
    std::string shared_token;
    std::chrono::seconds token_ttl{std::chrono::hours(12)};
    std::optional<std::string> cassette_path;
    CassetteMode cassette_mode = CassetteMode::Replay;
};

/// {"host","port","storage_dir","providers","seed","shared_token","token_ttl_seconds",
///  "cassette","cassette_mode"}
ServiceConfig load_service_config(const std::string& path);

struct ApiSessionToken {
    std::string token;
    std::string annotator;
    std::string session_id;
    Clock::time_point expiry;
};

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
};

enum class SessionMode { Single, Pairwise, Prototype };
std::string_view to_string(SessionMode m) noexcept;

/// Annotation service core, independent of the HTTP layer. Every state change
/// appends exactly one event to `<storage_dir>/events.jsonl`; constructing a
/// service over an existing log replays it. Endpoints are listed in the README.
class AnnotationService {
  public:
    /// Throws IoError when the storage directory is missing or not writable.
    AnnotationService(ServiceConfig config, Gateway& gateway, Clock& clock);
    ~AnnotationService();

    AnnotationService(const AnnotationService&) = delete;
    AnnotationService& operator=(const AnnotationService&) = delete;

    ApiResponse handle(const std::string& method, const std::string& path, const std::string& body,
                       const std::string& authorization = {});

    /// Deterministic dump of the service state, for replay comparisons.
    std::string snapshot() const;
    std::size_t event_count() const;
    const ServiceConfig& config() const noexcept { return config_; }

  private:
    struct Impl;
    ServiceConfig config_;
    std::unique_ptr<Impl> impl_;
};

/// cpp-httplib front end forwarding every request to the core.
class HttpServer {
  public:
    explicit HttpServer(AnnotationService& service);
    ~HttpServer();

    /// Binds; throws IoError on bind failure. Returns the bound port (useful with port 0).
    int bind(const std::string& host, int port);
    /// Serves until stop(). Blocking.
    void run();
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace chardial
