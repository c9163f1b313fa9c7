#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "alarm2action/service.hpp"

namespace a2a {

/// HTTP status for a service error code (500 for anything unmapped).
int http_status_for(const std::string& error_code);

/// JSON-over-HTTP front end for a RecommendationService.
///
///   POST /api/v1/turbines/{id}/alarms            {"events": [{"time_on", "text"}]}
///   GET  /api/v1/turbines/{id}/recommendations   ?k=3
///   GET  /api/v1/recommendations                 ?status=pending&limit=50
///   GET  /api/v1/recommendations/{id}
///   POST /api/v1/feedback                        FeedbackRecord
///   POST /api/v1/retrain                         optional {"policy": {...}}
///   GET  /api/v1/status
///   GET  /api/v1/events                          ?limit=50
///
/// Errors are {"error": <code>, "message": <text>}.
class HttpApi {
public:
    explicit HttpApi(RecommendationService& service);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Blocks until stop().
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it (or -1); serve with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace a2a
