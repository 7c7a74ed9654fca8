#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace eurocurate {

struct HttpTarget {
    std::string scheme_host_port;  // e.g. "http://127.0.0.1:8080"
    std::string path;              // e.g. "/score"
};

/// Splits an absolute http(s) URL; throws ConfigError when malformed.
HttpTarget split_url(const std::string& url);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{100};
    std::chrono::milliseconds timeout{30000};
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// POSTs a JSON body, retrying transport failures and 5xx/429 statuses with
/// exponential backoff. Returns the last response (or nullopt when the
/// transport never succeeded).
std::optional<HttpResponse> post_json(const std::string& url, const std::string& body, const RetryPolicy& retry,
                                      const std::optional<std::string>& bearer_token = std::nullopt);

}  // namespace eurocurate
