#include "eurocurate/http_client.hpp"

#include <thread>

#include <httplib.h>

#include "eurocurate/errors.hpp"

namespace eurocurate {

HttpTarget split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("URL lacks a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    if (path_start == scheme_end + 3) throw ConfigError("URL lacks a host: " + url);
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::optional<HttpResponse> post_json(const std::string& url, const std::string& body, const RetryPolicy& retry,
                                      const std::optional<std::string>& bearer_token) {
    const HttpTarget target = split_url(url);
    httplib::Client client(target.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(retry.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(retry.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (bearer_token) headers.emplace("Authorization", "Bearer " + *bearer_token);

    std::optional<HttpResponse> last;
    auto backoff = retry.initial_backoff;
    for (int attempt = 0; attempt < std::max(1, retry.max_attempts); ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(target.path, headers, body, "application/json");
        if (!res) continue;
        last = HttpResponse{res->status, res->body};
        if (res->status < 500 && res->status != 429) break;
    }
    return last;
}

}  // namespace eurocurate
