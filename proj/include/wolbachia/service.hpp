#pragma once

// HTTP/JSON facade. handle_request is the whole API minus sockets; the
// httplib server only routes bodies to it and adds CORS headers.

#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace wolbachia::service {

struct Response {
    int status = 200;
    std::string body;
};

struct Config {
    /// Sweep threads per request (0 = OpenMP default, still capped by
    /// WOLBACHIA_THREADS).
    int sweep_threads = 1;
    std::string cors_origin = "*";
};

/// `endpoint` is the request path, e.g. "/plan". Never throws.
Response handle_request(std::string_view endpoint, std::string_view body, const Config& cfg = {});

/// Registers every POST endpoint plus OPTIONS preflight and GET /health.
void install_routes(httplib::Server& server, const Config& cfg);

/// Endpoint paths served by handle_request.
inline constexpr const char* kEndpoints[] = {"/equilibria", "/simulate",   "/separatrix",
                                             "/min-release", "/plan", "/simulate-impulsive"};

}  // namespace wolbachia::service
