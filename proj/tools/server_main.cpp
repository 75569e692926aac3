#include <cstdlib>
#include <iostream>
#include <string>

#include <httplib.h>

#include "wolbachia/service.hpp"

int main() {
    int port = 8080;
    if (const char* env = std::getenv("PORT")) {
        try {
            port = std::stoi(env);
        } catch (const std::exception&) {
            std::cerr << "invalid PORT '" << env << "'\n";
            return 1;
        }
    }
    wolbachia::service::Config cfg;
    if (const char* origin = std::getenv("WOLBACHIA_CORS_ORIGIN")) cfg.cors_origin = origin;

    httplib::Server server;
    wolbachia::service::install_routes(server, cfg);
    std::cerr << "listening on 0.0.0.0:" << port << "\n";
    if (!server.listen("0.0.0.0", port)) {
        std::cerr << "cannot bind port " << port << "\n";
        return 1;
    }
}
