#include <catch_amalgamated.hpp>

#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "wolbachia/service.hpp"

using nlohmann::json;
using wolbachia::service::handle_request;
using wolbachia::service::kEndpoints;

namespace {

struct Reply {
    int status;
    json body;
};

Reply post(std::string_view ep, const json& body) {
    const auto r = handle_request(ep, body.dump());
    return {r.status, json::parse(r.body)};
}

json openapi() {
    std::ifstream in(WOLBACHIA_OPENAPI_FILE);
    return json::parse(in);
}

const json kParams = {{"rho_n", 4.55},   {"rho_w", 2.27},         {"alpha_n", 0.03333},
                      {"alpha_w", 0.06666}, {"beta_n", 2.61258e-3}, {"beta_w", 3.12792e-3}};

json params_with(const std::string& key, json value) {
    json p = kParams;
    p[key] = std::move(value);
    return p;
}

}  // namespace

TEST_CASE("every endpoint answers a minimal request", "[service]") {
    const std::pair<const char*, json> cases[] = {
        {"/equilibria", {{"preset", "wmelpop"}}},
        {"/simulate", {{"params", kParams}, {"n0", 100}, {"w0", 50}, {"t_max", 50}}},
        {"/separatrix", {{"preset", "wmelpop"}, {"max_points", 50}}},
        {"/min-release", {{"preset", "wmelpop"}, {"lambdas", {0.5}}}},
        {"/plan", {{"preset", "wmelpop"}, {"lambda", 0.5}, {"tau", 1}, {"budget", 9}}},
        {"/simulate-impulsive", {{"preset", "wmelpop"}, {"n0", 1000}, {"releases", {{{"t", 0}, {"size", 2000}}}}}},
    };
    for (const auto& [ep, body] : cases) {
        INFO(ep);
        const Reply r = post(ep, body);
        REQUIRE(r.status == 200);
        CHECK(r.body["request_hash"].get<std::string>().size() == 16);
        CHECK(r.body.contains("result"));
        CHECK(r.body["diagnostics"]["runtime_ms"].get<double>() >= 0.0);
        for (const auto& [k, v] : r.body["diagnostics"]["tolerances"].items()) CHECK(v.is_string());
    }
}

TEST_CASE("endpoint payloads", "[service]") {
    SECTION("equilibria") {
        const Reply r = post("/equilibria", {{"params", kParams}});
        CHECK(r.body["result"]["n_sharp"].get<double>() == Catch::Approx(1728.816).epsilon(1e-6));
        CHECK(r.body["result"]["equilibria"].size() == 4);
    }
    SECTION("simulate") {
        const Reply r = post("/simulate", {{"preset", "wmelpop"}, {"n0", 0}, {"w0", 10}, {"stop_on_capture", true}});
        CHECK(r.body["result"]["terminal_reason"] == "converged_to_attractor");
        CHECK(r.body["result"]["captured"] == "ToEW");
        CHECK(r.body["result"]["final_state"]["n"] == 0.0);
        CHECK(r.body["diagnostics"]["tolerances"]["rel_tol"] == "1e-09");
    }
    SECTION("separatrix") {
        const Reply r = post("/separatrix", {{"preset", "wmelpop"}, {"max_points", 40}, {"include_manifolds", true}});
        const json& res = r.body["result"];
        CHECK(res["points"].size() == 40);
        CHECK(res["cone_unordered"].get<bool>());
        CHECK(res["saddle"]["n"].get<double>() == Catch::Approx(290.07).epsilon(1e-4));
        CHECK(res["unstable_manifold"]["to_en"].size() <= 40);

        const Reply b = post("/separatrix", {{"preset", "wmelpop"}, {"method", "bisection"}, {"points", 4}});
        REQUIRE(b.status == 200);
        CHECK(b.body["result"]["provenance"] == "bisection");
        CHECK(b.body["result"]["points"].size() == 4);
        CHECK(b.body["diagnostics"]["tolerances"]["tol"] == "1e-06");
    }
    SECTION("min-release defaults to four fractions") {
        const Reply r = post("/min-release", {{"preset", "wmelpop"}});
        const json& rows = r.body["result"]["rows"];
        REQUIRE(rows.size() == 4);
        CHECK(rows[3]["lambda_hat"].get<double>() == Catch::Approx(1.85).margin(0.02));
    }
    SECTION("plan reproduces a tradeoff row") {
        const Reply r = post("/plan", {{"preset", "wmelpop"}, {"lambda", 0.75}, {"tau", 3}, {"budget", 4}});
        REQUIRE(r.status == 200);
        const json& row = r.body["result"]["rows"][0];
        CHECK(row["lambda_hat"].get<double>() == Catch::Approx(1.178).margin(0.05));
        CHECK(std::abs(row["n"].get<int>() - 4) <= 1);

        const Reply many = post("/plan", {{"preset", "wmelpop"},
                                          {"cells", {{{"lambda", 1}, {"tau", 1}, {"budget", 12}},
                                                     {{"n0", 432.2}, {"tau", 1}, {"budget", 5}}}}});
        REQUIRE(many.status == 200);
        CHECK(many.body["result"]["rows"].size() == 2);
        CHECK(many.body["result"]["rows"][0]["lambda_hat"].get<double>() == Catch::Approx(0.43).margin(0.05));
    }
    SECTION("simulate-impulsive with a schedule") {
        const Reply r = post("/simulate-impulsive",
                             {{"preset", "wmelpop"},
                              {"n0", 1728.815959702669},
                              {"schedule", {{"size_frac", 0.43}, {"tau", 1}, {"max_releases", 30}}}});
        REQUIRE(r.status == 200);
        CHECK(r.body["result"]["outcome"] == "replacement");
        CHECK(std::abs(r.body["result"]["releases_used"].get<int>() - 12) <= 1);
    }
}

TEST_CASE("schema violations are 400", "[service]") {
    const auto raw = handle_request("/equilibria", "{\"preset\": ");
    CHECK(raw.status == 400);
    CHECK(json::parse(raw.body)["error"]["code"] == "schema_violation");
    CHECK(json::parse(raw.body)["request_hash"].get<std::string>().size() == 16);

    const json bad[] = {
        {{"preset", "wmelpop"}, {"colour", "blue"}},
        json::object(),
        {{"preset", "wmelpop"}, {"params", kParams}},
        {{"preset", "other"}},
        {{"params", {{"rho_n", 4.55}}}},
        {{"params", params_with("gamma", 1.0)}},
        {{"params", params_with("rho_n", "4.55")}},
        json::array({1, 2}),
    };
    for (const auto& b : bad) {
        INFO(b.dump());
        const Reply r = post("/equilibria", b);
        CHECK(r.status == 400);
        CHECK(r.body["error"]["code"] == "schema_violation");
    }
    CHECK(post("/simulate", {{"preset", "wmelpop"}, {"n0", 1}}).status == 400);
    CHECK(post("/simulate", {{"preset", "wmelpop"}, {"n0", 1}, {"w0", 1}, {"options", {{"rtol", 1}}}}).status == 400);
    CHECK(post("/simulate", {{"preset", "wmelpop"}, {"n0", 1}, {"w0", 1}, {"options", {{"rel_tol", 0}}}}).status ==
          400);
    CHECK(post("/separatrix", {{"preset", "wmelpop"}, {"points", 5000}}).status == 400);
    CHECK(post("/separatrix", {{"preset", "wmelpop"}, {"method", "guess"}}).status == 400);
    CHECK(post("/plan", {{"preset", "wmelpop"}, {"lambda", 1}, {"n0", 100}, {"tau", 1}, {"budget", 3}}).status == 400);
    CHECK(post("/plan", {{"preset", "wmelpop"}, {"lambda", 1}, {"tau", 1}, {"budget", 2.5}}).status == 400);
    CHECK(post("/plan", {{"preset", "wmelpop"}, {"cells", json::array()}}).status == 400);
    CHECK(post("/min-release", {{"preset", "wmelpop"}, {"n0", {1}}, {"lambdas", {1}}}).status == 400);
    CHECK(post("/simulate-impulsive", {{"preset", "wmelpop"}, {"n0", 1}}).status == 400);
}

TEST_CASE("out-of-scope inputs are 422", "[service]") {
    const Reply neg = post("/simulate", {{"preset", "wmelpop"}, {"n0", -1}, {"w0", 1}});
    CHECK(neg.status == 422);
    CHECK(neg.body["error"]["code"] == "validation_failed");

    json infeasible = kParams;
    infeasible["beta_n"] = 7.83774e-3;
    CHECK(post("/plan", {{"params", infeasible}, {"lambda", 1}, {"tau", 1}, {"budget", 3}}).status == 422);
    CHECK(post("/separatrix", {{"params", infeasible}}).status == 422);
    // equilibria still reports an infeasible set
    CHECK(post("/equilibria", {{"params", infeasible}}).status == 200);

    json negative = kParams;
    negative["alpha_w"] = -0.1;
    CHECK(post("/equilibria", {{"params", negative}}).status == 422);
    CHECK(post("/plan", {{"preset", "wmelpop"}, {"lambda", 1}, {"tau", 0}, {"budget", 3}}).status == 422);
    CHECK(post("/min-release", {{"preset", "wmelpop"}, {"n0", {-3}}}).status == 422);
}

TEST_CASE("unknown endpoints are 404", "[service]") {
    const Reply r = post("/nowhere", json::object());
    CHECK(r.status == 404);
    CHECK(r.body["error"]["code"] == "not_found");
}

TEST_CASE("an exhausted time budget is 202 without partial results", "[service]") {
    const Reply r = post("/separatrix",
                         {{"preset", "wmelpop"}, {"method", "bisection"}, {"points", 1024}, {"budget_ms", 0.001}});
    CHECK(r.status == 202);
    CHECK(r.body["error"]["code"] == "budget_exceeded");
    CHECK_FALSE(r.body.contains("result"));

    const Reply m = post("/min-release", {{"preset", "wmelpop"}, {"lambdas", json::array({0.1, 0.2, 0.3, 0.4, 0.5})},
                                          {"budget_ms", 0.001}});
    CHECK(m.status == 202);
    CHECK(post("/min-release", {{"preset", "wmelpop"}, {"lambdas", {0.5}}, {"budget_ms", 60000}}).status == 200);
    CHECK(post("/min-release", {{"preset", "wmelpop"}, {"budget_ms", -1}}).status == 400);
}

TEST_CASE("request hash and idempotence", "[service]") {
    const std::string a = R"({"preset":"wmelpop","n0":100,"w0":50,"t_max":30})";
    const std::string b = R"({ "t_max": 30, "w0": 50,
                               "n0": 100, "preset": "wmelpop" })";
    const auto ra = handle_request("/simulate", a), rb = handle_request("/simulate", b);
    const json ja = json::parse(ra.body), jb = json::parse(rb.body);
    CHECK(ja["request_hash"] == jb["request_hash"]);
    CHECK(ja["result"] == jb["result"]);
    CHECK(ja["result"].dump() == jb["result"].dump());

    const json other = json::parse(handle_request("/simulate", R"({"preset":"wmelpop","n0":101,"w0":50,"t_max":30})").body);
    CHECK(other["request_hash"] != ja["request_hash"]);
    // same body, different endpoint
    const json eq = json::parse(handle_request("/equilibria", R"({"preset":"wmelpop"})").body);
    const json sep = json::parse(handle_request("/separatrix", R"({"preset":"wmelpop"})").body);
    CHECK(eq["request_hash"] != sep["request_hash"]);
    // errors echo the hash too
    CHECK(json::parse(handle_request("/simulate", R"({"preset":"wmelpop"})").body)["request_hash"].is_string());
}

TEST_CASE("published document matches the served API", "[service][openapi]") {
    const json doc = openapi();
    CHECK(doc["openapi"].get<std::string>().rfind("3.", 0) == 0);
    std::set<std::string> posts;
    for (const auto& [path, item] : doc["paths"].items()) {
        if (item.contains("post")) posts.insert(path);
    }
    const std::set<std::string> served(std::begin(kEndpoints), std::end(kEndpoints));
    CHECK(posts == served);
    CHECK(doc["paths"].contains("/health"));

    for (const auto& ep : served) {
        INFO(ep);
        const json& op = doc["paths"][ep]["post"];
        for (const char* code : {"200", "400", "422", "500"}) CHECK(op["responses"].contains(code));
        const json& example = op["requestBody"]["content"]["application/json"]["example"];
        const Reply r = post(ep, example);
        CHECK(r.status == 200);
    }
    for (const auto& [name, schema] : doc["components"]["schemas"].items()) {
        if (name.size() > 7 && name.compare(name.size() - 7, 7, "Request") == 0) {
            INFO(name);
            CHECK(schema["additionalProperties"] == false);
        }
    }
}

TEST_CASE("loopback server: CORS, health and concurrent requests", "[service][http]") {
    httplib::Server server;
    wolbachia::service::Config cfg;
    cfg.cors_origin = "http://localhost:5173";
    wolbachia::service::install_routes(server, cfg);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    const auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->get_header_value("Access-Control-Allow-Origin") == "http://localhost:5173");

    const auto pre = client.Options("/plan");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    const auto doc = client.Get("/openapi.json");
    REQUIRE(doc);
    CHECK(doc->status == 200);
    CHECK(json::parse(doc->body) == openapi());

    const auto missing = client.Post("/nowhere", "{}", "application/json");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    const std::pair<std::string, json> mix[] = {
        {"/equilibria", {{"preset", "wmelpop"}}},
        {"/simulate", {{"preset", "wmelpop"}, {"n0", 500}, {"w0", 300}, {"t_max", 100}}},
        {"/min-release", {{"preset", "wmelpop"}, {"lambdas", {0.25, 1}}}},
        {"/plan", {{"preset", "wmelpop"}, {"lambda", 0.25}, {"tau", 3}, {"budget", 3}}},
    };
    std::vector<std::future<std::pair<int, json>>> futures;
    for (int i = 0; i < 32; ++i) {
        const auto& [ep, body] = mix[i % 4];
        futures.push_back(std::async(std::launch::async, [port, ep = ep, body = body.dump()] {
            httplib::Client c("127.0.0.1", port);
            c.set_read_timeout(120, 0);
            const auto res = c.Post(ep, body, "application/json");
            if (!res) return std::pair<int, json>{-1, json()};
            return std::pair<int, json>{res->status, json::parse(res->body)};
        }));
    }
    std::vector<std::pair<int, json>> replies;
    for (auto& f : futures) replies.push_back(f.get());
    for (int i = 0; i < 32; ++i) {
        INFO("request " << i);
        REQUIRE(replies[i].first == 200);
        const Reply direct = post(mix[i % 4].first, mix[i % 4].second);
        CHECK(replies[i].second["request_hash"] == direct.body["request_hash"]);
        CHECK(replies[i].second["result"].dump() == replies[i % 4].second["result"].dump());
        CHECK(replies[i].second["result"].dump() == direct.body["result"].dump());
    }

    server.stop();
    th.join();
}
