#include "wolbachia/service.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>

#include "wolbachia/report.hpp"
#include "wolbachia/sweep.hpp"

namespace wolbachia::service {

namespace {

using io::json;
using Clock = std::chrono::steady_clock;

// Body does not match the published schema (HTTP 400).
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deadline passed before the sweep finished (HTTP 202, no partial results).
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw SchemaError(where_ + " must be a JSON object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key);
    }

    double number(const std::string& key) {
        if (!has(key)) throw SchemaError(where_ + ": missing required field '" + key + "'");
        return as_number(obj_.at(key), key);
    }
    double number(const std::string& key, double fallback) { return has(key) ? as_number(obj_.at(key), key) : fallback; }

    int integer(const std::string& key) {
        if (!has(key)) throw SchemaError(where_ + ": missing required field '" + key + "'");
        return as_integer(obj_.at(key), key);
    }
    int integer(const std::string& key, int fallback) { return has(key) ? as_integer(obj_.at(key), key) : fallback; }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (!v.is_boolean()) throw SchemaError(where_ + ": '" + key + "' must be a boolean");
        return v.get<bool>();
    }

    std::string choice(const std::string& key, std::initializer_list<const char*> allowed, const char* fallback) {
        if (!has(key)) return fallback;
        const json& v = obj_.at(key);
        if (v.is_string()) {
            for (const char* a : allowed) {
                if (v.get<std::string>() == a) return a;
            }
        }
        std::string list;
        for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
        throw SchemaError(where_ + ": '" + key + "' must be one of: " + list);
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = obj_.at(key);
        if (!v.is_array() || v.empty()) throw SchemaError(where_ + ": '" + key + "' must be a nonempty array of numbers");
        std::vector<double> out;
        for (const auto& x : v) out.push_back(as_number(x, key));
        return out;
    }

    const json& object(const std::string& key) {
        const json& v = obj_.at(key);
        if (!v.is_object()) throw SchemaError(where_ + ": '" + key + "' must be an object");
        return v;
    }

    const json& array(const std::string& key) {
        const json& v = obj_.at(key);
        if (!v.is_array()) throw SchemaError(where_ + ": '" + key + "' must be an array");
        return v;
    }

    /// Call after all reads.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw SchemaError(where_ + ": unknown field '" + it.key() + "'");
        }
    }

private:
    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) throw SchemaError(where_ + ": '" + key + "' must be a number");
        return v.get<double>();
    }
    int as_integer(const json& v, const std::string& key) const {
        if (!v.is_number_integer()) throw SchemaError(where_ + ": '" + key + "' must be an integer");
        const auto x = v.get<long long>();
        if (x < INT32_MIN || x > INT32_MAX) throw SchemaError(where_ + ": '" + key + "' out of range");
        return static_cast<int>(x);
    }

    const json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

struct Context {
    Config cfg;
    json tolerances = json::object();
    sweep::Deadline deadline;
};

ModelParameters read_params(Fields& f) {
    const bool inline_params = f.has("params");
    const bool preset = f.has("preset");
    if (inline_params == preset) throw SchemaError("exactly one of 'params' or 'preset' is required");
    if (preset) {
        f.choice("preset", {"wmelpop"}, "wmelpop");
        return ModelParameters::wmelpop();
    }
    const json& pj = f.object("params");
    Fields pf(pj, "params");
    ModelParameters p;
    p.rho_n = pf.number("rho_n");
    p.rho_w = pf.number("rho_w");
    p.alpha_n = pf.number("alpha_n");
    p.alpha_w = pf.number("alpha_w");
    p.beta_n = pf.number("beta_n");
    p.beta_w = pf.number("beta_w");
    pf.finish();
    return p;
}

IntegrationOptions read_ode(Fields& f, Context& ctx) {
    IntegrationOptions o;
    if (f.has("options")) {
        Fields of(f.object("options"), "options");
        o.rel_tol = of.number("rel_tol", o.rel_tol);
        o.abs_tol = of.number("abs_tol", o.abs_tol);
        o.t_max = of.number("t_max", o.t_max);
        o.max_step = of.number("max_step", o.max_step);
        of.finish();
    }
    validate_options(o);
    ctx.tolerances["rel_tol"] = io::format_number(o.rel_tol);
    ctx.tolerances["abs_tol"] = io::format_number(o.abs_tol);
    return o;
}

double read_tol(Fields& f, Context& ctx) {
    const double tol = f.number("tol", 1e-6);
    if (!(tol > 0.0 && tol < 1.0)) throw SchemaError("'tol' must lie in (0, 1)");
    ctx.tolerances["tol"] = io::format_number(tol);
    return tol;
}

void read_budget(Fields& f, Context& ctx) {
    if (!f.has("budget_ms")) return;
    const double ms = f.number("budget_ms");
    if (!(ms > 0.0)) throw SchemaError("'budget_ms' must be positive");
    ctx.deadline = Clock::now() + std::chrono::microseconds(static_cast<long long>(ms * 1000.0));
}

void check_deadline(const Context& ctx) {
    if (ctx.deadline && Clock::now() > *ctx.deadline) {
        throw BudgetExceeded("time budget exceeded; retry without budget_ms or with a larger one");
    }
}

// n0 given in individuals or as a fraction of n_sharp.
double read_n0(Fields& f, const ModelParameters& p, const char* abs_key, const char* frac_key) {
    const bool a = f.has(abs_key), b = f.has(frac_key);
    if (a == b) throw SchemaError(std::string("exactly one of '") + abs_key + "' or '" + frac_key + "' is required");
    return a ? f.number(abs_key) : f.number(frac_key) * p.n_sharp();
}

std::vector<PopulationState> thin(const std::vector<PopulationState>& pts, int max_points) {
    if (max_points <= 0 || pts.size() <= static_cast<std::size_t>(max_points)) return pts;
    std::vector<PopulationState> out;
    const std::size_t last = pts.size() - 1;
    for (int k = 0; k < max_points; ++k) out.push_back(pts[last * static_cast<std::size_t>(k) / (max_points - 1)]);
    return out;
}

json do_equilibria(Fields& f, Context&) {
    const ModelParameters p = read_params(f);
    f.finish();
    equilibria(p);
    return io::equilibria_report(p);
}

json do_simulate(Fields& f, Context& ctx) {
    const ModelParameters p = read_params(f);
    IntegrationOptions o = read_ode(f, ctx);
    const double n0 = f.number("n0");
    const double w0 = f.number("w0");
    o.t_max = f.number("t_max", o.t_max);
    o.stop_on_capture = f.boolean("stop_on_capture", false);
    f.finish();
    validate_options(o);
    require_in_scope(p);
    const Trajectory tr = integrate(p, {n0, w0}, o);
    json r = io::trajectory_json(tr);
    r["final_state"] = {{"n", tr.back().state.n}, {"w", tr.back().state.w}};
    return r;
}

json do_separatrix(Fields& f, Context& ctx) {
    const ModelParameters p = read_params(f);
    const std::string method = f.choice("method", {"backward", "bisection"}, "backward");
    const int points = f.integer("points", 32);
    const int max_points = f.integer("max_points", 0);
    const bool manifolds = f.boolean("include_manifolds", false);
    ThresholdOptions topts;
    if (method == "bisection") {
        topts.tol = read_tol(f, ctx);
        topts.ode = read_ode(f, ctx);
    } else {
        const BackwardOptions b;
        ctx.tolerances["rel_tol"] = io::format_number(b.rel_tol);
        ctx.tolerances["abs_tol"] = io::format_number(b.abs_tol);
    }
    read_budget(f, ctx);
    f.finish();
    if (points < 2 || points > 1024) throw SchemaError("'points' must lie in [2, 1024]");
    if (max_points < 0 || max_points == 1) throw SchemaError("'max_points' must be 0 (no limit) or at least 2");
    require_in_scope(p);

    std::optional<SeparatrixCurve> curve;
    if (method == "backward") {
        curve = separatrix_backward(p);
    } else {
        std::vector<double> grid;
        for (int k = 1; k <= points; ++k) grid.push_back(p.n_sharp() * k / points);
        const auto w = sweep::minimal_viable_w_grid(p, grid, topts, ctx.cfg.sweep_threads, ctx.deadline);
        std::vector<PopulationState> pts;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (std::isnan(w[i])) throw BudgetExceeded("time budget exceeded during the bisection sweep");
            pts.push_back({grid[i], w[i]});
        }
        curve.emplace(std::move(pts), CurveProvenance::bisection);
    }
    check_deadline(ctx);
    json r = io::separatrix_json(*curve);
    r["points"] = json::array();
    for (const auto& s : thin(curve->points(), max_points)) r["points"].push_back({{"n", s.n}, {"w", s.w}});
    const SaddleData sd = saddle_data(p);
    r["saddle"] = {{"n", sd.e_c.n}, {"w", sd.e_c.w}};
    if (manifolds) {
        ManifoldPair m = unstable_manifold(p);
        m.to_en = thin(m.to_en, max_points);
        m.to_ew = thin(m.to_ew, max_points);
        r["unstable_manifold"] = io::manifold_json(m);
    }
    return r;
}

json do_min_release(Fields& f, Context& ctx) {
    const ModelParameters p = read_params(f);
    std::vector<double> n0s;
    const bool abs = f.has("n0"), frac = f.has("lambdas");
    if (abs && frac) throw SchemaError("give either 'n0' or 'lambdas', not both");
    ThresholdOptions o;
    o.tol = read_tol(f, ctx);
    o.ode = read_ode(f, ctx);
    read_budget(f, ctx);
    if (abs) {
        n0s = f.numbers("n0");
    } else if (frac) {
        for (double l : f.numbers("lambdas")) n0s.push_back(l * p.n_sharp());
    } else {
        n0s = {0.25 * p.n_sharp(), 0.5 * p.n_sharp(), 0.75 * p.n_sharp(), p.n_sharp()};
    }
    f.finish();
    if (n0s.size() > 4096) throw SchemaError("at most 4096 grid values per request");
    require_in_scope(p);
    for (double n0 : n0s) {
        if (!(n0 >= 0.0) || !std::isfinite(n0)) throw ValidationError("n0 values must be finite and >= 0");
    }
    const auto w = sweep::minimal_viable_w_grid(p, n0s, o, ctx.cfg.sweep_threads, ctx.deadline);
    std::vector<io::MinViableRow> rows;
    const double ns = p.n_sharp();
    for (std::size_t i = 0; i < n0s.size(); ++i) {
        if (std::isnan(w[i])) throw BudgetExceeded("time budget exceeded during the threshold sweep");
        rows.push_back({n0s[i] / ns, n0s[i], w[i], w[i] / ns});
    }
    return {{"rows", io::min_viable_json(rows)}};
}

PlanCell read_cell(Fields& cf, const ModelParameters& p) {
    PlanCell c;
    c.n0 = read_n0(cf, p, "n0", "lambda");
    c.tau = cf.number("tau");
    c.budget = cf.integer("budget");
    return c;
}

json do_plan(Fields& f, Context& ctx) {
    const ModelParameters p = read_params(f);
    PlannerOptions o;
    o.tol = read_tol(f, ctx);
    o.stop_rule = stop_rule_from_string(
        f.choice("stop_rule", {"on-separatrix-crossing", "fixed-count"}, "on-separatrix-crossing"));
    o.impulsive.ode = o.threshold.ode = read_ode(f, ctx);
    read_budget(f, ctx);
    std::vector<PlanCell> cells;
    if (f.has("cells")) {
        const json& arr = f.array("cells");
        if (arr.empty() || arr.size() > 256) throw SchemaError("'cells' must hold 1 to 256 entries");
        for (const auto& cj : arr) {
            Fields cf(cj, "cells[]");
            cells.push_back(read_cell(cf, p));
            cf.finish();
        }
    } else {
        cells.push_back(read_cell(f, p));
    }
    f.finish();
    require_in_scope(p);
    if (!p.feasible()) throw ValidationError("release planning requires n_sharp > w_sharp (bistable regime)");
    for (const auto& c : cells) {
        if (!(c.n0 >= 0.0) || !std::isfinite(c.n0)) throw ValidationError("n0 must be a finite value >= 0");
        validate_schedule({0.0, c.tau, c.budget, o.stop_rule});
    }
    const SeparatrixCurve sep = separatrix_backward(p);
    const auto rows = sweep::plan_grid(p, cells, sep, o, ctx.cfg.sweep_threads, ctx.deadline);
    for (const auto& r : rows) {
        if (r.error && *r.error == sweep::kSkippedCell) throw BudgetExceeded("time budget exceeded during the plan sweep");
    }
    for (const auto& r : rows) {
        if (r.error) throw NumericalError(*r.error);
    }
    return {{"rows", io::plan_json(rows, p.n_sharp())}};
}

json do_simulate_impulsive(Fields& f, Context& ctx) {
    const ModelParameters p = read_params(f);
    ImpulsiveOptions o;
    o.ode = read_ode(f, ctx);
    o.margin_factor = f.number("margin_factor", o.margin_factor);
    const bool periodic = f.has("schedule"), manual = f.has("releases");
    if (periodic == manual) throw SchemaError("exactly one of 'schedule' or 'releases' is required");
    const double n0 = f.number("n0");

    ImpulsiveTrajectory tr;
    if (periodic) {
        Fields sf(f.object("schedule"), "schedule");
        ReleaseSchedule s;
        s.lambda_size = read_n0(sf, p, "size", "size_frac");
        s.tau = sf.number("tau");
        s.max_releases = sf.integer("max_releases");
        s.stop_rule = stop_rule_from_string(
            sf.choice("stop_rule", {"on-separatrix-crossing", "fixed-count"}, "on-separatrix-crossing"));
        sf.finish();
        f.finish();
        require_in_scope(p);
        if (!(o.margin_factor >= 0.0)) throw SchemaError("'margin_factor' must be >= 0");
        std::optional<SeparatrixCurve> sep;
        if (s.stop_rule == StopRule::on_separatrix_crossing) sep = separatrix_backward(p);
        tr = simulate_impulsive(p, n0, s, sep ? &*sep : nullptr, o);
    } else {
        const double w0 = f.number("w0", 0.0);
        std::vector<Release> rel;
        const json& arr = f.array("releases");
        if (arr.size() > 10000) throw SchemaError("at most 10000 releases per request");
        for (const auto& rj : arr) {
            Fields rf(rj, "releases[]");
            Release r;
            r.t = rf.number("t");
            r.size = rf.number("size");
            rf.finish();
            rel.push_back(r);
        }
        f.finish();
        tr = simulate_release_list(p, {n0, w0}, std::move(rel), o);
    }
    return io::impulsive_json(tr);
}

using Handler = json (*)(Fields&, Context&);

Handler find_handler(std::string_view endpoint) {
    if (endpoint == "/equilibria") return do_equilibria;
    if (endpoint == "/simulate") return do_simulate;
    if (endpoint == "/separatrix") return do_separatrix;
    if (endpoint == "/min-release") return do_min_release;
    if (endpoint == "/plan") return do_plan;
    if (endpoint == "/simulate-impulsive") return do_simulate_impulsive;
    return nullptr;
}

Response error_response(int status, const std::string& hash, const char* code, const std::string& message) {
    json j;
    j["request_hash"] = hash;
    j["error"] = {{"code", code}, {"message", message}};
    return {status, j.dump()};
}

}  // namespace

Response handle_request(std::string_view endpoint, std::string_view body, const Config& cfg) {
    const auto t0 = Clock::now();
    json req;
    std::string hash;
    try {
        req = json::parse(body.begin(), body.end());
        hash = io::fnv1a_hex(std::string(endpoint) + "\n" + req.dump());
    } catch (const json::exception& e) {
        hash = io::fnv1a_hex(std::string(endpoint) + "\n" + std::string(body));
        return error_response(400, hash, "schema_violation", std::string("malformed JSON: ") + e.what());
    }

    const Handler h = find_handler(endpoint);
    if (!h) return error_response(404, hash, "not_found", "no such endpoint: " + std::string(endpoint));

    Context ctx;
    ctx.cfg = cfg;
    try {
        Fields f(req, "request");
        json result = h(f, ctx);
        json out;
        out["request_hash"] = hash;
        out["result"] = std::move(result);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        out["diagnostics"] = {{"tolerances", ctx.tolerances}, {"runtime_ms", ms}};
        return {200, out.dump()};
    } catch (const SchemaError& e) {
        return error_response(400, hash, "schema_violation", e.what());
    } catch (const InputError& e) {
        return error_response(400, hash, "schema_violation", e.what());
    } catch (const ValidationError& e) {
        return error_response(422, hash, "validation_failed", e.what());
    } catch (const BudgetExceeded& e) {
        return error_response(202, hash, "budget_exceeded", e.what());
    } catch (const NumericalError& e) {
        return error_response(500, hash, "numerical_failure", e.what());
    } catch (const std::exception& e) {
        return error_response(500, hash, "internal_error", e.what());
    }
}

void install_routes(httplib::Server& server, const Config& cfg) {
    server.set_default_headers({
        {"Access-Control-Allow-Origin", cfg.cors_origin},
        {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
        {"Access-Control-Allow-Headers", "Content-Type"},
        {"Access-Control-Max-Age", "600"},
    });
    for (const char* ep : kEndpoints) {
        const std::string path = ep;
        server.Post(path, [path, cfg](const httplib::Request& req, httplib::Response& res) {
            const Response r = handle_request(path, req.body, cfg);
            res.status = r.status;
            res.set_content(r.body, "application/json");
        });
    }
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
#ifdef WOLBACHIA_OPENAPI_PATH
    server.Get("/openapi.json", [](const httplib::Request&, httplib::Response& res) {
        std::ifstream in(WOLBACHIA_OPENAPI_PATH);
        if (!in) {
            res.status = 404;
            return;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        res.set_content(ss.str(), "application/json");
    });
#endif
}

}  // namespace wolbachia::service
