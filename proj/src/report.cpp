#include "wolbachia/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace wolbachia::io {

namespace {

const char* const kParamFields[] = {"rho_n", "rho_w", "alpha_n", "alpha_w", "beta_n", "beta_w"};

double* field_ptr(ModelParameters& p, std::string_view name) {
    if (name == "rho_n") return &p.rho_n;
    if (name == "rho_w") return &p.rho_w;
    if (name == "alpha_n") return &p.alpha_n;
    if (name == "alpha_w") return &p.alpha_w;
    if (name == "beta_n") return &p.beta_n;
    return &p.beta_w;
}

json state_json(const PopulationState& s) { return {{"n", s.n}, {"w", s.w}}; }

std::string join_csv(std::initializer_list<std::string> cells) {
    std::string line;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) line += ',';
        line += c;
        first = false;
    }
    line += '\n';
    return line;
}

}  // namespace

ModelParameters params_from_json(const json& j) {
    if (!j.is_object()) throw InputError("parameters must be a JSON object");
    ModelParameters p;
    for (const char* name : kParamFields) {
        const auto it = j.find(name);
        if (it == j.end()) throw InputError(std::string("parameters: missing field '") + name + "'");
        if (!it->is_number()) throw InputError(std::string("parameters: field '") + name + "' must be a number");
        *field_ptr(p, name) = it->get<double>();
    }
    return p;
}

json params_to_json(const ModelParameters& p) {
    json j = json::object();
    j["rho_n"] = p.rho_n;
    j["rho_w"] = p.rho_w;
    j["alpha_n"] = p.alpha_n;
    j["alpha_w"] = p.alpha_w;
    j["beta_n"] = p.beta_n;
    j["beta_w"] = p.beta_w;
    return j;
}

ModelParameters load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open parameter file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("parameter file '" + path + "': " + e.what());
    }
    return params_from_json(j);
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string params_hash(const ModelParameters& p) { return fnv1a_hex(params_to_json(p).dump()); }

json validation_json(const ValidationReport& r) {
    return {
        {"positive", r.positive},
        {"survival_n", r.survival_n},
        {"survival_w", r.survival_w},
        {"coexistence", r.coexistence},
        {"violations", r.violations},
    };
}

json equilibria_report(const ModelParameters& p) {
    const EquilibriumSet eq = equilibria(p);
    const StabilityReport st = classify_stability(p);
    json j;
    j["params"] = params_to_json(p);
    j["params_hash"] = params_hash(p);
    j["validation"] = validation_json(validate_params(p));
    j["n_sharp"] = eq.n_sharp;
    j["w_sharp"] = eq.w_sharp;
    j["feasible"] = eq.e_c.has_value();
    json list = json::array();
    for (const auto& e : st.entries) {
        json rec;
        rec["name"] = e.name;
        rec["n"] = e.point.n;
        rec["w"] = e.point.w;
        rec["classification"] = to_string(e.classification);
        json ev = json::array();
        for (const auto& v : e.eigenvalues) ev.push_back({{"re", v.real()}, {"im", v.imag()}});
        rec["eigenvalues"] = ev;
        json vecs = json::array();
        for (const auto& v : e.eigenvectors) vecs.push_back({v[0], v[1]});
        rec["eigenvectors"] = vecs;
        if (e.unexpected_complex) rec["unexpected_complex"] = true;
        list.push_back(rec);
    }
    j["equilibria"] = list;
    return j;
}

std::string equilibria_csv(const ModelParameters& p) {
    const json rep = equilibria_report(p);
    std::string out = "name,n,w,classification,eig1_re,eig1_im,eig2_re,eig2_im\n";
    for (const auto& e : rep["equilibria"]) {
        std::string ev[4] = {"", "", "", ""};
        const auto& vals = e["eigenvalues"];
        for (std::size_t k = 0; k < vals.size() && k < 2; ++k) {
            ev[2 * k] = format_number(vals[k]["re"].get<double>());
            ev[2 * k + 1] = format_number(vals[k]["im"].get<double>());
        }
        out += join_csv({e["name"].get<std::string>(), format_number(e["n"].get<double>()),
                         format_number(e["w"].get<double>()), e["classification"].get<std::string>(), ev[0], ev[1],
                         ev[2], ev[3]});
    }
    return out;
}

std::string trajectory_csv(const Trajectory& tr) {
    std::string out = "t,N,W\n";
    for (const auto& s : tr.samples()) {
        out += join_csv({format_number(s.t), format_number(s.state.n), format_number(s.state.w)});
    }
    return out;
}

json trajectory_json(const Trajectory& tr) {
    json samples = json::array();
    for (const auto& s : tr.samples()) samples.push_back({{"t", s.t}, {"N", s.state.n}, {"W", s.state.w}});
    return {
        {"terminal_reason", to_string(tr.reason())},
        {"captured", to_string(tr.captured())},
        {"samples", samples},
    };
}

std::string separatrix_csv(const SeparatrixCurve& c) {
    std::string out = "n,w\n";
    for (const auto& p : c.points()) out += join_csv({format_number(p.n), format_number(p.w)});
    return out;
}

json separatrix_json(const SeparatrixCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points()) pts.push_back(state_json(p));
    return {
        {"provenance", to_string(c.provenance())},
        {"cone_unordered", c.is_cone_unordered()},
        {"points", pts},
    };
}

json manifold_json(const ManifoldPair& m) {
    json a = json::array(), b = json::array();
    for (const auto& p : m.to_en) a.push_back(state_json(p));
    for (const auto& p : m.to_ew) b.push_back(state_json(p));
    return {{"to_en", a}, {"to_ew", b}};
}

std::string min_viable_csv(const std::vector<MinViableRow>& rows) {
    std::string out = "lambda,lambda_hat,n0,w_hat\n";
    for (const auto& r : rows) {
        out += join_csv({format_number(r.lambda), format_number(r.lambda_hat), format_number(r.n0),
                         format_number(r.w_hat)});
    }
    return out;
}

json min_viable_json(const std::vector<MinViableRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        arr.push_back({{"lambda", r.lambda}, {"lambda_hat", r.lambda_hat}, {"n0", r.n0}, {"w_hat", r.w_hat}});
    }
    return arr;
}

std::string plan_csv(const std::vector<PlanResult>& rows, double n_sharp) {
    std::string out = "lambda,lambda_hat,tau,n,budget,release_size,total,total_over_n_sharp,duration_days,error\n";
    for (const auto& r : rows) {
        if (r.error) {
            out += join_csv({format_number(r.n0 / n_sharp), "", format_number(r.tau), "", std::to_string(r.budget),
                             "", "", "", "", '"' + *r.error + '"'});
            continue;
        }
        out += join_csv({format_number(r.n0 / n_sharp), format_number(r.lambda_hat / n_sharp), format_number(r.tau),
                         std::to_string(r.releases_used), std::to_string(r.budget), format_number(r.lambda_hat),
                         format_number(r.total_released), format_number(r.total_released / n_sharp),
                         format_number(r.duration_days), ""});
    }
    return out;
}

json plan_json(const std::vector<PlanResult>& rows, double n_sharp) {
    json arr = json::array();
    for (const auto& r : rows) {
        json j;
        j["lambda"] = r.n0 / n_sharp;
        j["n0"] = r.n0;
        j["tau"] = r.tau;
        j["budget"] = r.budget;
        if (r.error) {
            j["error"] = *r.error;
        } else {
            j["lambda_hat"] = r.lambda_hat / n_sharp;
            j["release_size"] = r.lambda_hat;
            j["n"] = r.releases_used;
            j["total"] = r.total_released;
            j["total_over_n_sharp"] = r.total_released / n_sharp;
            j["duration_days"] = r.duration_days;
        }
        arr.push_back(j);
    }
    return arr;
}

json impulsive_json(const ImpulsiveTrajectory& tr) {
    json jumps = json::array();
    for (const auto& j : tr.jumps) {
        jumps.push_back({{"t", j.t}, {"N", j.n}, {"W_before", j.w_before}, {"W_after", j.w_after}});
    }
    json segs = json::array();
    for (const auto& s : tr.segments) segs.push_back(trajectory_json(s));
    return {
        {"outcome", to_string(tr.outcome)},
        {"releases_used", tr.releases_used},
        {"final_state", state_json(tr.final_state)},
        {"jumps", jumps},
        {"segments", segs},
    };
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + tmp + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw InputError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw InputError("cannot move output into place at '" + path + "'");
    }
}

}  // namespace wolbachia::io
