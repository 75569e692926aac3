#include "wolbachia/cli.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "wolbachia/report.hpp"
#include "wolbachia/sweep.hpp"

namespace wolbachia::cli {

namespace {

using io::json;

struct Common {
    std::string params_path;
    std::string format = "json";
    std::string out_path;
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--params", c.params_path, "parameter file (JSON); defaults to the wMelPop set")
        ->check(CLI::ExistingFile);
    sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", c.out_path, "output file; stdout when omitted");
}

void add_tolerances(CLI::App* sub, Common& c) {
    sub->add_option("--rel-tol", c.rel_tol, "integrator relative tolerance");
    sub->add_option("--abs-tol", c.abs_tol, "integrator absolute tolerance");
}

ModelParameters load(const Common& c) {
    return c.params_path.empty() ? ModelParameters::wmelpop() : io::load_params(c.params_path);
}

IntegrationOptions ode_options(const Common& c) {
    IntegrationOptions o;
    o.rel_tol = c.rel_tol;
    o.abs_tol = c.abs_tol;
    return o;
}

// Writes the payload and, for file outputs, a <out>.meta.json sidecar.
void emit(const Common& c, const ModelParameters& p, const std::string& command, const json& extra_meta,
          const std::string& payload, std::ostream& out) {
    if (c.out_path.empty()) {
        out << payload;
        return;
    }
    io::write_file_atomic(c.out_path, payload);
    json meta;
    meta["command"] = command;
    meta["format"] = c.format;
    meta["params"] = io::params_to_json(p);
    meta["params_hash"] = io::params_hash(p);
    meta["tolerances"] = {{"rel_tol", io::format_number(c.rel_tol)}, {"abs_tol", io::format_number(c.abs_tol)}};
    for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) meta[it.key()] = it.value();
    io::write_file_atomic(c.out_path + ".meta.json", meta.dump(2) + "\n");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<double> scaled(const std::vector<double>& fractions, double scale) {
    std::vector<double> v;
    v.reserve(fractions.size());
    for (double f : fractions) v.push_back(f * scale);
    return v;
}

// Centered difference of the vector field with step proportional to the state.
Matrix2 fd_jacobian(const ModelParameters& p, const PopulationState& s) {
    Matrix2 m{};
    const double hn = 1e-6 * std::max(s.n, 1.0);
    const double hw = 1e-6 * std::max(s.w, 1.0);
    const Rates a = vector_field_unchecked(p, s.n + hn, s.w), b = vector_field_unchecked(p, s.n - hn, s.w);
    const Rates c = vector_field_unchecked(p, s.n, s.w + hw), d = vector_field_unchecked(p, s.n, s.w - hw);
    m[0][0] = (a.dn - b.dn) / (2 * hn);
    m[1][0] = (a.dw - b.dw) / (2 * hn);
    m[0][1] = (c.dn - d.dn) / (2 * hw);
    m[1][1] = (c.dw - d.dw) / (2 * hw);
    return m;
}

json selfcheck(const ModelParameters& p, std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed);
    const double ns = p.n_sharp(), ws = p.w_sharp();
    std::uniform_real_distribution<double> un(1.0, 2.0 * ns), uw(1.0, 2.0 * ws);

    double worst_fd = 0.0;
    int metzler_fail = 0;
    for (int i = 0; i < samples; ++i) {
        const PopulationState s{un(rng), uw(rng)};
        const Matrix2 j = jacobian(p, s), f = fd_jacobian(p, s);
        double scale = 0.0, diff = 0.0;
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                scale = std::max(scale, std::abs(j[r][c]));
                diff = std::max(diff, std::abs(j[r][c] - f[r][c]));
            }
        }
        worst_fd = std::max(worst_fd, diff / scale);
        const Matrix2 coop = cooperative_jacobian(p, s);
        if (coop[0][1] < 0.0 || coop[1][0] < 0.0) ++metzler_fail;
    }

    int order_fail = 0;
    for (int i = 0; i < samples; ++i) {
        const PopulationState a{un(rng), uw(rng)}, b{un(rng), uw(rng)}, c{un(rng), uw(rng)};
        if (!order_leq_cone(a, a)) ++order_fail;
        if (order_leq_cone(a, b) && order_leq_cone(b, a) && !(a == b)) ++order_fail;
        if (order_leq_cone(a, b) && order_leq_cone(b, c) && !order_leq_cone(a, c)) ++order_fail;
    }

    return {
        {"seed", seed},
        {"samples", samples},
        {"jacobian_fd_max_rel_error", worst_fd},
        {"jacobian_fd_pass", worst_fd <= 1e-6},
        {"metzler_failures", metzler_fail},
        {"cone_order_failures", order_fail},
    };
}

int dispatch(CLI::App& app, std::ostream& out, const std::vector<std::string>& args) {
    Common c;

    auto* eq = app.add_subcommand("equilibria", "equilibria and their stability");
    add_common(eq, c);

    auto* sim = app.add_subcommand("simulate", "integrate the smooth system");
    add_common(sim, c);
    add_tolerances(sim, c);
    double n0 = 0.0, w0 = 0.0, t_max = 5000.0;
    bool stop_on_capture = false;
    sim->add_option("--n0", n0, "initial wild population")->required();
    sim->add_option("--w0", w0, "initial infected population")->required();
    sim->add_option("--t-max", t_max, "horizon, days");
    sim->add_flag("--stop-on-capture", stop_on_capture, "stop once an attractor's capture ball is entered");

    auto* sep = app.add_subcommand("separatrix", "threshold manifold of the coexistence saddle");
    add_common(sep, c);
    std::string method = "backward";
    int grid_points = 32;
    bool manifolds = false;
    sep->add_option("--method", method)->check(CLI::IsMember({"backward", "bisection"}));
    sep->add_option("--points", grid_points, "bisection grid size over (0, n_sharp]")->check(CLI::PositiveNumber);
    sep->add_flag("--manifolds", manifolds, "also emit the unstable manifold (json only)");

    auto* mr = app.add_subcommand("min-release", "minimal viable infected population per wild population");
    add_common(mr, c);
    add_tolerances(mr, c);
    std::vector<double> lambdas{0.25, 0.5, 0.75, 1.0};
    std::vector<double> n0_abs;
    double tol = 1e-6;
    mr->add_option("--lambda", lambdas, "wild populations as fractions of n_sharp");
    mr->add_option("--n0", n0_abs, "wild populations, individuals (overrides --lambda)");
    mr->add_option("--tol", tol, "relative bisection tolerance");

    auto* plan = app.add_subcommand("plan", "minimal periodic release size per (n0, tau) cell");
    add_common(plan, c);
    add_tolerances(plan, c);
    std::vector<double> taus{1.0, 3.0};
    std::vector<int> budgets{30};
    std::string stop_rule = "on-separatrix-crossing";
    plan->add_option("--lambda", lambdas, "wild populations as fractions of n_sharp");
    plan->add_option("--n0", n0_abs, "wild populations, individuals (overrides --lambda)");
    plan->add_option("--tau", taus, "release periods, days");
    plan->add_option("--budget", budgets, "release budget: one value, or one per cell in n0-major order");
    plan->add_option("--tol", tol, "relative tolerance on the release size");
    plan->add_option("--stop-rule", stop_rule)->check(CLI::IsMember({"on-separatrix-crossing", "fixed-count"}));

    auto* imp = app.add_subcommand("simulate-impulsive", "periodic releases from (n0, 0)");
    add_common(imp, c);
    add_tolerances(imp, c);
    double release_size = -1.0, release_frac = -1.0, tau = 1.0;
    int max_releases = 1;
    imp->add_option("--n0", n0, "initial wild population")->required();
    auto* size_opt = imp->add_option("--size", release_size, "release size, individuals");
    imp->add_option("--size-frac", release_frac, "release size as a fraction of n_sharp")->excludes(size_opt);
    imp->add_option("--tau", tau, "release period, days");
    imp->add_option("--max-releases", max_releases, "release budget");
    imp->add_option("--stop-rule", stop_rule)->check(CLI::IsMember({"on-separatrix-crossing", "fixed-count"}));

    auto* chk = app.add_subcommand("selfcheck", "randomized property checks");
    add_common(chk, c);
    std::uint64_t seed = 1;
    int samples = 1000;
    chk->add_option("--seed", seed);
    chk->add_option("--samples", samples)->check(CLI::PositiveNumber);

    app.require_subcommand(1);

    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);

    const ModelParameters p = load(c);
    const bool csv = c.format == "csv";

    if (*eq) {
        equilibria(p);  // throws ValidationError outside scope
        emit(c, p, "equilibria", json::object(), csv ? io::equilibria_csv(p) : dump(io::equilibria_report(p)), out);
        return exit_ok;
    }
    if (*sim) {
        require_in_scope(p);
        IntegrationOptions o = ode_options(c);
        o.t_max = t_max;
        o.stop_on_capture = stop_on_capture;
        const Trajectory tr = integrate(p, {n0, w0}, o);
        json meta = {{"terminal_reason", to_string(tr.reason())}};
        emit(c, p, "simulate", meta, csv ? io::trajectory_csv(tr) : dump(io::trajectory_json(tr)), out);
        return exit_ok;
    }
    if (*sep) {
        require_in_scope(p);
        json meta = {{"method", method}};
        if (method == "backward") {
            const SeparatrixCurve curve = separatrix_backward(p);
            const BackwardOptions b;
            meta["tolerances"] = {{"rel_tol", io::format_number(b.rel_tol)}, {"abs_tol", io::format_number(b.abs_tol)}};
            json j = io::separatrix_json(curve);
            if (manifolds) j["unstable_manifold"] = io::manifold_json(unstable_manifold(p));
            emit(c, p, "separatrix", meta, csv ? io::separatrix_csv(curve) : dump(j), out);
        } else {
            std::vector<double> grid;
            for (int k = 1; k <= grid_points; ++k) grid.push_back(p.n_sharp() * k / grid_points);
            const SeparatrixCurve curve = separatrix_bisection(p, grid);
            meta["points"] = grid_points;
            emit(c, p, "separatrix", meta, csv ? io::separatrix_csv(curve) : dump(io::separatrix_json(curve)), out);
        }
        return exit_ok;
    }
    if (*mr) {
        require_in_scope(p);
        const double ns = p.n_sharp();
        const std::vector<double> n0s = n0_abs.empty() ? scaled(lambdas, ns) : n0_abs;
        ThresholdOptions o;
        o.tol = tol;
        o.ode = ode_options(c);
        const std::vector<double> w = sweep::minimal_viable_w_grid(p, n0s, o);
        std::vector<io::MinViableRow> rows;
        for (std::size_t i = 0; i < n0s.size(); ++i) rows.push_back({n0s[i] / ns, n0s[i], w[i], w[i] / ns});
        json meta = {{"tol", io::format_number(tol)}};
        emit(c, p, "min-release", meta, csv ? io::min_viable_csv(rows) : dump(io::min_viable_json(rows)), out);
        return exit_ok;
    }
    if (*plan) {
        require_in_scope(p);
        const double ns = p.n_sharp();
        const std::vector<double> n0s = n0_abs.empty() ? scaled(lambdas, ns) : n0_abs;
        std::vector<PlanCell> cells = make_plan_cells(n0s, taus, budgets.front());
        if (budgets.size() == cells.size()) {
            for (std::size_t i = 0; i < cells.size(); ++i) cells[i].budget = budgets[i];
        } else if (budgets.size() != 1) {
            throw InputError("--budget takes one value or one per cell (" + std::to_string(cells.size()) + ")");
        }
        PlannerOptions o;
        o.tol = tol;
        o.stop_rule = stop_rule_from_string(stop_rule);
        o.impulsive.ode = ode_options(c);
        o.threshold.ode = ode_options(c);
        const std::vector<PlanResult> rows = tradeoff_table(p, cells, o);
        json meta = {{"tol", io::format_number(tol)}, {"stop_rule", stop_rule}};
        emit(c, p, "plan", meta, csv ? io::plan_csv(rows, ns) : dump(io::plan_json(rows, ns)), out);
        for (const auto& r : rows) {
            if (r.error) return exit_numerical;
        }
        return exit_ok;
    }
    if (*imp) {
        require_in_scope(p);
        ReleaseSchedule s;
        s.lambda_size = release_frac >= 0.0 ? release_frac * p.n_sharp() : release_size;
        if (s.lambda_size < 0.0) throw InputError("one of --size or --size-frac is required");
        s.tau = tau;
        s.max_releases = max_releases;
        s.stop_rule = stop_rule_from_string(stop_rule);
        ImpulsiveOptions o;
        o.ode = ode_options(c);
        std::optional<SeparatrixCurve> curve;
        if (s.stop_rule == StopRule::on_separatrix_crossing) curve = separatrix_backward(p);
        const ImpulsiveTrajectory tr = simulate_impulsive(p, n0, s, curve ? &*curve : nullptr, o);
        std::string payload;
        if (csv) {
            // Segments concatenated; each jump shows up as two rows at the same t.
            payload = "t,N,W\n";
            for (const auto& seg : tr.segments) payload += io::trajectory_csv(seg).substr(6);
        } else {
            payload = dump(io::impulsive_json(tr));
        }
        json meta = {{"outcome", to_string(tr.outcome)}, {"releases_used", tr.releases_used}};
        emit(c, p, "simulate-impulsive", meta, payload, out);
        return exit_ok;
    }
    if (*chk) {
        require_in_scope(p);
        const json r = selfcheck(p, seed, samples);
        emit(c, p, "selfcheck", json::object(), dump(r), out);
        const bool ok = r["jacobian_fd_pass"].get<bool>() && r["metzler_failures"].get<int>() == 0 &&
                        r["cone_order_failures"].get<int>() == 0;
        return ok ? exit_ok : exit_numerical;
    }
    return exit_input;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Wolbachia invasion model: equilibria, trajectories, thresholds and release plans"};
    app.name(args.empty() ? "wolbachia" : args.front());
    try {
        return dispatch(app, out, args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const ValidationError& e) {
        err << "validation failure: " << e.what() << "\n";
        return exit_validation;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
}

}  // namespace wolbachia::cli
