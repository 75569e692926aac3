#include "wolbachia/release.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wolbachia/sweep.hpp"

namespace wolbachia {

std::string to_string(StopRule r) {
    return r == StopRule::on_separatrix_crossing ? "on-separatrix-crossing" : "fixed-count";
}

StopRule stop_rule_from_string(const std::string& s) {
    if (s == "on-separatrix-crossing") return StopRule::on_separatrix_crossing;
    if (s == "fixed-count") return StopRule::fixed_count;
    throw InputError("unknown stop rule '" + s + "' (expected on-separatrix-crossing or fixed-count)");
}

std::string to_string(ReleaseOutcome o) {
    switch (o) {
        case ReleaseOutcome::replacement: return "replacement";
        case ReleaseOutcome::failure: return "failure";
        case ReleaseOutcome::budget_exhausted: return "budget-exhausted";
    }
    return "failure";
}

void validate_schedule(const ReleaseSchedule& s) {
    if (!(s.lambda_size >= 0.0) || !std::isfinite(s.lambda_size)) {
        throw ValidationError("release size must be a finite value >= 0");
    }
    if (!(s.tau > 0.0) || !std::isfinite(s.tau)) throw ValidationError("release period tau must be positive");
    if (s.max_releases < 1) throw ValidationError("max_releases must be at least 1");
}

namespace {

void check_start(double n0) {
    if (!(n0 >= 0.0) || !std::isfinite(n0)) throw ValidationError("n0 must be a finite value >= 0");
}

/// Release-free run to capture from (t, s); appends the segment and returns
/// the capture label.
BasinLabel run_tail(const ModelParameters& p, const PopulationState& s, double t, const ImpulsiveOptions& opts,
                    ImpulsiveTrajectory& out) {
    IntegrationOptions tail = opts.ode;
    tail.stop_on_capture = true;
    Trajectory tr = integrate_span(p, s, t, t + opts.ode.t_max, tail);
    const BasinLabel lbl =
        tr.reason() == TerminalReason::converged_to_attractor ? tr.captured() : BasinLabel::undecided;
    out.final_state = tr.back().state;
    out.segments.push_back(std::move(tr));
    return lbl;
}

}  // namespace

ImpulsiveTrajectory simulate_impulsive(const ModelParameters& p, double n0, const ReleaseSchedule& sched,
                                       const SeparatrixCurve* sep, const ImpulsiveOptions& opts) {
    validate_schedule(sched);
    require_in_scope(p);
    check_start(n0);
    validate_options(opts.ode);
    const bool use_sep = sched.stop_rule == StopRule::on_separatrix_crossing;
    if (use_sep && sep == nullptr) throw InputError("separatrix-crossing stop rule needs a separatrix curve");
    const double margin = opts.margin_factor * p.w_sharp();

    IntegrationOptions seg = opts.ode;
    seg.stop_on_capture = false;

    ImpulsiveTrajectory out;
    double t = 0.0;
    PopulationState state{n0, sched.lambda_size};
    out.jumps.push_back({0.0, n0, 0.0, sched.lambda_size});
    out.releases_used = 1;

    bool crossed = false;
    for (;;) {
        crossed = use_sep && sep->lies_above(state, margin);
        if (crossed || out.releases_used >= sched.max_releases) break;
        Trajectory tr = integrate_span(p, state, t, t + sched.tau, seg);
        state = tr.back().state;
        t += sched.tau;
        out.segments.push_back(std::move(tr));
        JumpEvent j{t, state.n, state.w, state.w + sched.lambda_size};
        state.w = j.w_after;
        out.jumps.push_back(j);
        ++out.releases_used;
    }

    const BasinLabel lbl = run_tail(p, state, t, opts, out);
    if (lbl == BasinLabel::to_ew) {
        out.outcome = ReleaseOutcome::replacement;
    } else if (use_sep && !crossed) {
        out.outcome = ReleaseOutcome::budget_exhausted;
    } else {
        out.outcome = ReleaseOutcome::failure;
    }
    return out;
}

ImpulsiveTrajectory simulate_release_list(const ModelParameters& p, const PopulationState& start,
                                          std::vector<Release> releases, const ImpulsiveOptions& opts) {
    require_in_scope(p);
    check_start(start.n);
    if (!(start.w >= 0.0) || !std::isfinite(start.w)) throw ValidationError("w0 must be a finite value >= 0");
    validate_options(opts.ode);
    for (const auto& r : releases) {
        if (!(r.t >= 0.0) || !std::isfinite(r.t)) throw ValidationError("release times must be finite and >= 0");
        if (!(r.size >= 0.0) || !std::isfinite(r.size)) throw ValidationError("release sizes must be finite and >= 0");
    }
    std::stable_sort(releases.begin(), releases.end(), [](const Release& a, const Release& b) { return a.t < b.t; });

    IntegrationOptions seg = opts.ode;
    seg.stop_on_capture = false;

    ImpulsiveTrajectory out;
    double t = 0.0;
    PopulationState state = start;
    std::size_t i = 0;
    while (i < releases.size()) {
        const double tr_time = releases[i].t;
        double size = 0.0;
        int count = 0;
        while (i < releases.size() && releases[i].t == tr_time) {
            size += releases[i].size;
            ++count;
            ++i;
        }
        if (tr_time > t) {
            Trajectory tr = integrate_span(p, state, t, tr_time, seg);
            state = tr.back().state;
            t = tr_time;
            out.segments.push_back(std::move(tr));
        }
        JumpEvent j{t, state.n, state.w, state.w + size};
        state.w = j.w_after;
        out.jumps.push_back(j);
        out.releases_used += count;
    }
    const BasinLabel lbl = run_tail(p, state, t, opts, out);
    out.outcome = lbl == BasinLabel::to_ew ? ReleaseOutcome::replacement : ReleaseOutcome::failure;
    return out;
}

PlanResult minimal_release_size(const ModelParameters& p, double n0, double tau, int max_releases,
                                const SeparatrixCurve& sep, const PlannerOptions& opts) {
    require_in_scope(p);
    check_start(n0);
    if (!p.feasible()) throw ValidationError("release planning requires n_sharp > w_sharp (bistable regime)");
    if (!(opts.tol > 0.0)) throw InputError("planner tolerance must be positive");

    PlanResult r;
    r.n0 = n0;
    r.tau = tau;
    r.budget = max_releases;

    ReleaseSchedule sched{0.0, tau, max_releases, opts.stop_rule};
    validate_schedule(sched);

    const double single = minimal_viable_w(p, n0, opts.threshold);
    if (single == 0.0) {
        r.lambda_hat = 0.0;
        r.releases_used = 1;
        return r;
    }

    auto run = [&](double lambda) {
        sched.lambda_size = lambda;
        return simulate_impulsive(p, n0, sched, &sep, opts.impulsive);
    };

    double lo = 0.0;
    double hi = single;
    ImpulsiveTrajectory best = run(hi);
    if (best.outcome != ReleaseOutcome::replacement) {
        std::ostringstream os;
        os << "minimal_release_size: single-release size " << single << " did not achieve replacement";
        throw NumericalError(os.str());
    }
    while (hi - lo > opts.tol * hi) {
        const double mid = 0.5 * (lo + hi);
        ImpulsiveTrajectory trial = run(mid);
        if (trial.outcome == ReleaseOutcome::replacement) {
            hi = mid;
            best = std::move(trial);
        } else {
            lo = mid;
        }
    }
    r.lambda_hat = hi;
    r.releases_used = best.releases_used;
    r.total_released = hi * best.releases_used;
    r.duration_days = tau * best.releases_used;
    return r;
}

PlanResult minimal_release_size(const ModelParameters& p, double n0, double tau, int max_releases,
                                const PlannerOptions& opts) {
    const SeparatrixCurve sep = separatrix_backward(p);
    return minimal_release_size(p, n0, tau, max_releases, sep, opts);
}

int minimal_release_count(const ModelParameters& p, double n0, double lambda, double tau, int max_releases,
                          const ImpulsiveOptions& opts) {
    validate_schedule({lambda, tau, max_releases, StopRule::fixed_count});
    // Replacement is not monotone in the count in general, so scan upward.
    for (int k = 1; k <= max_releases; ++k) {
        const ReleaseSchedule s{lambda, tau, k, StopRule::fixed_count};
        if (simulate_impulsive(p, n0, s, nullptr, opts).outcome == ReleaseOutcome::replacement) return k;
    }
    return 0;
}

std::vector<PlanCell> make_plan_cells(std::span<const double> n0_grid, std::span<const double> tau_grid,
                                      int budget) {
    std::vector<PlanCell> cells;
    cells.reserve(n0_grid.size() * tau_grid.size());
    for (double n0 : n0_grid) {
        for (double tau : tau_grid) cells.push_back({n0, tau, budget});
    }
    return cells;
}

std::vector<PlanResult> tradeoff_table(const ModelParameters& p, std::span<const PlanCell> cells,
                                       const PlannerOptions& opts, int threads) {
    if (cells.empty()) throw InputError("tradeoff_table: grid is empty");
    const SeparatrixCurve sep = separatrix_backward(p);
    return sweep::plan_grid(p, cells, sep, opts, threads);
}

std::vector<PlanResult> tradeoff_table(const ModelParameters& p, std::span<const double> n0_grid,
                                       std::span<const double> tau_grid, int budget, const PlannerOptions& opts,
                                       int threads) {
    const auto cells = make_plan_cells(n0_grid, tau_grid, budget);
    return tradeoff_table(p, cells, opts, threads);
}

}  // namespace wolbachia
