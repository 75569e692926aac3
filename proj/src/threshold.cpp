#include "wolbachia/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wolbachia/sweep.hpp"

namespace wolbachia {

std::string to_string(CurveProvenance p) {
    return p == CurveProvenance::backward_integration ? "backward-integration" : "bisection";
}

// ---------------------------------------------------------------- curve

SeparatrixCurve::SeparatrixCurve(std::vector<PopulationState> points, CurveProvenance provenance)
    : provenance_(provenance) {
    std::stable_sort(points.begin(), points.end(),
                     [](const PopulationState& a, const PopulationState& b) { return a.n < b.n; });
    points_.reserve(points.size());
    for (const auto& pt : points) {
        if (!std::isfinite(pt.n) || !std::isfinite(pt.w)) continue;
        if (points_.empty() || pt.n > points_.back().n) points_.push_back(pt);
    }
    if (points_.size() < 2) throw NumericalError("separatrix curve needs at least two distinct points");

    // Fritsch-Carlson tangents.
    const std::size_t m = points_.size();
    std::vector<double> delta(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        delta[i] = (points_[i + 1].w - points_[i].w) / (points_[i + 1].n - points_[i].n);
    }
    slopes_.assign(m, 0.0);
    slopes_.front() = delta.front();
    slopes_.back() = delta.back();
    for (std::size_t i = 1; i + 1 < m; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            slopes_[i] = 0.0;
            continue;
        }
        const double h0 = points_[i].n - points_[i - 1].n;
        const double h1 = points_[i + 1].n - points_[i].n;
        const double w0 = 2.0 * h1 + h0;
        const double w1 = h1 + 2.0 * h0;
        slopes_[i] = (w0 + w1) / (w0 / delta[i - 1] + w1 / delta[i]);
    }
}

double SeparatrixCurve::w_of_n(double n) const {
    const auto& pts = points_;
    if (n <= pts.front().n) {
        const double slope = (pts[1].w - pts[0].w) / (pts[1].n - pts[0].n);
        return pts.front().w + slope * (n - pts.front().n);
    }
    if (n >= pts.back().n) {
        const auto k = pts.size() - 1;
        const double slope = (pts[k].w - pts[k - 1].w) / (pts[k].n - pts[k - 1].n);
        return pts.back().w + slope * (n - pts.back().n);
    }
    const auto it = std::upper_bound(pts.begin(), pts.end(), n,
                                     [](double v, const PopulationState& s) { return v < s.n; });
    const auto i = static_cast<std::size_t>(it - pts.begin()) - 1;
    const double h = pts[i + 1].n - pts[i].n;
    const double t = (n - pts[i].n) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * pts[i].w + h10 * h * slopes_[i] + h01 * pts[i + 1].w + h11 * h * slopes_[i + 1];
}

bool SeparatrixCurve::is_cone_unordered() const noexcept {
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        if (!(points_[i + 1].n > points_[i].n) || points_[i + 1].w < points_[i].w) return false;
    }
    return true;
}

double SeparatrixCurve::distance_to(const PopulationState& s) const noexcept {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        const double ax = points_[i].n, ay = points_[i].w;
        const double dx = points_[i + 1].n - ax, dy = points_[i + 1].w - ay;
        const double len2 = dx * dx + dy * dy;
        double u = len2 > 0.0 ? ((s.n - ax) * dx + (s.w - ay) * dy) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        best = std::min(best, std::hypot(ax + u * dx - s.n, ay + u * dy - s.w));
    }
    return best;
}

// ---------------------------------------------------------------- saddle

SaddleData saddle_data(const ModelParameters& p) {
    const EquilibriumSet eq = equilibria(p);
    if (!eq.e_c) throw ValidationError("coexistence equilibrium absent (requires n_sharp > w_sharp)");
    const Eigen2 eig = eigen_decompose(jacobian(p, *eq.e_c));
    if (!eig.real || !(eig.values[0].real() < 0.0) || !(eig.values[1].real() > 0.0)) {
        throw ValidationError("coexistence equilibrium is not a saddle");
    }
    SaddleData d;
    d.e_c = *eq.e_c;
    d.lambda_stable = eig.values[0].real();
    d.lambda_unstable = eig.values[1].real();
    d.v_stable = (*eig.vectors)[0];
    d.v_unstable = (*eig.vectors)[1];
    return d;
}

// ---------------------------------------------------------------- bisection

double minimal_viable_w(const ModelParameters& p, double n0, const ThresholdOptions& opts) {
    require_in_scope(p);
    if (!(n0 >= 0.0) || !std::isfinite(n0)) throw ValidationError("minimal_viable_w: n0 must be a finite value >= 0");
    if (!(opts.tol > 0.0)) throw InputError("minimal_viable_w: tolerance must be positive");
    if (!p.feasible()) throw ValidationError("minimal_viable_w: requires n_sharp > w_sharp (bistable regime)");
    if (n0 == 0.0) return 0.0;

    auto label = [&](double w) { return classify_basin(p, {n0, w}, opts.ode); };

    double lo = 0.0;
    double hi = p.w_sharp();
    const double hi_limit = 1e6 * std::max(p.n_sharp(), p.w_sharp());
    while (label(hi) != BasinLabel::to_ew) {
        lo = hi;
        hi *= 2.0;
        if (hi > hi_limit) {
            std::ostringstream os;
            os << "minimal_viable_w: no upper bracket found below " << hi_limit << " for n0=" << n0;
            throw NumericalError(os.str());
        }
    }
    while (hi - lo > opts.tol * hi) {
        const double mid = 0.5 * (lo + hi);
        const auto lbl = label(mid);
        if (lbl == BasinLabel::to_ew) {
            hi = mid;
        } else if (lbl == BasinLabel::to_en) {
            lo = mid;
        } else {
            // Too close to the manifold to settle within t_max; probe either side.
            const double q = 0.25 * (hi - lo);
            const auto below = label(mid - q);
            const auto above = label(mid + q);
            if (below == BasinLabel::to_ew) {
                hi = mid - q;
            } else if (above == BasinLabel::to_en) {
                lo = mid + q;
            } else if (below == BasinLabel::to_en && above == BasinLabel::to_ew) {
                lo = mid - q;
                hi = mid + q;
            } else {
                std::ostringstream os;
                os.precision(17);
                os << "minimal_viable_w: basin oracle undecided on [" << lo << ", " << hi << "] at n0=" << n0;
                throw NumericalError(os.str());
            }
            if (hi - lo <= opts.tol * hi) break;
        }
    }
    return hi;
}

SeparatrixCurve separatrix_bisection(const ModelParameters& p, std::span<const double> n_grid,
                                     const ThresholdOptions& opts) {
    const std::vector<double> w = sweep::minimal_viable_w_grid(p, n_grid, opts);
    std::vector<PopulationState> pts;
    pts.reserve(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) pts.push_back({n_grid[i], w[i]});
    return SeparatrixCurve(std::move(pts), CurveProvenance::bisection);
}

// ---------------------------------------------------------------- backward integration

namespace {

struct BranchResult {
    std::vector<PopulationState> points;
    double arc = 0.0;
};

BranchResult trace_branch(const ModelParameters& p, detail::Vec2 seed, double arc_budget, double spacing,
                          double n_box, double w_box, double origin_eps, const BackwardOptions& opts) {
    BranchResult out;
    out.points.push_back({seed.x, seed.y});
    detail::StepperSettings st;
    st.rel_tol = opts.rel_tol;
    st.abs_tol = opts.abs_tol;
    auto reversed = [&p](detail::Vec2 y) {
        const Rates r = vector_field_unchecked(p, y.x, y.y);
        return detail::Vec2{-r.dn, -r.dw};
    };
    detail::Vec2 prev = seed;
    auto on_step = [&](const detail::DenseStep& ds, double, detail::Vec2 y) {
        const double chord = std::hypot(y.x - prev.x, y.y - prev.y);
        const int pieces = std::max(1, static_cast<int>(std::ceil(chord / spacing)));
        for (int k = 1; k < pieces; ++k) {
            const auto v = ds.eval(ds.t0 + ds.h * static_cast<double>(k) / pieces);
            out.points.push_back({std::max(v.x, 0.0), std::max(v.y, 0.0)});
        }
        out.points.push_back({y.x, y.y});
        out.arc += chord;
        prev = y;
        if (out.arc >= arc_budget) return true;
        if (y.x > n_box || y.y > w_box) return true;
        if (y.x + y.y < origin_eps) return true;
        return false;
    };
    // Backward time horizon: the lower branch reaches origin_eps in tens of
    // days; the upper branch leaves the box in a few days.
    detail::integrate_dopri5(reversed, 0.0, seed, 1.0e4, st, on_step);
    return out;
}

}  // namespace

SeparatrixCurve separatrix_backward(const ModelParameters& p, const BackwardOptions& opts) {
    const SaddleData sd = saddle_data(p);
    const double scale = std::max(p.n_sharp(), p.w_sharp());
    const double arc_budget = opts.arc_budget > 0.0 ? opts.arc_budget : 50.0 * scale;
    const double spacing = opts.step > 0.0 ? opts.step : 1e-3 * scale;
    const double delta = opts.seed_offset * (sd.e_c.n + sd.e_c.w);
    const double n_box = opts.n_extent * p.n_sharp();
    const double w_box = opts.w_extent * scale;
    const double origin_eps = 1e-9 * scale;

    const detail::Vec2 up{sd.e_c.n + delta * sd.v_stable[0], sd.e_c.w + delta * sd.v_stable[1]};
    const detail::Vec2 down{sd.e_c.n - delta * sd.v_stable[0], sd.e_c.w - delta * sd.v_stable[1]};

    // The stable direction has positive slope, so "up" runs away from the
    // origin. Split the arc budget evenly; whichever branch stops early
    // leaves its remainder unused.
    const BranchResult upper = trace_branch(p, up, 0.5 * arc_budget, spacing, n_box, w_box, origin_eps, opts);
    const BranchResult lower = trace_branch(p, down, 0.5 * arc_budget, spacing, n_box, w_box, origin_eps, opts);

    std::vector<PopulationState> pts;
    pts.reserve(upper.points.size() + lower.points.size() + 2);
    if (lower.points.back().n + lower.points.back().w < origin_eps) pts.push_back({0.0, 0.0});
    pts.insert(pts.end(), lower.points.rbegin(), lower.points.rend());
    pts.push_back(sd.e_c);
    pts.insert(pts.end(), upper.points.begin(), upper.points.end());
    return SeparatrixCurve(std::move(pts), CurveProvenance::backward_integration);
}

// ---------------------------------------------------------------- unstable manifold

ManifoldPair unstable_manifold(const ModelParameters& p, const UnstableOptions& opts) {
    const SaddleData sd = saddle_data(p);
    const double delta = opts.seed_offset * (sd.e_c.n + sd.e_c.w);
    IntegrationOptions o = opts.ode;
    o.stop_on_capture = true;
    o.max_step = std::min(o.max_step, opts.max_step);

    auto branch = [&](double sign, BasinLabel expected) {
        const PopulationState seed{sd.e_c.n + sign * delta * sd.v_unstable[0],
                                   sd.e_c.w + sign * delta * sd.v_unstable[1]};
        const Trajectory tr = integrate(p, seed, o);
        if (tr.reason() != TerminalReason::converged_to_attractor || tr.captured() != expected) {
            throw NumericalError("unstable manifold branch did not reach " + to_string(expected));
        }
        std::vector<PopulationState> pts;
        pts.reserve(tr.size() + 1);
        pts.push_back(sd.e_c);
        for (const auto& s : tr.samples()) pts.push_back(s.state);
        return pts;
    };
    // v_unstable has a nonnegative n component: +v heads to e_n, -v to e_w.
    ManifoldPair mp;
    mp.to_en = branch(+1.0, BasinLabel::to_en);
    mp.to_ew = branch(-1.0, BasinLabel::to_ew);
    return mp;
}

}  // namespace wolbachia
