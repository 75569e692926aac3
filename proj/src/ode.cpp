#include "wolbachia/ode.hpp"

#include <algorithm>
#include <cmath>

namespace wolbachia {

void validate_options(const IntegrationOptions& opts) {
    if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0)) throw InputError("integration tolerances must be positive");
    if (!(opts.t_max > 0.0)) throw InputError("t_max must be positive");
    if (!(opts.max_step > 0.0)) throw InputError("max_step must be positive");
    if (!(opts.capture_radius_factor > 0.0)) throw InputError("capture radius factor must be positive");
}

std::string to_string(TerminalReason r) {
    switch (r) {
        case TerminalReason::reached_t_max: return "reached_t_max";
        case TerminalReason::converged_to_attractor: return "converged_to_attractor";
        case TerminalReason::left_domain: return "left_domain";
    }
    return "reached_t_max";
}

std::string to_string(BasinLabel b) {
    switch (b) {
        case BasinLabel::to_en: return "ToEN";
        case BasinLabel::to_ew: return "ToEW";
        case BasinLabel::undecided: return "Undecided";
    }
    return "Undecided";
}

PopulationState Trajectory::at(double t) const {
    if (samples_.empty()) throw InputError("empty trajectory");
    if (t < samples_.front().t || t > samples_.back().t) throw InputError("time outside trajectory span");
    if (samples_.size() == 1) return samples_.front().state;
    if (dense_.empty()) throw InputError("trajectory was integrated without dense output");
    auto it = std::lower_bound(dense_.begin(), dense_.end(), t,
                               [](const detail::DenseStep& d, double v) { return d.t1() < v; });
    if (it == dense_.end()) it = std::prev(dense_.end());
    if (t == it->t1()) {
        // Exact step end: return the stored (possibly axis-snapped) sample.
        const auto idx = static_cast<std::size_t>(it - dense_.begin()) + 1;
        return samples_[idx].state;
    }
    const auto v = it->eval(t);
    return {std::max(v.x, 0.0), std::max(v.y, 0.0)};
}

BasinLabel capture_label(const ModelParameters& p, const PopulationState& s, double capture_radius_factor) {
    const double ns = p.n_sharp();
    const double ws = p.w_sharp();
    const double r = capture_radius_factor * std::max(ns, ws);
    if (std::hypot(s.n - ns, s.w) <= r) return BasinLabel::to_en;
    if (std::hypot(s.n, s.w - ws) <= r) return BasinLabel::to_ew;
    return BasinLabel::undecided;
}

class TrajectoryBuilder {
public:
    static Trajectory run(const ModelParameters& p, const PopulationState& s0, double t0, double t1,
                          const IntegrationOptions& opts) {
        validate_options(opts);
        require_in_scope(p);
        if (s0.n < 0.0 || s0.w < 0.0) throw ValidationError("initial state must lie in the nonnegative quadrant");
        if (!std::isfinite(s0.n) || !std::isfinite(s0.w)) throw ValidationError("initial state must be finite");

        Trajectory tr;
        tr.samples_.push_back({t0, s0});
        if (opts.stop_on_capture) {
            const auto lbl = capture_label(p, s0, opts.capture_radius_factor);
            if (lbl != BasinLabel::undecided) {
                tr.captured_ = lbl;
                tr.reason_ = TerminalReason::converged_to_attractor;
                return tr;
            }
        }

        detail::StepperSettings st;
        st.rel_tol = opts.rel_tol;
        st.abs_tol = opts.abs_tol;
        st.max_step = opts.max_step;
        auto field = [&p](detail::Vec2 y) {
            const Rates r = vector_field_unchecked(p, y.x, y.y);
            return detail::Vec2{r.dn, r.dw};
        };
        auto on_step = [&](const detail::DenseStep& ds, double t, detail::Vec2 y) {
            if (opts.dense_output) tr.dense_.push_back(ds);
            tr.samples_.push_back({t, {y.x, y.y}});
            if (opts.stop_on_capture) {
                const auto lbl = capture_label(p, {y.x, y.y}, opts.capture_radius_factor);
                if (lbl != BasinLabel::undecided) {
                    tr.captured_ = lbl;
                    return true;
                }
            }
            return false;
        };
        const auto res = detail::integrate_dopri5(field, t0, {s0.n, s0.w}, t1, st, on_step);
        switch (res.end) {
            case detail::StepLoopEnd::reached_end: tr.reason_ = TerminalReason::reached_t_max; break;
            case detail::StepLoopEnd::stopped: tr.reason_ = TerminalReason::converged_to_attractor; break;
            case detail::StepLoopEnd::left_domain: tr.reason_ = TerminalReason::left_domain; break;
        }
        if (!opts.stop_on_capture) {
            const auto lbl = capture_label(p, tr.back().state, opts.capture_radius_factor);
            tr.captured_ = lbl;
        }
        return tr;
    }
};

Trajectory integrate(const ModelParameters& p, const PopulationState& s0, const IntegrationOptions& opts) {
    return TrajectoryBuilder::run(p, s0, 0.0, opts.t_max, opts);
}

Trajectory integrate_span(const ModelParameters& p, const PopulationState& s0, double t0, double t1,
                          const IntegrationOptions& opts) {
    if (!(t1 > t0)) throw InputError("integrate_span: t1 must exceed t0");
    return TrajectoryBuilder::run(p, s0, t0, t1, opts);
}

BasinLabel classify_basin(const ModelParameters& p, const PopulationState& s0, const IntegrationOptions& opts) {
    IntegrationOptions o = opts;
    o.stop_on_capture = true;
    o.dense_output = false;
    const Trajectory tr = integrate(p, s0, o);
    return tr.reason() == TerminalReason::converged_to_attractor ? tr.captured() : BasinLabel::undecided;
}

}  // namespace wolbachia
