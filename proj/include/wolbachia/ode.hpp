#pragma once

#include <limits>
#include <string>
#include <vector>

#include "wolbachia/detail/dopri5.hpp"
#include "wolbachia/model.hpp"

namespace wolbachia {

struct IntegrationOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;  ///< individuals
    double max_step = std::numeric_limits<double>::infinity();  ///< days
    double t_max = 5000.0;   ///< days
    bool dense_output = false;
    /// Stop once the state is inside the capture ball of e_n or e_w.
    bool stop_on_capture = false;
    /// Capture-ball radius as a fraction of max(n_sharp, w_sharp).
    double capture_radius_factor = 1e-3;
};

/// Throws InputError for nonpositive tolerances or horizon.
void validate_options(const IntegrationOptions& opts);

enum class TerminalReason { reached_t_max, converged_to_attractor, left_domain };
std::string to_string(TerminalReason r);

enum class BasinLabel { to_en, to_ew, undecided };
std::string to_string(BasinLabel b);

struct TrajectorySample {
    double t = 0.0;
    PopulationState state;
};

/// Time-ordered samples (one per accepted step) with optional dense output.
class Trajectory {
public:
    const std::vector<TrajectorySample>& samples() const noexcept { return samples_; }
    const TrajectorySample& front() const { return samples_.front(); }
    const TrajectorySample& back() const { return samples_.back(); }
    std::size_t size() const noexcept { return samples_.size(); }

    TerminalReason reason() const noexcept { return reason_; }
    /// Attractor whose capture ball was entered; undecided otherwise.
    BasinLabel captured() const noexcept { return captured_; }

    bool has_dense_output() const noexcept { return !dense_.empty() || samples_.size() == 1; }
    /// Interpolated state at t in [front().t, back().t]. Requires dense output.
    PopulationState at(double t) const;

private:
    friend class TrajectoryBuilder;
    std::vector<TrajectorySample> samples_;
    std::vector<detail::DenseStep> dense_;
    TerminalReason reason_ = TerminalReason::reached_t_max;
    BasinLabel captured_ = BasinLabel::undecided;
};

/// Integrates the model from s0 over [0, opts.t_max].
Trajectory integrate(const ModelParameters& p, const PopulationState& s0, const IntegrationOptions& opts = {});

/// Same, over [t0, t1]. The returned sample times are absolute.
Trajectory integrate_span(const ModelParameters& p, const PopulationState& s0, double t0, double t1,
                          const IntegrationOptions& opts);

/// Integrates until the state enters the capture ball of e_n or e_w.
BasinLabel classify_basin(const ModelParameters& p, const PopulationState& s0, const IntegrationOptions& opts = {});

/// Which capture ball, if any, contains s.
BasinLabel capture_label(const ModelParameters& p, const PopulationState& s, double capture_radius_factor);

}  // namespace wolbachia
