#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wolbachia/model.hpp"
#include "wolbachia/ode.hpp"
#include "wolbachia/threshold.hpp"

namespace wolbachia {

enum class StopRule {
    /// Stop releasing at the first release after which the state lies above
    /// the separatrix by the configured margin.
    on_separatrix_crossing,
    /// Always perform max_releases releases.
    fixed_count,
};
std::string to_string(StopRule r);
StopRule stop_rule_from_string(const std::string& s);

/// Periodic releases of `lambda_size` infected insects every `tau` days,
/// starting at t = 0 (the t = 0 release counts).
struct ReleaseSchedule {
    double lambda_size = 0.0;  ///< individuals
    double tau = 1.0;          ///< days
    int max_releases = 1;
    StopRule stop_rule = StopRule::on_separatrix_crossing;
};

void validate_schedule(const ReleaseSchedule& s);

struct JumpEvent {
    double t = 0.0;
    double n = 0.0;
    double w_before = 0.0;  ///< left limit W(t-)
    double w_after = 0.0;   ///< right limit W(t+)
};

enum class ReleaseOutcome {
    replacement,       ///< ended in the capture ball of e_w
    failure,           ///< ended elsewhere (e_n or undecided)
    budget_exhausted,  ///< separatrix rule: all releases spent without crossing, and no replacement
};
std::string to_string(ReleaseOutcome o);

struct ImpulsiveTrajectory {
    /// Smooth pieces between releases, then the release-free tail.
    std::vector<Trajectory> segments;
    std::vector<JumpEvent> jumps;
    ReleaseOutcome outcome = ReleaseOutcome::failure;
    int releases_used = 0;
    PopulationState final_state;
};

struct ImpulsiveOptions {
    /// Separatrix margin for the stop rule, as a fraction of w_sharp.
    double margin_factor = 1e-3;
    /// Integrator settings; t_max bounds the release-free tail.
    IntegrationOptions ode{};
};

/// Periodic impulsive system. Initial condition is (n0, lambda_size).
/// `sep` is required for StopRule::on_separatrix_crossing.
ImpulsiveTrajectory simulate_impulsive(const ModelParameters& p, double n0, const ReleaseSchedule& sched,
                                       const SeparatrixCurve* sep, const ImpulsiveOptions& opts = {});

/// One manually placed release.
struct Release {
    double t = 0.0;     ///< days
    double size = 0.0;  ///< individuals
};

/// Arbitrary release list (what-if planning). Starts at (n0, w0) at t = 0;
/// releases are applied in time order, simultaneous ones summed. After the
/// last release the system runs release-free to capture.
ImpulsiveTrajectory simulate_release_list(const ModelParameters& p, const PopulationState& start,
                                          std::vector<Release> releases, const ImpulsiveOptions& opts = {});

struct PlanResult {
    double n0 = 0.0;
    double tau = 0.0;
    int budget = 0;
    double lambda_hat = 0.0;      ///< individuals
    int releases_used = 0;
    double total_released = 0.0;  ///< releases_used * lambda_hat
    double duration_days = 0.0;   ///< releases_used * tau
    std::optional<std::string> error;
};

struct PlannerOptions {
    double tol = 1e-6;  ///< relative tolerance on lambda
    StopRule stop_rule = StopRule::on_separatrix_crossing;
    ImpulsiveOptions impulsive{};
    ThresholdOptions threshold{};
};

/// Smallest release size that achieves replacement within `max_releases`
/// periodic releases. Bisection over [0, single-release size].
PlanResult minimal_release_size(const ModelParameters& p, double n0, double tau, int max_releases,
                                const SeparatrixCurve& sep, const PlannerOptions& opts = {});

/// Convenience overload computing the separatrix by backward integration.
PlanResult minimal_release_size(const ModelParameters& p, double n0, double tau, int max_releases,
                                const PlannerOptions& opts = {});

/// Fewest fixed-count periodic releases of size `lambda` that achieve
/// replacement from (n0, 0); 0 when max_releases is not enough.
int minimal_release_count(const ModelParameters& p, double n0, double lambda, double tau, int max_releases,
                          const ImpulsiveOptions& opts = {});

struct PlanCell {
    double n0 = 0.0;
    double tau = 0.0;
    int budget = 1;
};

/// Cells of the cartesian product n0_grid x tau_grid with a common budget.
std::vector<PlanCell> make_plan_cells(std::span<const double> n0_grid, std::span<const double> tau_grid, int budget);

/// Per-cell minimal_release_size; cell errors are recorded, not thrown.
std::vector<PlanResult> tradeoff_table(const ModelParameters& p, std::span<const PlanCell> cells,
                                       const PlannerOptions& opts = {}, int threads = 0);

std::vector<PlanResult> tradeoff_table(const ModelParameters& p, std::span<const double> n0_grid,
                                       std::span<const double> tau_grid, int budget, const PlannerOptions& opts = {},
                                       int threads = 0);

}  // namespace wolbachia
