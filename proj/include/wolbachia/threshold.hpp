#pragma once

#include <span>
#include <string>
#include <vector>

#include "wolbachia/model.hpp"
#include "wolbachia/ode.hpp"

namespace wolbachia {

enum class CurveProvenance { backward_integration, bisection };
std::string to_string(CurveProvenance p);

/// Polyline approximation of the threshold manifold (stable manifold of the
/// coexistence saddle), ordered by increasing n.
///
/// Interpolation is monotone piecewise-cubic (Fritsch-Carlson). Outside the
/// sampled range w_of_n extends linearly with the end-segment slope.
class SeparatrixCurve {
public:
    /// Points are sorted by n; points that do not strictly increase n are
    /// dropped. Throws NumericalError if fewer than two points remain.
    SeparatrixCurve(std::vector<PopulationState> points, CurveProvenance provenance);

    const std::vector<PopulationState>& points() const noexcept { return points_; }
    CurveProvenance provenance() const noexcept { return provenance_; }
    double n_min() const noexcept { return points_.front().n; }
    double n_max() const noexcept { return points_.back().n; }

    double w_of_n(double n) const;

    /// True when every adjacent pair has n strictly increasing and w
    /// nondecreasing, i.e. no two consecutive points are cone-comparable.
    bool is_cone_unordered() const noexcept;

    /// s.w > w_of_n(s.n) + margin.
    bool lies_above(const PopulationState& s, double margin) const { return s.w > w_of_n(s.n) + margin; }

    /// Euclidean distance from s to the polyline.
    double distance_to(const PopulationState& s) const noexcept;

private:
    std::vector<PopulationState> points_;
    std::vector<double> slopes_;  // Hermite tangents dw/dn at each point
    CurveProvenance provenance_;
};

struct ThresholdOptions {
    /// Relative tolerance of the bisection on w.
    double tol = 1e-6;
    /// Integrator settings of the basin oracle.
    IntegrationOptions ode{};
};

/// Smallest infected population w such that (n0, w) is attracted to e_w.
/// Bisection over [0, w_hi] with classify_basin as oracle; w_hi is found by
/// doubling from w_sharp. Returns 0 for n0 == 0 (any positive release
/// succeeds on the infected axis).
double minimal_viable_w(const ModelParameters& p, double n0, const ThresholdOptions& opts = {});

struct BackwardOptions {
    /// Total arc length of the curve, individuals. <= 0 picks 50 * max(n_sharp, w_sharp).
    double arc_budget = 0.0;
    /// Maximum spacing between stored points, individuals. <= 0 picks
    /// 1e-3 * max(n_sharp, w_sharp).
    double step = 0.0;
    /// Seed offset along the stable eigenvector, relative to n_c + w_c.
    double seed_offset = 1e-6;
    /// Upper branch stops once n > n_extent * n_sharp ...
    double n_extent = 2.0;
    /// ... or w > w_extent * max(n_sharp, w_sharp).
    double w_extent = 10.0;
    double rel_tol = 1e-11;
    double abs_tol = 1e-10;
};

/// Threshold manifold by time-reversed integration from the saddle along its
/// stable eigenvector. The lower branch converges to the origin, which is
/// appended as the first point; the upper branch runs until it leaves the
/// extent box or exhausts the arc budget.
SeparatrixCurve separatrix_backward(const ModelParameters& p, const BackwardOptions& opts = {});

/// Threshold manifold sampled by minimal_viable_w at each grid value.
/// Runs the grid through the parallel sweep kernel.
SeparatrixCurve separatrix_bisection(const ModelParameters& p, std::span<const double> n_grid,
                                     const ThresholdOptions& opts = {});

/// The two heteroclinic branches of the saddle's unstable manifold.
struct ManifoldPair {
    std::vector<PopulationState> to_en;
    std::vector<PopulationState> to_ew;
};

struct UnstableOptions {
    double seed_offset = 1e-6;
    /// Maximum time step between stored points, days.
    double max_step = 0.25;
    IntegrationOptions ode{};
};

ManifoldPair unstable_manifold(const ModelParameters& p, const UnstableOptions& opts = {});

/// Saddle data shared by the manifold constructions: e_c and its unit
/// stable/unstable eigenvectors. Throws ValidationError when e_c is absent or
/// not a saddle.
struct SaddleData {
    PopulationState e_c;
    double lambda_stable = 0.0;
    double lambda_unstable = 0.0;
    std::array<double, 2> v_stable{};
    std::array<double, 2> v_unstable{};
};

SaddleData saddle_data(const ModelParameters& p);

}  // namespace wolbachia
