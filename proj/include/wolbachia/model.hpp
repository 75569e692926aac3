#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "wolbachia/error.hpp"

namespace wolbachia {

/// Rates of the two-population model. Time unit is the day; the competition
/// coefficients are per individual per day.
struct ModelParameters {
    double rho_n = 0.0;    ///< fecundity, uninfected
    double rho_w = 0.0;    ///< fecundity, infected
    double alpha_n = 0.0;  ///< natural mortality, uninfected
    double alpha_w = 0.0;  ///< natural mortality, infected
    double beta_n = 0.0;   ///< competition, uninfected
    double beta_w = 0.0;   ///< competition, infected

    /// Carrying capacity of the wild population alone.
    double n_sharp() const noexcept { return (rho_n - alpha_n) / beta_n; }
    /// Carrying capacity of the infected population alone.
    double w_sharp() const noexcept { return (rho_w - alpha_w) / beta_w; }
    /// Coexistence equilibrium exists (strictly positive) iff n_sharp > w_sharp.
    bool feasible() const noexcept { return n_sharp() > w_sharp(); }

    /// Aedes aegypti with the wMelPop strain.
    static ModelParameters wmelpop() noexcept;

    friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

/// A phase point (N, W). Both coordinates are population sizes in individuals.
struct PopulationState {
    double n = 0.0;
    double w = 0.0;

    friend bool operator==(const PopulationState&, const PopulationState&) = default;
};

/// Time derivative of a PopulationState, individuals per day.
struct Rates {
    double dn = 0.0;
    double dw = 0.0;
};

using Matrix2 = std::array<std::array<double, 2>, 2>;

struct ValidationReport {
    bool positive = false;
    bool survival_n = false;  ///< rho_n > alpha_n
    bool survival_w = false;  ///< rho_w > alpha_w
    bool coexistence = false; ///< n_sharp > w_sharp
    std::vector<std::string> violations;

    /// Positivity and survival hold. Coexistence is reported separately since
    /// infeasible regimes remain simulable.
    bool in_scope() const noexcept { return positive && survival_n && survival_w; }
    bool all_hold() const noexcept { return in_scope() && coexistence; }
};

ValidationReport validate_params(const ModelParameters& p);

/// Throws ValidationError unless positivity and both survival conditions hold.
void require_in_scope(const ModelParameters& p);

/// Right-hand side of the ODE. The frequency factor N/(N+W) is taken as 0 at
/// the origin so (0, 0) is a fixed point. Throws ValidationError on negative
/// components.
Rates vector_field(const ModelParameters& p, const PopulationState& s);

/// Same formula without the domain check. Used by integrators, which may
/// probe stage points a rounding error outside the quadrant.
Rates vector_field_unchecked(const ModelParameters& p, double n, double w) noexcept;

/// Jacobian of the vector field. Undefined at the origin (throws
/// ValidationError there).
Matrix2 jacobian(const ModelParameters& p, const PopulationState& s);

/// Jacobian of the cooperative system obtained by flipping the sign of W,
/// i.e. diag(1,-1) * J * diag(1,-1). Off-diagonal entries are nonnegative.
Matrix2 cooperative_jacobian(const ModelParameters& p, const PopulationState& s);

double determinant(const Matrix2& m) noexcept;
double trace(const Matrix2& m) noexcept;

struct EquilibriumSet {
    PopulationState e0;
    PopulationState e_n;
    PopulationState e_w;
    std::optional<PopulationState> e_c;
    double n_sharp = 0.0;
    double w_sharp = 0.0;
};

/// Closed-form steady states. e_c is present iff n_sharp > w_sharp.
EquilibriumSet equilibria(const ModelParameters& p);

enum class Classification { nodal_attractor, saddle, source, degenerate };

std::string to_string(Classification c);

/// Spectral data at one equilibrium.
struct EquilibriumStability {
    std::string name;
    PopulationState point;
    Classification classification = Classification::degenerate;
    /// Empty for e0, whose classification is assigned by rule.
    std::vector<std::complex<double>> eigenvalues;
    /// Unit eigenvectors matching `eigenvalues`, present only for real spectra.
    std::vector<std::array<double, 2>> eigenvectors;
    /// Complex pair where theory predicts a real spectrum.
    bool unexpected_complex = false;
};

struct StabilityReport {
    std::vector<EquilibriumStability> entries;  // e0, e_n, e_w, then e_c if present

    const EquilibriumStability* find(const std::string& name) const noexcept;
};

/// Eigen-decomposition of a real 2x2 matrix. Real eigenvalues are sorted
/// ascending; eigenvectors are normalised with a nonnegative first nonzero
/// component.
struct Eigen2 {
    std::array<std::complex<double>, 2> values;
    std::optional<std::array<std::array<double, 2>, 2>> vectors;  // present when real
    bool real = true;
};

Eigen2 eigen_decompose(const Matrix2& m);

StabilityReport classify_stability(const ModelParameters& p);

// Partial order induced by the cone R+ x R-: a <= b iff a.n <= b.n and a.w >= b.w.
bool order_leq_cone(const PopulationState& a, const PopulationState& b) noexcept;
/// a <= b and a != b.
bool order_less_cone(const PopulationState& a, const PopulationState& b) noexcept;
/// a.n < b.n and a.w > b.w (difference in the interior of the cone).
bool order_strong_cone(const PopulationState& a, const PopulationState& b) noexcept;

}  // namespace wolbachia
