#pragma once

// File formats: parameter files, trajectory / separatrix / table exports.
// Numbers are written in shortest round-trip form so repeated runs are
// byte-identical.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wolbachia/model.hpp"
#include "wolbachia/ode.hpp"
#include "wolbachia/release.hpp"
#include "wolbachia/threshold.hpp"

namespace wolbachia::io {

using nlohmann::json;

/// Reads the six rate fields. Throws InputError on missing or non-numeric
/// fields; unknown keys are ignored.
ModelParameters params_from_json(const json& j);
json params_to_json(const ModelParameters& p);
ModelParameters load_params(const std::string& path);

std::string format_number(double v);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string params_hash(const ModelParameters& p);

json validation_json(const ValidationReport& r);
/// Equilibria, carrying capacities and stability classification.
json equilibria_report(const ModelParameters& p);
std::string equilibria_csv(const ModelParameters& p);

std::string trajectory_csv(const Trajectory& tr);
json trajectory_json(const Trajectory& tr);

std::string separatrix_csv(const SeparatrixCurve& c);
json separatrix_json(const SeparatrixCurve& c);

json manifold_json(const ManifoldPair& m);

/// One row of the single-release table: n0 = lambda * n_sharp.
struct MinViableRow {
    double lambda = 0.0;
    double n0 = 0.0;
    double w_hat = 0.0;
    double lambda_hat = 0.0;  ///< w_hat / n_sharp
};
std::string min_viable_csv(const std::vector<MinViableRow>& rows);
json min_viable_json(const std::vector<MinViableRow>& rows);

/// Periodic-release table: columns lambda, lambda_hat, tau, n plus totals.
std::string plan_csv(const std::vector<PlanResult>& rows, double n_sharp);
json plan_json(const std::vector<PlanResult>& rows, double n_sharp);

json impulsive_json(const ImpulsiveTrajectory& tr);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace wolbachia::io
