#pragma once

// Grid sweeps over independent cells. Each kernel has an OpenMP version and a
// serial reference with the same per-cell code path; the two must agree bit
// for bit, which the tests check.

#include <chrono>
#include <optional>
#include <span>
#include <vector>

#include "wolbachia/model.hpp"
#include "wolbachia/ode.hpp"
#include "wolbachia/release.hpp"
#include "wolbachia/threshold.hpp"

namespace wolbachia::sweep {

/// Thread count for sweeps: `requested` if positive, otherwise the OpenMP
/// default; always capped by the WOLBACHIA_THREADS environment variable when
/// it holds a positive integer.
int thread_count(int requested = 0);

/// Cooperative cut-off for long sweeps: cells that have not started when the
/// deadline passes are skipped.
using Deadline = std::optional<std::chrono::steady_clock::time_point>;

std::vector<double> minimal_viable_w_grid(const ModelParameters& p, std::span<const double> n0s,
                                          const ThresholdOptions& opts, int threads = 0);
std::vector<double> minimal_viable_w_grid_serial(const ModelParameters& p, std::span<const double> n0s,
                                                 const ThresholdOptions& opts);

std::vector<BasinLabel> classify_grid(const ModelParameters& p, std::span<const PopulationState> starts,
                                      const IntegrationOptions& opts, int threads = 0);
std::vector<BasinLabel> classify_grid_serial(const ModelParameters& p, std::span<const PopulationState> starts,
                                             const IntegrationOptions& opts);

/// Skipped cells (deadline passed) hold NaN. A failing cell rethrows after
/// the sweep, lowest index first.
std::vector<double> minimal_viable_w_grid(const ModelParameters& p, std::span<const double> n0s,
                                          const ThresholdOptions& opts, int threads, Deadline deadline);

/// Per-cell minimal_release_size against a shared separatrix. Errors and
/// skipped cells are recorded in PlanResult::error.
std::vector<PlanResult> plan_grid(const ModelParameters& p, std::span<const PlanCell> cells,
                                  const SeparatrixCurve& sep, const PlannerOptions& opts, int threads = 0,
                                  Deadline deadline = std::nullopt);
std::vector<PlanResult> plan_grid_serial(const ModelParameters& p, std::span<const PlanCell> cells,
                                         const SeparatrixCurve& sep, const PlannerOptions& opts);

inline constexpr const char* kSkippedCell = "skipped: time budget exceeded";

}  // namespace wolbachia::sweep
